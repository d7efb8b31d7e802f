#pragma once

#include <filesystem>
#include <string>

#include "json.hpp"
#include "kaczmarz/analysis.hpp"
#include "kaczmarz/bounds.hpp"
#include "kaczmarz/problems.hpp"
#include "kaczmarz/solvers.hpp"

namespace kaczmarz::io {

/// 17 significant digits; "nan" / "inf" / "-inf" for non-finite values.
std::string format_double(double v);

nlohmann::json system_to_json(const problems::LinearSystem& sys);
/// Throws IoError on missing fields or inconsistent shapes.
problems::LinearSystem system_from_json(const nlohmann::json& j);

std::string read_text_file(const std::filesystem::path& path);
/// Creates parent directories as needed. Throws IoError.
void write_text_file(const std::filesystem::path& path, const std::string& content);

void write_system(const std::filesystem::path& path, const problems::LinearSystem& sys);
problems::LinearSystem read_system(const std::filesystem::path& path);

/// Header `step,block_step,selected,error,residual,elapsed_ns`; selected rows joined by ';'.
std::string trace_csv(const solvers::IterationTrace& trace, bool with_timing = true);

/// Header `t,envelope,kind`.
std::string bound_csv(const bounds::BoundReport& report);
nlohmann::json bound_json(const bounds::BoundReport& report);

nlohmann::json coherence_json(const analysis::CoherenceReport& report);
/// Header `bin_start_deg,bin_end_deg,count`.
std::string histogram_csv(const analysis::AngleHistogram& hist);

} // namespace kaczmarz::io
