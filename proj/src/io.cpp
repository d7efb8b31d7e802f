#include "kaczmarz/io.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include <fmt/format.h>

#include "kaczmarz/errors.hpp"

namespace kaczmarz::io {

using nlohmann::json;
using problems::LinearSystem;

std::string format_double(double v) {
    if (std::isnan(v)) return "nan";
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    return fmt::format("{:.17g}", v);
}

json system_to_json(const LinearSystem& sys) {
    json j;
    j["m"] = sys.m();
    j["n"] = sys.n();
    j["kind"] = problems::to_string(sys.kind);
    j["seed"] = sys.seed;
    j["noisy"] = sys.noisy;
    j["a"] = std::vector<double>(sys.a.data().begin(), sys.a.data().end());
    j["b"] = sys.b;
    if (sys.x_star) j["x_star"] = *sys.x_star;
    if (sys.geometry) {
        const auto& g = *sys.geometry;
        j["geometry"] = {{"grid_side", g.grid_side},
                         {"num_angles", g.num_angles},
                         {"num_detectors", g.num_detectors},
                         {"mode", g.mode == problems::BeamMode::parallel ? "parallel" : "fan"},
                         {"source_radius", g.source_radius},
                         {"angular_range", g.angular_range}};
    }
    return j;
}

LinearSystem system_from_json(const json& j) {
    try {
        LinearSystem sys;
        const auto m = j.at("m").get<std::size_t>();
        const auto n = j.at("n").get<std::size_t>();
        const auto a = j.at("a").get<std::vector<double>>();
        if (a.size() != m * n) throw IoError("system file: 'a' holds " + std::to_string(a.size()) + " values, expected m*n");
        sys.a = linalg::DenseMatrix(m, n);
        std::copy(a.begin(), a.end(), sys.a.data().begin());
        sys.b = j.at("b").get<std::vector<double>>();
        if (sys.b.size() != m) throw IoError("system file: 'b' length differs from m");
        if (j.contains("x_star") && !j["x_star"].is_null()) {
            auto x_star = j["x_star"].get<std::vector<double>>();
            if (x_star.size() != n) throw IoError("system file: 'x_star' length differs from n");
            sys.x_star = std::move(x_star);
        }
        sys.kind = j.contains("kind") ? problems::parse_system_kind(j["kind"].get<std::string>())
                                      : problems::SystemKind::custom;
        sys.seed = j.value("seed", std::uint64_t{0});
        sys.noisy = j.value("noisy", false);
        if (j.contains("geometry") && !j["geometry"].is_null()) {
            const json& g = j["geometry"];
            problems::BeamGeometry geo;
            geo.grid_side = g.at("grid_side").get<std::size_t>();
            geo.num_angles = g.at("num_angles").get<std::size_t>();
            geo.num_detectors = g.at("num_detectors").get<std::size_t>();
            geo.mode = g.at("mode").get<std::string>() == "fan" ? problems::BeamMode::fan : problems::BeamMode::parallel;
            geo.source_radius = g.value("source_radius", 0.0);
            geo.angular_range = g.value("angular_range", 0.0);
            sys.geometry = geo;
        }
        return sys;
    } catch (const json::exception& e) {
        throw IoError(std::string("system file: ") + e.what());
    } catch (const InvalidArgument& e) {
        throw IoError(std::string("system file: ") + e.what());
    }
}

std::string read_text_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    if (in.bad()) throw IoError("cannot read " + path.string());
    return ss.str();
}

void write_text_file(const std::filesystem::path& path, const std::string& content) {
    std::error_code ec;
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path(), ec);
    if (ec) throw IoError("cannot create directory " + path.parent_path().string() + ": " + ec.message());
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open " + path.string() + " for writing");
    out << content;
    out.flush();
    if (!out) throw IoError("cannot write " + path.string());
}

void write_system(const std::filesystem::path& path, const LinearSystem& sys) {
    write_text_file(path, system_to_json(sys).dump() + "\n");
}

LinearSystem read_system(const std::filesystem::path& path) {
    const std::string text = read_text_file(path);
    json j;
    try {
        j = json::parse(text);
    } catch (const json::exception& e) {
        throw IoError(path.string() + ": " + e.what());
    }
    return system_from_json(j);
}

std::string trace_csv(const solvers::IterationTrace& trace, bool with_timing) {
    std::string out = "step,block_step,selected,error,residual,elapsed_ns\n";
    for (const auto& r : trace.records) {
        out += fmt::format("{},{},{},{},{},{}\n", r.step, r.block_step, fmt::join(r.selected, ";"),
                           format_double(r.error), format_double(r.residual), with_timing ? r.elapsed_ns : 0);
    }
    return out;
}

std::string bound_csv(const bounds::BoundReport& report) {
    std::string out = "t,envelope,kind\n";
    for (std::size_t t = 0; t < report.envelope.size(); ++t) {
        out += fmt::format("{},{},{}\n", t, format_double(report.envelope[t]), report.kind);
    }
    return out;
}

json bound_json(const bounds::BoundReport& report) {
    json j;
    j["kind"] = report.kind;
    j["envelope"] = report.envelope;
    j["inputs"] = json::object();
    for (const auto& [k, v] : report.scalars) j["inputs"][k] = v;
    for (const auto& [k, v] : report.series) j["inputs"][k] = v;
    j["warnings"] = report.warnings;
    return j;
}

json coherence_json(const analysis::CoherenceReport& r) {
    return {{"m", r.m},
            {"n", r.n},
            {"mutual_coherence", r.mutual_coherence},
            {"mean_gram", r.mean_gram},
            {"median_gram", r.median_gram},
            {"welch_paper_form", r.welch_paper},
            {"welch_sqrt_form", r.welch_sqrt}};
}

std::string histogram_csv(const analysis::AngleHistogram& h) {
    std::string out = "bin_start_deg,bin_end_deg,count\n";
    for (std::size_t b = 0; b < h.counts.size(); ++b) {
        out += fmt::format("{},{},{}\n", format_double(h.edges[b]), format_double(h.edges[b + 1]), h.counts[b]);
    }
    return out;
}

} // namespace kaczmarz::io
