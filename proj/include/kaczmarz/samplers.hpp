#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "kaczmarz/linalg.hpp"
#include "kaczmarz/random.hpp"

namespace kaczmarz::samplers {

using linalg::DenseMatrix;
using linalg::Vector;

enum class PolicyKind { cyclic, uniform, norm_squared, angle_pair, custom_weights };

struct SamplerPolicy {
    PolicyKind kind = PolicyKind::cyclic;
    Vector weights; // custom_weights only

    static SamplerPolicy cyclic() { return {PolicyKind::cyclic, {}}; }
    static SamplerPolicy uniform() { return {PolicyKind::uniform, {}}; }
    static SamplerPolicy norm_squared() { return {PolicyKind::norm_squared, {}}; }
    static SamplerPolicy angle_pair() { return {PolicyKind::angle_pair, {}}; }
    /// Throws InvalidArgument unless weights are non-negative with a positive sum.
    static SamplerPolicy custom(Vector weights);

    std::string tag() const;
};

/// Parses "cyclic" | "uniform" | "norm2" | "angle" | "weights:<path-to-json-array>".
SamplerPolicy parse_policy(const std::string& text);

/// Disjoint row-index blocks, one cycle's worth.
struct BlockPartition {
    std::vector<std::vector<std::size_t>> blocks;

    std::size_t total_rows() const;
    /// Every index unique and < m.
    bool is_valid(std::size_t m) const;
};

/// Singleton blocks {0}, {1}, …, {m−1}.
BlockPartition singleton_partition(std::size_t m);
/// Consecutive blocks of size p in natural row order (last block ragged).
BlockPartition contiguous_partition(std::size_t m, std::size_t p);

std::size_t cyclic_next(std::size_t step, std::size_t m);

/// w_i = ‖a_i‖². Throws ZeroRow.
Vector row_norm_weights(const DenseMatrix& a);

/// Row-normalised Gramian ÂÂᵀ, used to speed up angle_weights.
DenseMatrix normalized_gramian(const DenseMatrix& a);

/// w_g = 1 − cos²θ_{f,g}; weights at or below 1e-15 are treated as parallel (0).
/// Throws AllParallel when no admissible row remains, ZeroRow on a zero row.
Vector angle_weights(const DenseMatrix& a, std::size_t f, const DenseMatrix* gram = nullptr);

/// Index i with probability w_i / Σw. Throws DegenerateWeights.
std::size_t sample_weighted(std::span<const double> weights, Rng& rng);

/// Random permutation of 0..m−1 cut into ⌈m/p⌉ blocks; the last may be short.
BlockPartition random_partition(std::size_t m, std::size_t p, Rng& rng);

/// Precomputed cumulative table for repeated draws from fixed weights.
class DiscreteSampler {
public:
    explicit DiscreteSampler(std::span<const double> weights);
    std::size_t operator()(Rng& rng) const;
    std::size_t size() const noexcept { return cumulative_.size(); }

private:
    std::vector<double> cumulative_;
};

} // namespace kaczmarz::samplers
