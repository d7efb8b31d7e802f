#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "kaczmarz/linalg.hpp"
#include "kaczmarz/problems.hpp"
#include "kaczmarz/random.hpp"
#include "kaczmarz/samplers.hpp"

namespace kaczmarz::solvers {

using linalg::DenseMatrix;
using linalg::Vector;
using problems::LinearSystem;
using samplers::BlockPartition;
using samplers::SamplerPolicy;

struct StopRule {
    /// Row-steps; 0 means 10·M (ten sweeps' worth of rows).
    std::size_t max_steps = 0;
    /// Stop once ‖Ax − b‖ ≤ residual_tol·‖b‖.
    double residual_tol = 1e-10;
    /// Stop once ‖x − x*‖ ≤ error_tol·‖x*‖ (only when x* is known).
    double error_tol = 0.0;

    std::size_t resolved_max_steps(std::size_t m) const { return max_steps == 0 ? 10 * m : max_steps; }
};

enum class StopReason { max_steps, residual_tol, error_tol };
std::string to_string(StopReason reason);

struct TraceRecord {
    std::size_t step = 0;       // rows touched so far
    std::size_t block_step = 0; // loop iterations (blocks, RKHA pairs, or rows)
    std::vector<std::size_t> selected;
    double error = 0.0;         // ‖x − x*‖₂, NaN without x*
    double residual = 0.0;      // ‖Ax − b‖₂
    std::int64_t elapsed_ns = 0;
};

struct IterationTrace {
    std::vector<TraceRecord> records;
    std::vector<Vector> iterates; // only with SolverOptions::record_iterates
    Vector solution;
    std::uint64_t seed = 0;
    std::string policy;
    StopReason stop_reason = StopReason::max_steps;

    const TraceRecord& last() const { return records.back(); }
};

enum class RkosVariant { gram_schmidt, qr };
/// How RKOS picks blocks: a fresh random partition of the rows every cycle,
/// or an independent draw per block (first row ∝ ‖a‖², the rest uniform).
enum class BlockSelection { partition_per_cycle, with_replacement };

struct SolverOptions {
    std::optional<Vector> x0;
    bool record_iterates = false;
    /// Reproduce the two-step RKHA update literally, with the second residual
    /// taken at x_k rather than x_{k+1}. Not a projection; not monotone.
    bool rkha_literal = false;
    BlockSelection rkos_selection = BlockSelection::partition_per_cycle;
    /// Precompute the normalized Gramian for angle sampling up to this many rows.
    std::size_t gram_precompute_limit = 4096;
    std::size_t max_degenerate_retries = 10;
};

/// Orthogonal projection of x onto {y : ⟨a_i, y⟩ = b_i}. Throws ZeroRow.
Vector kaczmarz_step(std::span<const double> x, std::span<const double> a_i, double b_i);

/// Single-row driver; cyclic, uniform, norm2, custom and angle (each row drawn
/// by angle weight relative to the previous one) policies.
IterationTrace run_kaczmarz(const LinearSystem& sys, const SamplerPolicy& policy, const StopRule& stop,
                            Rng& rng, const SolverOptions& options = {});

/// Randomized Kaczmarz with hyperplane angles: two row-steps per draw.
IterationTrace run_rkha(const LinearSystem& sys, const StopRule& stop, Rng& rng,
                        const SolverOptions& options = {});

/// x + A_iᵀ (A_i A_iᵀ)⁻¹ (b_i − A_i x), Cholesky with pseudo-inverse fallback.
Vector block_kaczmarz_step(std::span<const double> x, const DenseMatrix& a_block,
                           std::span<const double> b_block);

IterationTrace run_block_kaczmarz(const LinearSystem& sys, const BlockPartition& partition,
                                  const StopRule& stop, const SolverOptions& options = {});

/// Projects x_prev onto the affine set of the block using a Gram-Schmidt basis
/// of its rows; the basis coefficients of the solution come from b alone.
Vector rkos_project(std::span<const double> x_prev, std::span<const Vector> block_rows,
                    std::span<const double> block_b);

/// Same projection through a Householder QR of A_iᵀ = U_i R_i:
/// x + U_i (R_i R_iᵀ)⁻¹ R_i (b_i − A_i x).
Vector rkos_project_qr(std::span<const double> x_prev, const DenseMatrix& a_block,
                       std::span<const double> block_b);

IterationTrace run_rkos(const LinearSystem& sys, std::size_t p, const StopRule& stop, Rng& rng,
                        RkosVariant variant = RkosVariant::gram_schmidt,
                        const SolverOptions& options = {});

/// ε_x = U_i (R_i R_iᵀ)⁻¹ R_i ε_b: the measurement noise carried into the block estimate.
Vector rkos_noise_propagation(const DenseMatrix& a_block, std::span<const double> eps_b);

} // namespace kaczmarz::solvers
