#pragma once

#include <cstddef>
#include <map>
#include <string>
#include <vector>

#include "kaczmarz/linalg.hpp"
#include "kaczmarz/samplers.hpp"

namespace kaczmarz::bounds {

using linalg::DenseMatrix;
using linalg::OrthonormalBasis;
using linalg::Vector;

/// envelope[t] bounds ‖x_t − x*‖² at iteration (or cycle) t.
struct BoundReport {
    std::string kind;
    Vector envelope;
    std::map<std::string, double> scalars;
    std::map<std::string, Vector> series;
    std::vector<std::string> warnings;
};

/// (1 − κ(A)⁻²)^t · z0_sq, t = 0..p_max. Throws RankDeficient.
BoundReport strohmer_bound(const DenseMatrix& a, double z0_sq, std::size_t p_max);

/// [1 − det(XᵀX)]^q · z0_sq with X_i = A_iᵀ L_i^{-T}, L_i L_iᵀ = A_i A_iᵀ.
/// A must be square.
BoundReport galantai_bound(const DenseMatrix& a, const samplers::BlockPartition& partition, double z0_sq,
                           std::size_t q_max);

/// Which principal angle stands for the angle between two subspaces.
enum class AngleMode {
    friedrichs, // smallest angle after discarding the common subspace
    smallest    // smallest principal angle, zero whenever the subspaces meet
};

/// (1 − Π_{j<k} sin²θ_j)^q · z0_sq, θ_j the angle between the null space of
/// block j and the intersection of the null spaces of blocks j+1..k.
/// `row_bases[j]` spans the rows of block j.
BoundReport ssw_bound(const std::vector<OrthonormalBasis>& row_bases, double z0_sq, std::size_t q_max,
                      AngleMode mode = AngleMode::friedrichs);

/// Convenience: row bases from a matrix and partition, then ssw_bound.
BoundReport ssw_bound(const DenseMatrix& a, const samplers::BlockPartition& partition, double z0_sq,
                      std::size_t q_max, AngleMode mode = AngleMode::friedrichs);

/// (1 − p/n)^β for β = 0..beta_max; series "asymptote" holds e^{−βp/n}.
BoundReport rkos_expected_decay(std::size_t n, std::size_t p, std::size_t beta_max);

struct WelchBound {
    double paper_form = 0.0; // (M − N) / (N (M − 1))
    double sqrt_form = 0.0;  // √((M − N) / (N (M − 1)))
};
WelchBound welch_bound(std::size_t m, std::size_t n);

struct BoundComparison {
    BoundReport singular_value_form; // (1 − σ_min²/Σσ²)^{qM}
    BoundReport determinant_form;    // (1 − Πσ²)^q
    std::vector<bool> determinant_tighter;
    double prod_sigma_sq = 0.0;
    double det_aat = 0.0;
};

/// Square, full-rank A with unit rows. Envelopes are per-cycle factors (z0_sq = 1).
BoundComparison compare_bounds(const DenseMatrix& a, std::size_t q_max);

} // namespace kaczmarz::bounds
