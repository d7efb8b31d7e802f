#include "kaczmarz/solvers.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <numeric>

#include "kaczmarz/errors.hpp"

namespace kaczmarz::solvers {

using linalg::axpy;
using linalg::dot;
using linalg::norm2;

std::string to_string(StopReason reason) {
    switch (reason) {
    case StopReason::max_steps: return "max_steps";
    case StopReason::residual_tol: return "residual_tol";
    case StopReason::error_tol: return "error_tol";
    }
    return "max_steps";
}

namespace {

using Clock = std::chrono::steady_clock;

/// Owns the iterate bookkeeping shared by every driver: records, stop rule, timing.
class Recorder {
public:
    Recorder(const LinearSystem& sys, const StopRule& stop, const SolverOptions& options,
             std::uint64_t seed, std::string policy)
        : sys_(sys), options_(options), max_steps_(stop.resolved_max_steps(sys.m())),
          residual_limit_(stop.residual_tol * norm2(sys.b)), start_(Clock::now()) {
        if (sys.x_star) error_limit_ = stop.error_tol * norm2(*sys.x_star);
        trace_.seed = seed;
        trace_.policy = std::move(policy);
    }

    /// Appends a record for x; returns true when the run must stop.
    bool record(const Vector& x, std::size_t step, std::size_t block_step, std::vector<std::size_t> selected) {
        TraceRecord r;
        r.step = step;
        r.block_step = block_step;
        r.selected = std::move(selected);
        r.error = sys_.x_star ? norm2(linalg::subtract(x, *sys_.x_star))
                              : std::numeric_limits<double>::quiet_NaN();
        r.residual = norm2(linalg::subtract(linalg::multiply(sys_.a, x), sys_.b));
        r.elapsed_ns = std::chrono::duration_cast<std::chrono::nanoseconds>(Clock::now() - start_).count();
        if (options_.record_iterates) trace_.iterates.push_back(x);
        trace_.records.push_back(std::move(r));

        const TraceRecord& last = trace_.records.back();
        if (last.residual <= residual_limit_) {
            trace_.stop_reason = StopReason::residual_tol;
            return true;
        }
        if (sys_.x_star && last.error <= error_limit_) {
            trace_.stop_reason = StopReason::error_tol;
            return true;
        }
        if (step >= max_steps_) {
            trace_.stop_reason = StopReason::max_steps;
            return true;
        }
        return false;
    }

    IterationTrace finish(Vector x) {
        trace_.solution = std::move(x);
        return std::move(trace_);
    }

private:
    const LinearSystem& sys_;
    const SolverOptions& options_;
    std::size_t max_steps_;
    double residual_limit_;
    double error_limit_ = 0.0;
    Clock::time_point start_;
    IterationTrace trace_;
};

Vector initial_iterate(const LinearSystem& sys, const SolverOptions& options) {
    if (options.x0) {
        if (options.x0->size() != sys.n()) throw InvalidArgument("x0 length differs from column count");
        return *options.x0;
    }
    return Vector(sys.n(), 0.0);
}

/// In-place projection onto ⟨a, y⟩ = b given ‖a‖².
void project_row(Vector& x, std::span<const double> a, double b, double a_norm_sq) {
    axpy((b - dot(a, x)) / a_norm_sq, a, x);
}

std::vector<Vector> rows_of(const DenseMatrix& a) {
    std::vector<Vector> rows(a.rows());
    for (std::size_t i = 0; i < a.rows(); ++i) rows[i].assign(a.row(i).begin(), a.row(i).end());
    return rows;
}

Vector gather(std::span<const double> b, std::span<const std::size_t> idx) {
    Vector out(idx.size());
    for (std::size_t k = 0; k < idx.size(); ++k) out[k] = b[idx[k]];
    return out;
}

/// x + Σ_l (coef_l − ⟨u_l, x⟩) u_l
Vector replace_components(std::span<const double> x, const linalg::OrthonormalBasis& basis,
                          std::span<const double> coef) {
    Vector out(x.begin(), x.end());
    for (std::size_t l = 0; l < basis.basis_dim(); ++l) {
        const Vector& u = basis.column(l);
        axpy(coef[l] - dot(u, x), u, out);
    }
    return out;
}

/// (R Rᵀ)⁻¹ R rhs, which is R⁻ᵀ rhs: one triangular solve.
Vector qr_block_coefficients(const DenseMatrix& r, std::span<const double> rhs) {
    return linalg::forward_substitute(r.transpose(), rhs);
}

linalg::QrFactors block_qr(const DenseMatrix& a_block) {
    return linalg::householder_qr(a_block.transpose());
}

} // namespace

Vector kaczmarz_step(std::span<const double> x, std::span<const double> a_i, double b_i) {
    if (x.size() != a_i.size()) throw InvalidArgument("kaczmarz_step: dimension mismatch");
    const double nn = dot(a_i, a_i);
    if (nn == 0.0) throw ZeroRow("kaczmarz_step: zero row");
    Vector out(x.begin(), x.end());
    project_row(out, a_i, b_i, nn);
    return out;
}

IterationTrace run_kaczmarz(const LinearSystem& sys, const SamplerPolicy& policy, const StopRule& stop,
                            Rng& rng, const SolverOptions& options) {
    sys.validate();
    const std::size_t m = sys.m();
    const Vector norms = samplers::row_norm_weights(sys.a);

    std::optional<samplers::DiscreteSampler> fixed;
    DenseMatrix gram;
    const DenseMatrix* gram_ptr = nullptr;
    switch (policy.kind) {
    case samplers::PolicyKind::norm_squared: fixed.emplace(norms); break;
    case samplers::PolicyKind::custom_weights:
        if (policy.weights.size() != m) {
            throw InvalidArgument("custom weights: expected " + std::to_string(m) + " entries, got " +
                                  std::to_string(policy.weights.size()));
        }
        fixed.emplace(policy.weights);
        break;
    case samplers::PolicyKind::angle_pair:
        if (m <= options.gram_precompute_limit) {
            gram = samplers::normalized_gramian(sys.a);
            gram_ptr = &gram;
        }
        break;
    default: break;
    }

    Vector x = initial_iterate(sys, options);
    Recorder rec(sys, stop, options, rng.seed(), policy.tag());
    if (rec.record(x, 0, 0, {})) return rec.finish(std::move(x));

    std::optional<std::size_t> previous;
    for (std::size_t j = 0;; ++j) {
        std::size_t i = 0;
        switch (policy.kind) {
        case samplers::PolicyKind::cyclic: i = samplers::cyclic_next(j, m); break;
        case samplers::PolicyKind::uniform: i = rng.index(m); break;
        case samplers::PolicyKind::norm_squared:
        case samplers::PolicyKind::custom_weights: i = (*fixed)(rng); break;
        case samplers::PolicyKind::angle_pair:
            i = previous ? samplers::sample_weighted(samplers::angle_weights(sys.a, *previous, gram_ptr), rng)
                         : rng.index(m);
            break;
        }
        project_row(x, sys.a.row(i), sys.b[i], norms[i]);
        previous = i;
        if (rec.record(x, j + 1, j + 1, {i})) break;
    }
    return rec.finish(std::move(x));
}

IterationTrace run_rkha(const LinearSystem& sys, const StopRule& stop, Rng& rng, const SolverOptions& options) {
    sys.validate();
    const std::size_t m = sys.m();
    if (m < 2) throw AllParallel("run_rkha: needs at least two rows");
    const Vector norms = samplers::row_norm_weights(sys.a);
    DenseMatrix gram;
    const DenseMatrix* gram_ptr = nullptr;
    if (m <= options.gram_precompute_limit) {
        gram = samplers::normalized_gramian(sys.a);
        gram_ptr = &gram;
    }

    Vector x = initial_iterate(sys, options);
    Recorder rec(sys, stop, options, rng.seed(), options.rkha_literal ? "rkha_literal" : "rkha");
    if (rec.record(x, 0, 0, {})) return rec.finish(std::move(x));

    std::size_t f = rng.index(m);
    std::size_t step = 0;
    for (std::size_t loop = 1;; ++loop) {
        const std::size_t g = samplers::sample_weighted(samplers::angle_weights(sys.a, f, gram_ptr), rng);
        const double g_residual_at_xk = sys.b[g] - dot(sys.a.row(g), x);

        project_row(x, sys.a.row(f), sys.b[f], norms[f]);
        if (rec.record(x, ++step, loop, {f})) break;

        if (options.rkha_literal) {
            axpy(g_residual_at_xk / norms[g], sys.a.row(g), x);
        } else {
            project_row(x, sys.a.row(g), sys.b[g], norms[g]);
        }
        if (rec.record(x, ++step, loop, {g})) break;
        f = g;
    }
    return rec.finish(std::move(x));
}

Vector block_kaczmarz_step(std::span<const double> x, const DenseMatrix& a_block, std::span<const double> b_block) {
    if (a_block.empty() || a_block.cols() != x.size() || b_block.size() != a_block.rows()) {
        throw InvalidArgument("block_kaczmarz_step: dimension mismatch");
    }
    const std::size_t k = a_block.rows();
    Vector r(k);
    for (std::size_t i = 0; i < k; ++i) r[i] = b_block[i] - dot(a_block.row(i), x);

    DenseMatrix gram(k, k);
    double max_diag = 0.0;
    for (std::size_t i = 0; i < k; ++i) {
        for (std::size_t j = 0; j <= i; ++j) {
            const double v = dot(a_block.row(i), a_block.row(j));
            gram(i, j) = v;
            gram(j, i) = v;
        }
        max_diag = std::max(max_diag, gram(i, i));
    }

    Vector out(x.begin(), x.end());
    bool solved = false;
    try {
        const DenseMatrix l = linalg::cholesky(gram);
        double min_pivot = std::numeric_limits<double>::infinity();
        for (std::size_t i = 0; i < k; ++i) min_pivot = std::min(min_pivot, l(i, i) * l(i, i));
        // a pivot this small means A_i A_iᵀ is singular to working precision
        if (min_pivot > 1e-12 * max_diag) {
            const Vector y = linalg::back_substitute_transposed(l, linalg::forward_substitute(l, r));
            for (std::size_t i = 0; i < k; ++i) axpy(y[i], a_block.row(i), out);
            solved = true;
        }
    } catch (const NotPositiveDefinite&) {
    }
    if (!solved) {
        if (linalg::svd(a_block).rank < k) {
            throw DegenerateBlock("block_kaczmarz_step: block rows are linearly dependent");
        }
        const Vector dx = linalg::multiply(linalg::pseudo_inverse(a_block), r);
        axpy(1.0, dx, out);
    }
    return out;
}

IterationTrace run_block_kaczmarz(const LinearSystem& sys, const BlockPartition& partition, const StopRule& stop,
                                  const SolverOptions& options) {
    sys.validate();
    if (partition.blocks.empty() || !partition.is_valid(sys.m())) {
        throw InvalidArgument("run_block_kaczmarz: partition must hold disjoint in-range row indices");
    }
    struct Block {
        DenseMatrix a;
        Vector b;
    };
    std::vector<Block> blocks;
    for (const auto& idx : partition.blocks) {
        if (idx.empty()) throw InvalidArgument("run_block_kaczmarz: empty block");
        blocks.push_back({sys.a.select_rows(idx), gather(sys.b, idx)});
    }

    Vector x = initial_iterate(sys, options);
    Recorder rec(sys, stop, options, 0, "block");
    if (rec.record(x, 0, 0, {})) return rec.finish(std::move(x));

    std::size_t step = 0;
    for (std::size_t bs = 0;; ++bs) {
        const std::size_t which = bs % blocks.size();
        x = block_kaczmarz_step(x, blocks[which].a, blocks[which].b);
        step += partition.blocks[which].size();
        if (rec.record(x, step, bs + 1, partition.blocks[which])) break;
    }
    return rec.finish(std::move(x));
}

Vector rkos_project(std::span<const double> x_prev, std::span<const Vector> block_rows,
                    std::span<const double> block_b) {
    if (block_rows.empty() || block_rows.size() != block_b.size()) {
        throw InvalidArgument("rkos_project: block rows and measurements differ in count");
    }
    if (block_rows.front().size() != x_prev.size()) throw InvalidArgument("rkos_project: dimension mismatch");
    const linalg::QrFactors f = linalg::mgs_factor(block_rows);
    // β_l = ⟨u_l, x*⟩ from b alone: β_l = (b_l − Σ_{m<l} R_ml β_m) / R_ll
    const std::size_t p = block_rows.size();
    Vector beta(p);
    for (std::size_t l = 0; l < p; ++l) {
        double s = block_b[l];
        for (std::size_t m = 0; m < l; ++m) s -= f.r(m, l) * beta[m];
        beta[l] = s / f.r(l, l);
    }
    return replace_components(x_prev, f.q, beta);
}

Vector rkos_project_qr(std::span<const double> x_prev, const DenseMatrix& a_block, std::span<const double> block_b) {
    if (a_block.empty() || a_block.rows() != block_b.size() || a_block.cols() != x_prev.size()) {
        throw InvalidArgument("rkos_project_qr: dimension mismatch");
    }
    const linalg::QrFactors f = block_qr(a_block);
    // applied to the block residual: U(RRᵀ)⁻¹R(b − A x) = U(RRᵀ)⁻¹R b − UUᵀx
    Vector residual(block_b.begin(), block_b.end());
    for (std::size_t i = 0; i < residual.size(); ++i) residual[i] -= dot(a_block.row(i), x_prev);
    const Vector y = qr_block_coefficients(f.r, residual);
    Vector out(x_prev.begin(), x_prev.end());
    for (std::size_t l = 0; l < y.size(); ++l) axpy(y[l], f.q.column(l), out);
    return out;
}

Vector rkos_noise_propagation(const DenseMatrix& a_block, std::span<const double> eps_b) {
    if (a_block.empty() || a_block.rows() != eps_b.size()) {
        throw InvalidArgument("rkos_noise_propagation: dimension mismatch");
    }
    const linalg::QrFactors f = block_qr(a_block);
    const Vector y = qr_block_coefficients(f.r, eps_b);
    Vector out(a_block.cols(), 0.0);
    for (std::size_t l = 0; l < y.size(); ++l) axpy(y[l], f.q.column(l), out);
    return out;
}

IterationTrace run_rkos(const LinearSystem& sys, std::size_t p, const StopRule& stop, Rng& rng,
                        RkosVariant variant, const SolverOptions& options) {
    sys.validate();
    const std::size_t m = sys.m();
    if (p < 1 || p > sys.n() || p > m) throw InvalidArgument("run_rkos: block size must satisfy 1 <= p <= min(M, N)");
    const std::vector<Vector> rows = rows_of(sys.a);
    std::optional<samplers::DiscreteSampler> first_row;
    if (options.rkos_selection == BlockSelection::with_replacement) {
        first_row.emplace(samplers::row_norm_weights(sys.a));
    }

    auto project = [&](const Vector& x, const std::vector<std::size_t>& idx) {
        const Vector bb = gather(sys.b, idx);
        if (variant == RkosVariant::gram_schmidt) {
            std::vector<Vector> br;
            br.reserve(idx.size());
            for (std::size_t i : idx) br.push_back(rows[i]);
            return rkos_project(x, br, bb);
        }
        return rkos_project_qr(x, sys.a.select_rows(idx), bb);
    };

    // p distinct rows; the first by squared norm when drawing with replacement
    auto draw_block = [&](std::size_t size, bool norm_first) {
        std::vector<std::size_t> perm(m);
        std::iota(perm.begin(), perm.end(), std::size_t{0});
        std::size_t start = 0;
        if (norm_first) {
            std::swap(perm[0], perm[(*first_row)(rng)]);
            start = 1;
        }
        for (std::size_t k = start; k < size; ++k) std::swap(perm[k], perm[k + rng.index(m - k)]);
        perm.resize(size);
        return perm;
    };

    Vector x = initial_iterate(sys, options);
    Recorder rec(sys, stop, options, rng.seed(),
                 variant == RkosVariant::gram_schmidt ? "rkos_gs" : "rkos_qr");
    if (rec.record(x, 0, 0, {})) return rec.finish(std::move(x));

    samplers::BlockPartition cycle;
    std::size_t next_in_cycle = 0;
    std::size_t step = 0;
    for (std::size_t bs = 1;; ++bs) {
        std::vector<std::size_t> idx;
        if (options.rkos_selection == BlockSelection::partition_per_cycle) {
            if (next_in_cycle == cycle.blocks.size()) {
                cycle = samplers::random_partition(m, p, rng);
                next_in_cycle = 0;
            }
            idx = cycle.blocks[next_in_cycle++];
        } else {
            idx = draw_block(p, true);
        }

        for (std::size_t attempt = 0;; ++attempt) {
            try {
                x = project(x, idx);
                break;
            } catch (const DegenerateBlock&) {
                if (attempt >= options.max_degenerate_retries) {
                    throw DegenerateBlock("run_rkos: no linearly independent block found after " +
                                          std::to_string(attempt + 1) + " attempts");
                }
                idx = draw_block(idx.size(), false);
            }
        }
        step += idx.size();
        if (rec.record(x, step, bs, std::move(idx))) break;
    }
    return rec.finish(std::move(x));
}

} // namespace kaczmarz::solvers
