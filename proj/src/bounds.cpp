#include "kaczmarz/bounds.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include "kaczmarz/errors.hpp"

namespace kaczmarz::bounds {

namespace {

Vector geometric_envelope(double factor, double z0_sq, std::size_t t_max) {
    factor = std::clamp(factor, 0.0, 1.0);
    Vector env(t_max + 1);
    double v = z0_sq;
    for (std::size_t t = 0; t <= t_max; ++t) {
        env[t] = v;
        v *= factor;
    }
    return env;
}

void require_z0(double z0_sq) {
    if (!(z0_sq >= 0.0) || !std::isfinite(z0_sq)) throw InvalidArgument("z0_sq must be finite and non-negative");
}

DenseMatrix stack_bases(const std::vector<OrthonormalBasis>& bases, std::size_t from, std::size_t n) {
    std::size_t rows = 0;
    for (std::size_t i = from; i < bases.size(); ++i) rows += bases[i].basis_dim();
    DenseMatrix out(rows, n);
    std::size_t r = 0;
    for (std::size_t i = from; i < bases.size(); ++i) {
        for (const Vector& c : bases[i].columns()) {
            std::copy(c.begin(), c.end(), &out(r, 0));
            ++r;
        }
    }
    return out;
}

} // namespace

BoundReport strohmer_bound(const DenseMatrix& a, double z0_sq, std::size_t p_max) {
    require_z0(z0_sq);
    const double kappa = linalg::scaled_condition_number(a);
    const double rate = 1.0 - 1.0 / (kappa * kappa);
    BoundReport rep;
    rep.kind = "strohmer";
    rep.envelope = geometric_envelope(rate, z0_sq, p_max);
    rep.scalars["kappa"] = kappa;
    rep.scalars["rate"] = rate;
    rep.scalars["z0_sq"] = z0_sq;
    rep.series["sigma"] = linalg::svd(a).sigma;
    return rep;
}

BoundReport galantai_bound(const DenseMatrix& a, const samplers::BlockPartition& partition, double z0_sq,
                           std::size_t q_max) {
    require_z0(z0_sq);
    const std::size_t n = a.cols();
    if (a.rows() != n) throw InvalidArgument("galantai_bound: A must be square");
    if (partition.blocks.empty() || !partition.is_valid(a.rows()) || partition.total_rows() != a.rows()) {
        throw InvalidArgument("galantai_bound: partition must cover every row exactly once");
    }

    // X = [X_1 … X_k], X_i = A_iᵀ L_i^{-T}: columns of X_i solve L_i c = A_i column-wise
    DenseMatrix x(n, a.rows());
    std::size_t col = 0;
    for (const auto& idx : partition.blocks) {
        const DenseMatrix ai = a.select_rows(idx);
        const DenseMatrix gram = linalg::multiply(ai, ai.transpose());
        DenseMatrix l;
        try {
            l = linalg::cholesky(gram);
        } catch (const NotPositiveDefinite&) {
            throw DegenerateBlock("galantai_bound: block rows are linearly dependent");
        }
        for (std::size_t c = 0; c < n; ++c) {
            Vector rhs(idx.size());
            for (std::size_t r = 0; r < idx.size(); ++r) rhs[r] = ai(r, c);
            const Vector y = linalg::forward_substitute(l, rhs);
            for (std::size_t r = 0; r < idx.size(); ++r) x(c, col + r) = y[r];
        }
        col += idx.size();
    }

    BoundReport rep;
    rep.kind = "galantai";
    const double log_det = linalg::log_det_gram(x);
    double det = std::exp(log_det);
    if (log_det < std::log(1e-300)) {
        det = 0.0;
        rep.warnings.push_back("det(X^T X) below 1e-300; bound is vacuous");
    }
    det = std::clamp(det, 0.0, 1.0);
    // an orthogonal system gives det = 1 up to roundoff in the factorizations
    if (1.0 - det <= 100.0 * static_cast<double>(n) * std::numeric_limits<double>::epsilon()) det = 1.0;
    rep.envelope = geometric_envelope(1.0 - det, z0_sq, q_max);
    rep.scalars["det_xtx"] = det;
    rep.scalars["log_det_xtx"] = log_det;
    rep.scalars["rate"] = 1.0 - det;
    rep.scalars["z0_sq"] = z0_sq;
    return rep;
}

BoundReport ssw_bound(const std::vector<OrthonormalBasis>& row_bases, double z0_sq, std::size_t q_max,
                      AngleMode mode) {
    require_z0(z0_sq);
    if (row_bases.empty()) throw InvalidArgument("ssw_bound: no blocks");
    const std::size_t n = row_bases.front().ambient_dim();
    for (const auto& b : row_bases) {
        if (b.ambient_dim() != n) throw InvalidArgument("ssw_bound: bases live in different spaces");
    }

    const std::size_t k = row_bases.size();
    Vector angles;
    double prod = 1.0;
    for (std::size_t j = 0; j + 1 < k; ++j) {
        const OrthonormalBasis mj = linalg::orthogonal_complement(stack_bases({row_bases[j]}, 0, n));
        const DenseMatrix tail = stack_bases(row_bases, j + 1, n);
        const OrthonormalBasis inter = linalg::orthogonal_complement(tail);
        const std::vector<double> pa = linalg::principal_angles(mj, inter);

        std::size_t skip = 0;
        if (mode == AngleMode::friedrichs) {
            // the subspaces share ∩_{i ≥ j} M_i, whose dimension is N − rank of all rows from j on
            const DenseMatrix all = stack_bases(row_bases, j, n);
            const std::size_t rank = all.rows() == 0 ? 0 : linalg::svd(all).rank;
            skip = n - rank;
        }
        const double theta = skip < pa.size() ? pa[skip] : std::numbers::pi / 2.0;
        angles.push_back(theta);
        prod *= std::sin(theta) * std::sin(theta);
    }

    BoundReport rep;
    rep.kind = mode == AngleMode::friedrichs ? "ssw" : "ssw_smallest";
    rep.envelope = geometric_envelope(1.0 - prod, z0_sq, q_max);
    rep.series["theta"] = angles;
    rep.scalars["prod_sin_sq"] = prod;
    rep.scalars["rate"] = 1.0 - prod;
    rep.scalars["z0_sq"] = z0_sq;
    if (prod == 0.0) rep.warnings.push_back("a zero angle makes the bound vacuous");
    return rep;
}

BoundReport ssw_bound(const DenseMatrix& a, const samplers::BlockPartition& partition, double z0_sq,
                      std::size_t q_max, AngleMode mode) {
    if (!partition.is_valid(a.rows())) throw InvalidArgument("ssw_bound: invalid partition");
    std::vector<OrthonormalBasis> bases;
    for (const auto& idx : partition.blocks) {
        std::vector<Vector> rows;
        for (std::size_t i : idx) rows.emplace_back(a.row(i).begin(), a.row(i).end());
        bases.push_back(linalg::mgs_orthonormalize(rows));
    }
    return ssw_bound(bases, z0_sq, q_max, mode);
}

BoundReport rkos_expected_decay(std::size_t n, std::size_t p, std::size_t beta_max) {
    if (p < 1 || p > n) throw InvalidArgument("rkos_expected_decay: need 1 <= p <= n");
    const double ratio = static_cast<double>(p) / static_cast<double>(n);
    BoundReport rep;
    rep.kind = "rkos";
    rep.envelope = geometric_envelope(1.0 - ratio, 1.0, beta_max);
    Vector asym(beta_max + 1);
    for (std::size_t b = 0; b <= beta_max; ++b) asym[b] = std::exp(-static_cast<double>(b) * ratio);
    rep.series["asymptote"] = std::move(asym);
    rep.scalars["rate"] = 1.0 - ratio;
    rep.scalars["n"] = static_cast<double>(n);
    rep.scalars["p"] = static_cast<double>(p);
    return rep;
}

WelchBound welch_bound(std::size_t m, std::size_t n) {
    if (m < 2 || n < 1) throw InvalidArgument("welch_bound: need m > 1 and n >= 1");
    const double md = static_cast<double>(m);
    const double nd = static_cast<double>(n);
    WelchBound w;
    w.paper_form = (md - nd) / (nd * (md - 1.0));
    w.sqrt_form = std::sqrt(std::max(0.0, w.paper_form));
    return w;
}

BoundComparison compare_bounds(const DenseMatrix& a, std::size_t q_max) {
    const std::size_t m = a.rows();
    if (m == 0 || a.cols() != m) throw InvalidArgument("compare_bounds: A must be square");
    for (std::size_t i = 0; i < m; ++i) {
        if (std::abs(linalg::norm2(a.row(i)) - 1.0) > 1e-10) {
            throw InvalidArgument("compare_bounds: rows must have unit norm");
        }
    }
    const linalg::SvdFactors f = linalg::svd(a);
    if (f.rank < m) throw RankDeficient("compare_bounds: A is rank deficient");

    double sum_sq = 0.0;
    double log_prod = 0.0;
    for (double s : f.sigma) {
        sum_sq += s * s;
        log_prod += 2.0 * std::log(s);
    }
    const double sigma_min_sq = f.sigma.back() * f.sigma.back();

    BoundComparison cmp;
    cmp.prod_sigma_sq = std::exp(log_prod);
    cmp.det_aat = std::exp(linalg::log_det_gram(a.transpose()));

    const double sv_cycle = std::pow(1.0 - sigma_min_sq / sum_sq, static_cast<double>(m));
    cmp.singular_value_form.kind = "singular_value";
    cmp.singular_value_form.envelope = geometric_envelope(sv_cycle, 1.0, q_max);
    cmp.singular_value_form.scalars["rate"] = sv_cycle;
    cmp.singular_value_form.series["sigma"] = f.sigma;

    const double det = std::clamp(cmp.prod_sigma_sq, 0.0, 1.0);
    cmp.determinant_form.kind = "determinant";
    cmp.determinant_form.envelope = geometric_envelope(1.0 - det, 1.0, q_max);
    cmp.determinant_form.scalars["rate"] = 1.0 - det;
    cmp.determinant_form.scalars["prod_sigma_sq"] = cmp.prod_sigma_sq;
    cmp.determinant_form.scalars["det_aat"] = cmp.det_aat;

    if (std::abs(cmp.prod_sigma_sq - cmp.det_aat) > 1e-8 * std::max(cmp.det_aat, 1e-300)) {
        cmp.determinant_form.warnings.push_back("product of squared singular values differs from det(AA^T)");
    }
    for (std::size_t q = 0; q <= q_max; ++q) {
        cmp.determinant_tighter.push_back(cmp.determinant_form.envelope[q] < cmp.singular_value_form.envelope[q]);
    }
    return cmp;
}

} // namespace kaczmarz::bounds
