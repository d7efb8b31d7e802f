#include "kaczmarz/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>

#include "kaczmarz/errors.hpp"

namespace kaczmarz::linalg {

// ---------------------------------------------------------------------------
// DenseMatrix

DenseMatrix::DenseMatrix(std::size_t rows, std::size_t cols, double fill)
    : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

DenseMatrix::DenseMatrix(std::initializer_list<std::initializer_list<double>> rows) {
    rows_ = rows.size();
    cols_ = rows_ == 0 ? 0 : rows.begin()->size();
    data_.reserve(rows_ * cols_);
    for (const auto& r : rows) {
        if (r.size() != cols_) {
            throw InvalidArgument("DenseMatrix: ragged initializer");
        }
        data_.insert(data_.end(), r.begin(), r.end());
    }
}

DenseMatrix DenseMatrix::identity(std::size_t n) {
    DenseMatrix m(n, n);
    for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
    return m;
}

DenseMatrix DenseMatrix::diagonal(std::span<const double> d) {
    DenseMatrix m(d.size(), d.size());
    for (std::size_t i = 0; i < d.size(); ++i) m(i, i) = d[i];
    return m;
}

DenseMatrix DenseMatrix::from_rows(std::span<const Vector> rows) {
    if (rows.empty()) return {};
    DenseMatrix m(rows.size(), rows.front().size());
    for (std::size_t i = 0; i < rows.size(); ++i) {
        if (rows[i].size() != m.cols()) {
            throw InvalidArgument("DenseMatrix::from_rows: rows of unequal length");
        }
        std::copy(rows[i].begin(), rows[i].end(), m.row(i).begin());
    }
    return m;
}

Vector DenseMatrix::column(std::size_t j) const {
    Vector c(rows_);
    for (std::size_t i = 0; i < rows_; ++i) c[i] = (*this)(i, j);
    return c;
}

DenseMatrix DenseMatrix::transpose() const {
    DenseMatrix t(cols_, rows_);
    for (std::size_t i = 0; i < rows_; ++i)
        for (std::size_t j = 0; j < cols_; ++j) t(j, i) = (*this)(i, j);
    return t;
}

DenseMatrix DenseMatrix::select_rows(std::span<const std::size_t> indices) const {
    DenseMatrix s(indices.size(), cols_);
    for (std::size_t k = 0; k < indices.size(); ++k) {
        if (indices[k] >= rows_) throw InvalidArgument("select_rows: index out of range");
        auto src = row(indices[k]);
        std::copy(src.begin(), src.end(), s.row(k).begin());
    }
    return s;
}

bool DenseMatrix::all_finite() const noexcept {
    return std::all_of(data_.begin(), data_.end(), [](double v) { return std::isfinite(v); });
}

// ---------------------------------------------------------------------------
// Vector kernels

double dot(std::span<const double> a, std::span<const double> b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

double norm2(std::span<const double> v) {
    // scaled accumulation so that tiny/huge entries do not under/overflow
    double scale = 0.0;
    double ssq = 1.0;
    for (double x : v) {
        if (x == 0.0) continue;
        const double ax = std::abs(x);
        if (scale < ax) {
            ssq = 1.0 + ssq * (scale / ax) * (scale / ax);
            scale = ax;
        } else {
            ssq += (ax / scale) * (ax / scale);
        }
    }
    return scale * std::sqrt(ssq);
}

void axpy(double alpha, std::span<const double> x, std::span<double> y) {
    for (std::size_t i = 0; i < x.size(); ++i) y[i] += alpha * x[i];
}

Vector subtract(std::span<const double> a, std::span<const double> b) {
    Vector d(a.size());
    for (std::size_t i = 0; i < a.size(); ++i) d[i] = a[i] - b[i];
    return d;
}

DenseMatrix multiply(const DenseMatrix& a, const DenseMatrix& b) {
    if (a.cols() != b.rows()) throw InvalidArgument("multiply: inner dimensions differ");
    DenseMatrix c(a.rows(), b.cols());
    for (std::size_t i = 0; i < a.rows(); ++i) {
        auto ci = c.row(i);
        for (std::size_t k = 0; k < a.cols(); ++k) {
            const double aik = a(i, k);
            if (aik == 0.0) continue;
            axpy(aik, b.row(k), ci);
        }
    }
    return c;
}

Vector multiply(const DenseMatrix& a, std::span<const double> x) {
    if (a.cols() != x.size()) throw InvalidArgument("multiply: dimension mismatch");
    Vector y(a.rows());
    for (std::size_t i = 0; i < a.rows(); ++i) y[i] = dot(a.row(i), x);
    return y;
}

Vector multiply_transposed(const DenseMatrix& a, std::span<const double> x) {
    if (a.rows() != x.size()) throw InvalidArgument("multiply_transposed: dimension mismatch");
    Vector y(a.cols(), 0.0);
    for (std::size_t i = 0; i < a.rows(); ++i) axpy(x[i], a.row(i), y);
    return y;
}

double frobenius_norm(const DenseMatrix& a) { return norm2(a.data()); }

// ---------------------------------------------------------------------------
// OrthonormalBasis

OrthonormalBasis::OrthonormalBasis(std::size_t ambient_dim, std::vector<Vector> columns)
    : ambient_dim_(ambient_dim), columns_(std::move(columns)) {
    for (const auto& c : columns_) {
        if (c.size() != ambient_dim_) {
            throw InvalidArgument("OrthonormalBasis: column length differs from ambient dimension");
        }
    }
}

DenseMatrix OrthonormalBasis::as_matrix() const {
    DenseMatrix m(ambient_dim_, columns_.size());
    for (std::size_t l = 0; l < columns_.size(); ++l)
        for (std::size_t i = 0; i < ambient_dim_; ++i) m(i, l) = columns_[l][i];
    return m;
}

double OrthonormalBasis::orthonormality_error() const {
    double worst = 0.0;
    for (std::size_t i = 0; i < columns_.size(); ++i)
        for (std::size_t j = i; j < columns_.size(); ++j) {
            const double target = i == j ? 1.0 : 0.0;
            worst = std::max(worst, std::abs(dot(columns_[i], columns_[j]) - target));
        }
    return worst;
}

Vector OrthonormalBasis::project(std::span<const double> x) const {
    Vector p(ambient_dim_, 0.0);
    for (const auto& u : columns_) axpy(dot(u, x), u, p);
    return p;
}

// ---------------------------------------------------------------------------
// Gram-Schmidt

QrFactors mgs_factor(std::span<const Vector> rows, double tol) {
    if (tol <= 0.0) throw InvalidArgument("mgs_orthonormalize: tol must be positive");
    if (rows.empty()) return {OrthonormalBasis{}, DenseMatrix{}};
    const std::size_t n = rows.front().size();
    const std::size_t p = rows.size();
    std::vector<Vector> basis;
    basis.reserve(p);
    DenseMatrix r(p, p);

    for (std::size_t l = 0; l < p; ++l) {
        if (rows[l].size() != n) throw InvalidArgument("mgs_orthonormalize: rows of unequal length");
        Vector v = rows[l];
        const double original = norm2(v);
        if (original == 0.0) {
            throw DegenerateBlock("mgs_orthonormalize: row " + std::to_string(l) + " is zero");
        }
        for (int pass = 0; pass < 2; ++pass) {
            for (std::size_t m = 0; m < l; ++m) {
                const double c = dot(basis[m], v);
                axpy(-c, basis[m], v);
                r(m, l) += c;
            }
        }
        const double residual = norm2(v);
        if (residual < tol * original) {
            throw DegenerateBlock("mgs_orthonormalize: row " + std::to_string(l) +
                                  " is linearly dependent on the preceding rows");
        }
        for (double& x : v) x /= residual;
        r(l, l) = residual;
        basis.push_back(std::move(v));
    }
    return {OrthonormalBasis(n, std::move(basis)), std::move(r)};
}

OrthonormalBasis mgs_orthonormalize(std::span<const Vector> rows, double tol) {
    return mgs_factor(rows, tol).q;
}

// ---------------------------------------------------------------------------
// Householder QR

QrFactors householder_qr(const DenseMatrix& m, double tol) {
    const std::size_t rows = m.rows();
    const std::size_t p = m.cols();
    if (p == 0 || rows == 0) throw InvalidArgument("householder_qr: empty matrix");
    if (rows < p) throw DegenerateBlock("householder_qr: more columns than rows, cannot be full column rank");

    std::vector<double> col_norm(p);
    for (std::size_t j = 0; j < p; ++j) col_norm[j] = norm2(m.column(j));

    DenseMatrix a = m;
    std::vector<Vector> reflectors;
    reflectors.reserve(p);

    for (std::size_t k = 0; k < p; ++k) {
        Vector v(rows - k);
        for (std::size_t i = k; i < rows; ++i) v[i - k] = a(i, k);
        const double xnorm = norm2(v);
        const double alpha = v[0] >= 0.0 ? -xnorm : xnorm;
        v[0] -= alpha;
        const double vnorm = norm2(v);
        if (vnorm > 0.0) {
            for (double& x : v) x /= vnorm;
            for (std::size_t j = k; j < p; ++j) {
                double s = 0.0;
                for (std::size_t i = k; i < rows; ++i) s += v[i - k] * a(i, j);
                for (std::size_t i = k; i < rows; ++i) a(i, j) -= 2.0 * s * v[i - k];
            }
        }
        reflectors.push_back(std::move(v));
    }

    DenseMatrix r(p, p);
    for (std::size_t i = 0; i < p; ++i)
        for (std::size_t j = i; j < p; ++j) r(i, j) = a(i, j);

    // Q = H_0 H_1 ... H_{p-1} applied to the first p columns of the identity.
    std::vector<Vector> q(p, Vector(rows, 0.0));
    for (std::size_t j = 0; j < p; ++j) {
        Vector& c = q[j];
        c[j] = 1.0;
        for (std::size_t kk = p; kk-- > 0;) {
            const Vector& v = reflectors[kk];
            double s = 0.0;
            for (std::size_t i = kk; i < rows; ++i) s += v[i - kk] * c[i];
            for (std::size_t i = kk; i < rows; ++i) c[i] -= 2.0 * s * v[i - kk];
        }
    }

    for (std::size_t k = 0; k < p; ++k) {
        if (col_norm[k] == 0.0 || std::abs(r(k, k)) < tol * col_norm[k]) {
            throw DegenerateBlock("householder_qr: column " + std::to_string(k) +
                                  " is linearly dependent on the preceding columns");
        }
        if (r(k, k) < 0.0) {
            for (std::size_t j = k; j < p; ++j) r(k, j) = -r(k, j);
            for (double& x : q[k]) x = -x;
        }
    }
    return {OrthonormalBasis(rows, std::move(q)), std::move(r)};
}

// ---------------------------------------------------------------------------
// Cholesky

DenseMatrix cholesky(const DenseMatrix& spd) {
    const std::size_t n = spd.rows();
    if (n == 0 || spd.cols() != n) throw InvalidArgument("cholesky: matrix must be square");
    double max_abs = 0.0;
    for (double v : spd.data()) max_abs = std::max(max_abs, std::abs(v));
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i + 1; j < n; ++j)
            if (std::abs(spd(i, j) - spd(j, i)) > 1e-12 * std::max(1.0, max_abs)) {
                throw InvalidArgument("cholesky: matrix is not symmetric");
            }

    DenseMatrix l(n, n);
    for (std::size_t j = 0; j < n; ++j) {
        double d = spd(j, j);
        for (std::size_t k = 0; k < j; ++k) d -= l(j, k) * l(j, k);
        if (!(d > 0.0)) {
            throw NotPositiveDefinite("cholesky: non-positive pivot at " + std::to_string(j));
        }
        const double ljj = std::sqrt(d);
        l(j, j) = ljj;
        for (std::size_t i = j + 1; i < n; ++i) {
            double s = spd(i, j);
            for (std::size_t k = 0; k < j; ++k) s -= l(i, k) * l(j, k);
            l(i, j) = s / ljj;
        }
    }
    return l;
}

// ---------------------------------------------------------------------------
// One-sided Jacobi SVD

namespace {

struct JacobiResult {
    std::vector<Vector> columns; // A·V, column j has norm sigma_j
    std::vector<Vector> v;       // N orthonormal columns of length N
    Vector sigma;                // unsorted, length N
};

JacobiResult hestenes(const DenseMatrix& m) {
    const std::size_t rows = m.rows();
    const std::size_t n = m.cols();
    JacobiResult out;
    out.columns.resize(n);
    for (std::size_t j = 0; j < n; ++j) out.columns[j] = m.column(j);
    out.v.assign(n, Vector(n, 0.0));
    for (std::size_t j = 0; j < n; ++j) out.v[j][j] = 1.0;

    constexpr double eps = 1e-15;
    constexpr int max_sweeps = 80;
    // columns this small relative to the whole matrix are numerically zero
    const double negligible = 1e-32 * dot(m.data(), m.data());
    for (int sweep = 0; sweep < max_sweeps; ++sweep) {
        bool rotated = false;
        for (std::size_t p = 0; p + 1 < n; ++p) {
            for (std::size_t q = p + 1; q < n; ++q) {
                Vector& cp = out.columns[p];
                Vector& cq = out.columns[q];
                const double alpha = dot(cp, cp);
                const double beta = dot(cq, cq);
                const double gamma = dot(cp, cq);
                if (alpha <= negligible || beta <= negligible) continue;
                if (std::abs(gamma) <= eps * std::sqrt(alpha * beta)) continue;
                rotated = true;
                const double zeta = (beta - alpha) / (2.0 * gamma);
                const double t = std::copysign(1.0, zeta) / (std::abs(zeta) + std::sqrt(1.0 + zeta * zeta));
                const double c = 1.0 / std::sqrt(1.0 + t * t);
                const double s = c * t;
                for (std::size_t i = 0; i < rows; ++i) {
                    const double xp = cp[i];
                    const double xq = cq[i];
                    cp[i] = c * xp - s * xq;
                    cq[i] = s * xp + c * xq;
                }
                Vector& vp = out.v[p];
                Vector& vq = out.v[q];
                for (std::size_t i = 0; i < n; ++i) {
                    const double xp = vp[i];
                    const double xq = vq[i];
                    vp[i] = c * xp - s * xq;
                    vq[i] = s * xp + c * xq;
                }
            }
        }
        if (!rotated) break;
    }
    out.sigma.resize(n);
    for (std::size_t j = 0; j < n; ++j) out.sigma[j] = norm2(out.columns[j]);
    return out;
}

std::vector<std::size_t> descending_order(const Vector& values) {
    std::vector<std::size_t> idx(values.size());
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    std::stable_sort(idx.begin(), idx.end(),
                     [&](std::size_t a, std::size_t b) { return values[a] > values[b]; });
    return idx;
}

} // namespace

SvdFactors svd(const DenseMatrix& m, double rank_tol_factor) {
    if (m.empty()) throw InvalidArgument("svd: empty matrix");
    if (!m.all_finite()) throw InvalidArgument("svd: non-finite entries");
    const std::size_t rows = m.rows();
    const std::size_t n = m.cols();
    const std::size_t k = std::min(rows, n);

    JacobiResult j = hestenes(m);
    const auto order = descending_order(j.sigma);

    SvdFactors f;
    f.sigma.resize(k);
    f.u = DenseMatrix(rows, k);
    f.v = DenseMatrix(n, k);
    for (std::size_t c = 0; c < k; ++c) {
        const std::size_t src = order[c];
        const double s = j.sigma[src];
        f.sigma[c] = s;
        for (std::size_t i = 0; i < n; ++i) f.v(i, c) = j.v[src][i];
        if (s > 0.0)
            for (std::size_t i = 0; i < rows; ++i) f.u(i, c) = j.columns[src][i] / s;
    }
    f.tol_rank = f.sigma.front() * static_cast<double>(std::max(rows, n)) * rank_tol_factor;
    f.rank = static_cast<std::size_t>(
        std::count_if(f.sigma.begin(), f.sigma.end(), [&](double s) { return s > f.tol_rank; }));
    return f;
}

DenseMatrix pseudo_inverse(const DenseMatrix& m) {
    const SvdFactors f = svd(m);
    DenseMatrix pinv(m.cols(), m.rows());
    for (std::size_t c = 0; c < f.rank; ++c) {
        const double inv = 1.0 / f.sigma[c];
        for (std::size_t i = 0; i < m.cols(); ++i) {
            const double vi = f.v(i, c) * inv;
            if (vi == 0.0) continue;
            for (std::size_t j = 0; j < m.rows(); ++j) pinv(i, j) += vi * f.u(j, c);
        }
    }
    return pinv;
}

double scaled_condition_number(const DenseMatrix& a) {
    const SvdFactors f = svd(a);
    if (f.rank < a.cols()) {
        throw RankDeficient("scaled_condition_number: numeric rank " + std::to_string(f.rank) +
                            " < " + std::to_string(a.cols()) + " columns");
    }
    return frobenius_norm(a) / f.sigma.back();
}

std::vector<double> principal_angles(const OrthonormalBasis& u1, const OrthonormalBasis& u2) {
    if (u1.ambient_dim() != u2.ambient_dim() && u1.basis_dim() > 0 && u2.basis_dim() > 0) {
        throw InvalidArgument("principal_angles: ambient dimensions differ");
    }
    if (u1.basis_dim() == 0 || u2.basis_dim() == 0) return {};

    // Order so that `big` has at least as many columns as `small`; the angles
    // are symmetric and the sine computation below needs that orientation.
    const bool swap = u1.basis_dim() < u2.basis_dim();
    const OrthonormalBasis& big = swap ? u2 : u1;
    const OrthonormalBasis& small = swap ? u1 : u2;
    const std::size_t d1 = big.basis_dim();
    const std::size_t d2 = small.basis_dim();
    const std::size_t n = big.ambient_dim();

    DenseMatrix cross(d1, d2);
    for (std::size_t i = 0; i < d1; ++i)
        for (std::size_t j = 0; j < d2; ++j) cross(i, j) = dot(big.column(i), small.column(j));

    // (I - U1 U1ᵀ) U2: its singular values are the sines of the angles.
    DenseMatrix resid(n, d2);
    for (std::size_t j = 0; j < d2; ++j) {
        Vector r = small.column(j);
        for (std::size_t i = 0; i < d1; ++i) axpy(-cross(i, j), big.column(i), r);
        for (std::size_t i = 0; i < n; ++i) resid(i, j) = r[i];
    }

    const Vector cosines = svd(cross).sigma;  // descending => angles ascending
    const Vector sines = svd(resid).sigma;    // descending => angles descending

    std::vector<double> angles(d2);
    for (std::size_t k = 0; k < d2; ++k) {
        const double c = std::clamp(cosines[k], 0.0, 1.0);
        const double s = std::clamp(sines[d2 - 1 - k], 0.0, 1.0);
        angles[k] = c * c >= 0.5 ? std::asin(s) : std::acos(c);
    }
    std::sort(angles.begin(), angles.end());
    return angles;
}

OrthonormalBasis orthogonal_complement(const DenseMatrix& stacked, double rank_tol_factor) {
    if (stacked.cols() == 0) throw InvalidArgument("orthogonal_complement: zero columns");
    const std::size_t n = stacked.cols();
    if (stacked.rows() == 0) {
        std::vector<Vector> all(n, Vector(n, 0.0));
        for (std::size_t i = 0; i < n; ++i) all[i][i] = 1.0;
        return OrthonormalBasis(n, std::move(all));
    }
    JacobiResult j = hestenes(stacked);
    const double smax = *std::max_element(j.sigma.begin(), j.sigma.end());
    const double tol = smax * static_cast<double>(std::max(stacked.rows(), n)) * rank_tol_factor;
    std::vector<Vector> basis;
    for (std::size_t c = 0; c < n; ++c)
        if (j.sigma[c] <= tol) basis.push_back(std::move(j.v[c]));
    return OrthonormalBasis(n, std::move(basis));
}

double log_det_gram(const DenseMatrix& x, double tol) {
    QrFactors f;
    try {
        f = householder_qr(x, tol);
    } catch (const DegenerateBlock& e) {
        throw RankDeficient(std::string("log_det_gram: ") + e.what());
    }
    double s = 0.0;
    for (std::size_t i = 0; i < f.r.rows(); ++i) s += std::log(std::abs(f.r(i, i)));
    return 2.0 * s;
}

// ---------------------------------------------------------------------------
// Triangular solves

Vector forward_substitute(const DenseMatrix& lower, std::span<const double> rhs) {
    const std::size_t n = lower.rows();
    Vector y(n);
    for (std::size_t i = 0; i < n; ++i) {
        double s = rhs[i];
        for (std::size_t k = 0; k < i; ++k) s -= lower(i, k) * y[k];
        y[i] = s / lower(i, i);
    }
    return y;
}

Vector back_substitute(const DenseMatrix& upper, std::span<const double> rhs) {
    const std::size_t n = upper.rows();
    Vector y(n);
    for (std::size_t i = n; i-- > 0;) {
        double s = rhs[i];
        for (std::size_t k = i + 1; k < n; ++k) s -= upper(i, k) * y[k];
        y[i] = s / upper(i, i);
    }
    return y;
}

Vector back_substitute_transposed(const DenseMatrix& lower, std::span<const double> rhs) {
    const std::size_t n = lower.rows();
    Vector y(n);
    for (std::size_t i = n; i-- > 0;) {
        double s = rhs[i];
        for (std::size_t k = i + 1; k < n; ++k) s -= lower(k, i) * y[k];
        y[i] = s / lower(i, i);
    }
    return y;
}

} // namespace kaczmarz::linalg
