#pragma once

#include <cstddef>
#include <initializer_list>
#include <span>
#include <vector>

namespace kaczmarz::linalg {

using Vector = std::vector<double>;

/// Dense real matrix stored row-major.
class DenseMatrix {
public:
    DenseMatrix() = default;
    DenseMatrix(std::size_t rows, std::size_t cols, double fill = 0.0);
    DenseMatrix(std::initializer_list<std::initializer_list<double>> rows);

    static DenseMatrix identity(std::size_t n);
    static DenseMatrix diagonal(std::span<const double> d);
    static DenseMatrix from_rows(std::span<const Vector> rows);

    std::size_t rows() const noexcept { return rows_; }
    std::size_t cols() const noexcept { return cols_; }
    bool empty() const noexcept { return rows_ == 0 || cols_ == 0; }

    double& operator()(std::size_t i, std::size_t j) noexcept { return data_[i * cols_ + j]; }
    double operator()(std::size_t i, std::size_t j) const noexcept { return data_[i * cols_ + j]; }

    std::span<double> row(std::size_t i) noexcept { return {data_.data() + i * cols_, cols_}; }
    std::span<const double> row(std::size_t i) const noexcept {
        return {data_.data() + i * cols_, cols_};
    }
    Vector column(std::size_t j) const;

    std::span<const double> data() const noexcept { return data_; }
    std::span<double> data() noexcept { return data_; }

    DenseMatrix transpose() const;
    /// Rows selected by `indices`, in that order.
    DenseMatrix select_rows(std::span<const std::size_t> indices) const;

    bool all_finite() const noexcept;

    friend bool operator==(const DenseMatrix&, const DenseMatrix&) = default;

private:
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::vector<double> data_;
};

double dot(std::span<const double> a, std::span<const double> b);
double norm2(std::span<const double> v);
/// y += alpha * x
void axpy(double alpha, std::span<const double> x, std::span<double> y);
Vector subtract(std::span<const double> a, std::span<const double> b);

DenseMatrix multiply(const DenseMatrix& a, const DenseMatrix& b);
Vector multiply(const DenseMatrix& a, std::span<const double> x);
/// aᵀ·x
Vector multiply_transposed(const DenseMatrix& a, std::span<const double> x);
double frobenius_norm(const DenseMatrix& a);

/// P orthonormal vectors of length `ambient_dim`. `basis_dim` may be zero.
class OrthonormalBasis {
public:
    OrthonormalBasis() = default;
    OrthonormalBasis(std::size_t ambient_dim, std::vector<Vector> columns);

    std::size_t ambient_dim() const noexcept { return ambient_dim_; }
    std::size_t basis_dim() const noexcept { return columns_.size(); }
    const std::vector<Vector>& columns() const noexcept { return columns_; }
    const Vector& column(std::size_t l) const { return columns_.at(l); }

    /// N×P matrix whose columns are the basis vectors.
    DenseMatrix as_matrix() const;
    /// max |UᵀU − I|
    double orthonormality_error() const;
    /// U Uᵀ x
    Vector project(std::span<const double> x) const;

private:
    std::size_t ambient_dim_ = 0;
    std::vector<Vector> columns_;
};

struct QrFactors {
    OrthonormalBasis q;
    DenseMatrix r; // upper triangular, positive diagonal
};

struct SvdFactors {
    DenseMatrix u;       // M×K, K = min(M, N)
    Vector sigma;        // K values, descending
    DenseMatrix v;       // N×K
    std::size_t rank = 0;
    double tol_rank = 0.0;
};

inline constexpr double kDefaultDependenceTol = 1e-10;
inline constexpr double kRankTolFactor = 1e-14;

/// Modified Gram-Schmidt with one full reorthogonalization pass.
/// Throws DegenerateBlock when a row is (numerically) in the span of the previous ones.
OrthonormalBasis mgs_orthonormalize(std::span<const Vector> rows,
                                    double tol = kDefaultDependenceTol);

/// Same as mgs_orthonormalize but also returns the P×P upper-triangular R
/// with rows_as_columns = Q·R (R accumulates both orthogonalization passes).
QrFactors mgs_factor(std::span<const Vector> rows, double tol = kDefaultDependenceTol);

/// Thin Householder QR of an M×P matrix (M ≥ P). R has a positive diagonal.
QrFactors householder_qr(const DenseMatrix& m, double tol = kDefaultDependenceTol);

/// Lower-triangular L with L·Lᵀ = spd.
DenseMatrix cholesky(const DenseMatrix& spd);

/// One-sided Jacobi SVD.
SvdFactors svd(const DenseMatrix& m, double rank_tol_factor = kRankTolFactor);
DenseMatrix pseudo_inverse(const DenseMatrix& m);

/// ‖A‖_F / σ_min for full-column-rank A.
double scaled_condition_number(const DenseMatrix& a);

/// Principal angles in radians, ascending; min(dim1, dim2) of them.
std::vector<double> principal_angles(const OrthonormalBasis& u1, const OrthonormalBasis& u2);

/// Orthonormal basis of the orthogonal complement of the row span of `stacked`.
OrthonormalBasis orthogonal_complement(const DenseMatrix& stacked,
                                       double rank_tol_factor = kRankTolFactor);

/// ln det(XᵀX) = 2 Σ ln|R_ii| from a Householder QR of X.
double log_det_gram(const DenseMatrix& x, double tol = 1e-13);

/// Solves L y = rhs for lower-triangular L.
Vector forward_substitute(const DenseMatrix& lower, std::span<const double> rhs);
/// Solves U y = rhs for upper-triangular U.
Vector back_substitute(const DenseMatrix& upper, std::span<const double> rhs);
/// Solves Lᵀ y = rhs for lower-triangular L.
Vector back_substitute_transposed(const DenseMatrix& lower, std::span<const double> rhs);

} // namespace kaczmarz::linalg
