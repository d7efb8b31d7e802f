#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "kaczmarz/linalg.hpp"

namespace kaczmarz::problems {

using linalg::DenseMatrix;
using linalg::Vector;

enum class SystemKind { gaussian, parallel_beam, fan_beam, custom };

std::string to_string(SystemKind kind);
SystemKind parse_system_kind(const std::string& text);

enum class BeamMode { parallel, fan };

struct BeamGeometry {
    std::size_t grid_side = 0; // image is n×n, N = n²
    std::size_t num_angles = 0;
    std::size_t num_detectors = 0;
    BeamMode mode = BeamMode::parallel;
    double source_radius = 0.0; // fan only, grid units
    double angular_range = 0.0; // π for parallel, 2π for fan

    friend bool operator==(const BeamGeometry&, const BeamGeometry&) = default;
};

struct LinearSystem {
    DenseMatrix a;
    Vector b;
    std::optional<Vector> x_star;
    SystemKind kind = SystemKind::custom;
    std::optional<BeamGeometry> geometry;
    std::uint64_t seed = 0;
    bool noisy = false;

    std::size_t m() const noexcept { return a.rows(); }
    std::size_t n() const noexcept { return a.cols(); }

    /// ‖A x* − b‖₂ / ‖b‖₂ (absolute residual when b = 0). Requires x_star.
    double consistency_residual() const;
    /// Throws InvalidArgument on shape mismatch, non-finite values or zero rows.
    void validate() const;

    friend bool operator==(const LinearSystem&, const LinearSystem&) = default;
};

struct PhantomImage {
    std::size_t side = 0;
    Vector pixels; // row-major, row 0 at the top of the image
};

/// Sparse ray row: pixel index → intersection length.
struct SparseRow {
    std::vector<std::size_t> indices;
    std::vector<double> weights;

    bool empty() const noexcept { return indices.empty(); }
    double total_length() const;
};

struct Point {
    double x = 0.0;
    double y = 0.0;
};

LinearSystem gen_gaussian_system(std::size_t m, std::size_t n, std::uint64_t seed);

/// Modified Shepp-Logan phantom sampled at pixel centres of an n×n grid on [-1, 1]².
PhantomImage shepp_logan(std::size_t n);

/// Exact intersection lengths of the segment p0→p1 with the pixels of the n×n
/// grid covering [−n/2, n/2]². Pixel (row i, col j) covers
/// x ∈ [−n/2 + j, −n/2 + j + 1], y ∈ [n/2 − i − 1, n/2 − i], index i·n + j.
SparseRow siddon_ray(Point p0, Point p1, std::size_t n);

/// Parallel-beam system: angles uniform in [0, π), detectors centred on the
/// rotation axis with spacing min(1, n√2 / (D − 1)) so they cover the grid
/// diagonal without ever being sparser than one pixel.
LinearSystem gen_parallel_beam(const PhantomImage& phantom, std::size_t num_angles,
                               std::size_t num_detectors);

/// Fan-beam system: sources uniform on a circle of `source_radius` over [0, 2π),
/// each emitting `num_detectors` rays at the centres of equal angular bins of
/// the fan that just subtends the grid's circumscribed circle.
LinearSystem gen_fan_beam(const PhantomImage& phantom, std::size_t num_angles,
                          std::size_t num_detectors, double source_radius);

/// b ← b + ε with ε Gaussian, rescaled to ‖ε‖ = rel_magnitude·‖b‖.
LinearSystem add_noise(LinearSystem sys, double rel_magnitude, std::uint64_t seed);

/// Scales every row (and its b entry) to unit ℓ² norm. Throws ZeroRow.
LinearSystem normalize_rows(LinearSystem sys);

} // namespace kaczmarz::problems
