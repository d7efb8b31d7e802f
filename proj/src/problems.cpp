#include "kaczmarz/problems.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>

#include "kaczmarz/errors.hpp"
#include "kaczmarz/random.hpp"

namespace kaczmarz::problems {

using linalg::dot;
using linalg::norm2;

std::string to_string(SystemKind kind) {
    switch (kind) {
    case SystemKind::gaussian: return "gaussian";
    case SystemKind::parallel_beam: return "parallel_beam";
    case SystemKind::fan_beam: return "fan_beam";
    case SystemKind::custom: return "custom";
    }
    return "custom";
}

SystemKind parse_system_kind(const std::string& text) {
    if (text == "gaussian") return SystemKind::gaussian;
    if (text == "parallel_beam" || text == "parallel") return SystemKind::parallel_beam;
    if (text == "fan_beam" || text == "fan") return SystemKind::fan_beam;
    if (text == "custom") return SystemKind::custom;
    throw InvalidArgument("unknown system kind '" + text + "'");
}

double LinearSystem::consistency_residual() const {
    if (!x_star) throw InvalidArgument("consistency_residual: system has no reference solution");
    const Vector r = linalg::subtract(linalg::multiply(a, *x_star), b);
    const double bn = norm2(b);
    return bn > 0.0 ? norm2(r) / bn : norm2(r);
}

void LinearSystem::validate() const {
    if (a.empty()) throw InvalidArgument("LinearSystem: empty matrix");
    if (b.size() != a.rows()) throw InvalidArgument("LinearSystem: b length differs from row count");
    if (x_star && x_star->size() != a.cols()) {
        throw InvalidArgument("LinearSystem: x_star length differs from column count");
    }
    if (!a.all_finite() || !std::all_of(b.begin(), b.end(), [](double v) { return std::isfinite(v); })) {
        throw InvalidArgument("LinearSystem: non-finite entries");
    }
    for (std::size_t i = 0; i < a.rows(); ++i) {
        if (norm2(a.row(i)) == 0.0) throw ZeroRow("LinearSystem: row " + std::to_string(i) + " is zero");
    }
}

double SparseRow::total_length() const {
    double s = 0.0;
    for (double w : weights) s += w;
    return s;
}

LinearSystem gen_gaussian_system(std::size_t m, std::size_t n, std::uint64_t seed) {
    if (n < 1 || m < n) throw InvalidArgument("gen_gaussian_system: requires m >= n >= 1");
    Rng rng(seed);
    LinearSystem sys;
    sys.a = DenseMatrix(m, n);
    for (double& v : sys.a.data()) v = rng.normal();
    Vector x(n);
    for (double& v : x) v = rng.normal();
    const double xn = norm2(x);
    for (double& v : x) v /= xn;
    sys.b = linalg::multiply(sys.a, x);
    sys.x_star = std::move(x);
    sys.kind = SystemKind::gaussian;
    sys.seed = seed;
    return sys;
}

namespace {

struct Ellipse {
    double intensity, semi_x, semi_y, cx, cy, phi_deg;
};

// Modified Shepp-Logan (Toft) table; intensities chosen so the image lies in [0, 1].
constexpr std::array<Ellipse, 10> kSheppLogan{{
    {1.0, 0.69, 0.92, 0.0, 0.0, 0.0},
    {-0.8, 0.6624, 0.8740, 0.0, -0.0184, 0.0},
    {-0.2, 0.1100, 0.3100, 0.22, 0.0, -18.0},
    {-0.2, 0.1600, 0.4100, -0.22, 0.0, 18.0},
    {0.1, 0.2100, 0.2500, 0.0, 0.35, 0.0},
    {0.1, 0.0460, 0.0460, 0.0, 0.1, 0.0},
    {0.1, 0.0460, 0.0460, 0.0, -0.1, 0.0},
    {0.1, 0.0460, 0.0230, -0.08, -0.605, 0.0},
    {0.1, 0.0230, 0.0230, 0.0, -0.606, 0.0},
    {0.1, 0.0230, 0.0460, 0.06, -0.605, 0.0},
}};

bool inside(const Ellipse& e, double x, double y) {
    const double phi = e.phi_deg * std::numbers::pi / 180.0;
    const double dx = x - e.cx;
    const double dy = y - e.cy;
    const double u = dx * std::cos(phi) + dy * std::sin(phi);
    const double v = -dx * std::sin(phi) + dy * std::cos(phi);
    return (u * u) / (e.semi_x * e.semi_x) + (v * v) / (e.semi_y * e.semi_y) <= 1.0;
}

LinearSystem assemble(const PhantomImage& phantom, const std::vector<SparseRow>& rays,
                      SystemKind kind, BeamGeometry geometry) {
    const std::size_t n = phantom.side * phantom.side;
    std::vector<const SparseRow*> kept;
    for (const auto& r : rays)
        if (r.total_length() > 1e-12) kept.push_back(&r);
    if (kept.empty()) throw InvalidArgument("beam geometry: no ray intersects the grid");

    LinearSystem sys;
    sys.a = DenseMatrix(kept.size(), n);
    for (std::size_t i = 0; i < kept.size(); ++i) {
        auto row = sys.a.row(i);
        for (std::size_t k = 0; k < kept[i]->indices.size(); ++k) row[kept[i]->indices[k]] += kept[i]->weights[k];
    }
    sys.x_star = phantom.pixels;
    sys.b = linalg::multiply(sys.a, phantom.pixels);
    sys.kind = kind;
    sys.geometry = geometry;
    return sys;
}

void check_phantom(const PhantomImage& phantom) {
    if (phantom.side < 2 || phantom.pixels.size() != phantom.side * phantom.side) {
        throw InvalidArgument("phantom: side must be >= 2 with side² pixels");
    }
}

} // namespace

PhantomImage shepp_logan(std::size_t n) {
    if (n < 2) throw InvalidArgument("shepp_logan: n must be >= 2");
    PhantomImage img{n, Vector(n * n, 0.0)};
    const double dn = static_cast<double>(n);
    for (std::size_t i = 0; i < n; ++i) {
        const double y = 1.0 - (2.0 * static_cast<double>(i) + 1.0) / dn;
        for (std::size_t j = 0; j < n; ++j) {
            const double x = -1.0 + (2.0 * static_cast<double>(j) + 1.0) / dn;
            double v = 0.0;
            for (const auto& e : kSheppLogan)
                if (inside(e, x, y)) v += e.intensity;
            img.pixels[i * n + j] = std::max(v, 0.0); // drop -1e-17 round-off
        }
    }
    return img;
}

SparseRow siddon_ray(Point p0, Point p1, std::size_t n) {
    if (n < 1) throw InvalidArgument("siddon_ray: grid must have at least one pixel");
    const double dx = p1.x - p0.x;
    const double dy = p1.y - p0.y;
    if (dx == 0.0 && dy == 0.0) throw InvalidArgument("siddon_ray: degenerate ray");
    const double half = static_cast<double>(n) / 2.0;
    const double lo = -half;
    const double hi = half;

    // clip the parameter range [0, 1] against the grid box
    double tmin = 0.0;
    double tmax = 1.0;
    auto clip = [&](double p, double d) {
        if (d == 0.0) return p >= lo && p <= hi;
        const double ta = (lo - p) / d;
        const double tb = (hi - p) / d;
        tmin = std::max(tmin, std::min(ta, tb));
        tmax = std::min(tmax, std::max(ta, tb));
        return true;
    };
    if (!clip(p0.x, dx) || !clip(p0.y, dy) || tmax <= tmin) return {};

    std::vector<double> alphas{tmin, tmax};
    alphas.reserve(2 * n + 4);
    for (std::size_t k = 0; k <= n; ++k) {
        const double plane = lo + static_cast<double>(k);
        if (dx != 0.0) {
            const double t = (plane - p0.x) / dx;
            if (t > tmin && t < tmax) alphas.push_back(t);
        }
        if (dy != 0.0) {
            const double t = (plane - p0.y) / dy;
            if (t > tmin && t < tmax) alphas.push_back(t);
        }
    }
    std::sort(alphas.begin(), alphas.end());

    const double length = std::hypot(dx, dy);
    const auto last = static_cast<long>(n) - 1;
    SparseRow row;
    for (std::size_t k = 0; k + 1 < alphas.size(); ++k) {
        const double dt = alphas[k + 1] - alphas[k];
        if (dt <= 1e-13) continue;
        const double tm = 0.5 * (alphas[k] + alphas[k + 1]);
        const double xm = p0.x + tm * dx;
        const double ym = p0.y + tm * dy;
        const long col = std::clamp(static_cast<long>(std::floor(xm - lo)), 0L, last);
        const long from_bottom = std::clamp(static_cast<long>(std::floor(ym - lo)), 0L, last);
        const std::size_t idx = static_cast<std::size_t>(last - from_bottom) * n + static_cast<std::size_t>(col);
        const double w = dt * length;
        if (!row.indices.empty() && row.indices.back() == idx) {
            row.weights.back() += w;
        } else {
            row.indices.push_back(idx);
            row.weights.push_back(w);
        }
    }
    return row;
}

LinearSystem gen_parallel_beam(const PhantomImage& phantom, std::size_t num_angles,
                               std::size_t num_detectors) {
    check_phantom(phantom);
    if (num_angles < 1 || num_detectors < 1) throw InvalidArgument("gen_parallel_beam: counts must be >= 1");
    const std::size_t n = phantom.side;
    const double dn = static_cast<double>(n);
    const double spacing =
        num_detectors > 1 ? std::min(1.0, dn * std::numbers::sqrt2 / static_cast<double>(num_detectors - 1)) : 0.0;
    const double reach = dn; // beyond the half-diagonal

    std::vector<SparseRow> rays;
    rays.reserve(num_angles * num_detectors);
    for (std::size_t k = 0; k < num_angles; ++k) {
        const double theta = std::numbers::pi * static_cast<double>(k) / static_cast<double>(num_angles);
        const double ux = std::cos(theta);
        const double uy = std::sin(theta);
        for (std::size_t d = 0; d < num_detectors; ++d) {
            const double s = (static_cast<double>(d) - 0.5 * static_cast<double>(num_detectors - 1)) * spacing;
            const Point centre{s * ux, s * uy};
            rays.push_back(siddon_ray({centre.x + reach * uy, centre.y - reach * ux},
                                      {centre.x - reach * uy, centre.y + reach * ux}, n));
        }
    }
    BeamGeometry g{n, num_angles, num_detectors, BeamMode::parallel, 0.0, std::numbers::pi};
    return assemble(phantom, rays, SystemKind::parallel_beam, g);
}

LinearSystem gen_fan_beam(const PhantomImage& phantom, std::size_t num_angles,
                          std::size_t num_detectors, double source_radius) {
    check_phantom(phantom);
    if (num_angles < 1 || num_detectors < 1) throw InvalidArgument("gen_fan_beam: counts must be >= 1");
    const std::size_t n = phantom.side;
    const double circumradius = static_cast<double>(n) * std::numbers::sqrt2 / 2.0;
    if (!(source_radius > circumradius)) {
        throw InvalidArgument("gen_fan_beam: source must lie outside the grid (radius > n·√2/2)");
    }
    const double half_fan = std::asin(circumradius / source_radius);
    const double bin = 2.0 * half_fan / static_cast<double>(num_detectors);

    std::vector<SparseRow> rays;
    rays.reserve(num_angles * num_detectors);
    for (std::size_t k = 0; k < num_angles; ++k) {
        const double beta = 2.0 * std::numbers::pi * static_cast<double>(k) / static_cast<double>(num_angles);
        const Point src{source_radius * std::cos(beta), source_radius * std::sin(beta)};
        for (std::size_t d = 0; d < num_detectors; ++d) {
            const double gamma = -half_fan + (static_cast<double>(d) + 0.5) * bin;
            const double dir = beta + std::numbers::pi + gamma;
            const double len = 2.0 * source_radius;
            rays.push_back(siddon_ray(src, {src.x + len * std::cos(dir), src.y + len * std::sin(dir)}, n));
        }
    }
    BeamGeometry g{n, num_angles, num_detectors, BeamMode::fan, source_radius, 2.0 * std::numbers::pi};
    return assemble(phantom, rays, SystemKind::fan_beam, g);
}

LinearSystem add_noise(LinearSystem sys, double rel_magnitude, std::uint64_t seed) {
    if (!(rel_magnitude >= 0.0)) throw InvalidArgument("add_noise: rel_magnitude must be >= 0");
    if (rel_magnitude == 0.0) return sys;
    const double bn = norm2(sys.b);
    if (bn == 0.0) return sys;
    Rng rng(seed);
    Vector eps(sys.b.size());
    for (double& v : eps) v = rng.normal();
    const double scale = rel_magnitude * bn / norm2(eps);
    for (std::size_t i = 0; i < eps.size(); ++i) sys.b[i] += scale * eps[i];
    sys.noisy = true;
    return sys;
}

LinearSystem normalize_rows(LinearSystem sys) {
    for (std::size_t i = 0; i < sys.a.rows(); ++i) {
        auto row = sys.a.row(i);
        const double rn = norm2(row);
        if (rn == 0.0) throw ZeroRow("normalize_rows: row " + std::to_string(i) + " is zero");
        for (double& v : row) v /= rn;
        sys.b[i] /= rn;
    }
    return sys;
}

} // namespace kaczmarz::problems
