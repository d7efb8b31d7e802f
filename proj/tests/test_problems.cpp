#include <cmath>
#include <numbers>
#include <random>

#include "doctest.h"
#include "kaczmarz/analysis.hpp"
#include "kaczmarz/errors.hpp"
#include "kaczmarz/problems.hpp"
#include "oracles.hpp"

using namespace kaczmarz;
using namespace kaczmarz::problems;

namespace {

// Published modified Shepp-Logan ellipses: intensity, a, b, x0, y0, phi (degrees).
constexpr double kTable[10][6] = {
    {1.0, 0.69, 0.92, 0.0, 0.0, 0.0},         {-0.8, 0.6624, 0.874, 0.0, -0.0184, 0.0},
    {-0.2, 0.11, 0.31, 0.22, 0.0, -18.0},     {-0.2, 0.16, 0.41, -0.22, 0.0, 18.0},
    {0.1, 0.21, 0.25, 0.0, 0.35, 0.0},        {0.1, 0.046, 0.046, 0.0, 0.1, 0.0},
    {0.1, 0.046, 0.046, 0.0, -0.1, 0.0},      {0.1, 0.046, 0.023, -0.08, -0.605, 0.0},
    {0.1, 0.023, 0.023, 0.0, -0.606, 0.0},    {0.1, 0.023, 0.046, 0.06, -0.605, 0.0},
};

// Membership via the expanded quadratic form A x² + B xy + C y² ≤ 1.
double phantom_value(double x, double y) {
    double v = 0.0;
    for (const auto& e : kTable) {
        const double t = e[5] * std::numbers::pi / 180.0;
        const double c = std::cos(t), s = std::sin(t);
        const double qa = c * c / (e[1] * e[1]) + s * s / (e[2] * e[2]);
        const double qb = 2.0 * c * s * (1.0 / (e[1] * e[1]) - 1.0 / (e[2] * e[2]));
        const double qc = s * s / (e[1] * e[1]) + c * c / (e[2] * e[2]);
        const double dx = x - e[3], dy = y - e[4];
        if (qa * dx * dx + qb * dx * dy + qc * dy * dy <= 1.0 + 1e-12) v += e[0];
    }
    return v;
}

// Slab clipping of the segment against [−h, h]²; returns chord length.
double chord_length(Point p0, Point p1, double h) {
    double t0 = 0.0, t1 = 1.0;
    const double d[2] = {p1.x - p0.x, p1.y - p0.y};
    const double p[2] = {p0.x, p0.y};
    for (int k = 0; k < 2; ++k) {
        if (d[k] == 0.0) {
            if (p[k] < -h || p[k] > h) return 0.0;
            continue;
        }
        double a = (-h - p[k]) / d[k], b = (h - p[k]) / d[k];
        if (a > b) std::swap(a, b);
        t0 = std::max(t0, a);
        t1 = std::min(t1, b);
    }
    if (t1 <= t0) return 0.0;
    return (t1 - t0) * std::hypot(d[0], d[1]);
}

double consistency(const LinearSystem& sys) {
    const auto ax = oracle::matvec(sys.a, *sys.x_star);
    return oracle::dist(ax, sys.b) / oracle::norm(sys.b);
}

} // namespace

TEST_CASE("gen_gaussian_system") {
    const auto s = gen_gaussian_system(2, 1, 7);
    CHECK(s.m() == 2);
    CHECK(s.n() == 1);
    CHECK(consistency(s) <= 1e-12);
    CHECK(oracle::norm(*s.x_star) == doctest::Approx(1.0));
    CHECK(s == gen_gaussian_system(2, 1, 7));
    CHECK_FALSE(s == gen_gaussian_system(2, 1, 8));
    CHECK_THROWS_AS(gen_gaussian_system(1, 2, 1), InvalidArgument);

    const auto big = gen_gaussian_system(200, 100, 1);
    CHECK(std::abs(analysis::gram_stats(analysis::gramian(big.a)).mean) <= 0.02);
}

TEST_CASE("shepp_logan matches a point-in-ellipse oracle") {
    for (std::size_t n : {2, 3, 10, 17}) {
        const auto img = shepp_logan(n);
        REQUIRE(img.pixels.size() == n * n);
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = 0; j < n; ++j) {
                const double x = -1.0 + (2.0 * j + 1.0) / n;
                const double y = 1.0 - (2.0 * i + 1.0) / n;
                CHECK(img.pixels[i * n + j] == doctest::Approx(std::max(0.0, phantom_value(x, y))).epsilon(1e-12));
            }
    }
    const auto img = shepp_logan(16);
    CHECK(img.pixels[0] == 0.0);
    double sum = 0.0;
    for (double v : img.pixels) {
        CHECK(v >= 0.0);
        CHECK(v <= 1.0 + 1e-12);
        sum += v;
    }
    CHECK(sum > 0.0);
    CHECK(shepp_logan(33).pixels[16 * 33 + 16] == doctest::Approx(0.2));
    CHECK_THROWS_AS(shepp_logan(1), InvalidArgument);
}

TEST_CASE("siddon_ray") {
    SUBCASE("horizontal ray through a 1x1 grid") {
        const auto r = siddon_ray({-1, 0}, {1, 0}, 1);
        REQUIRE(r.indices.size() == 1);
        CHECK(r.weights[0] == doctest::Approx(1.0));
    }
    SUBCASE("diagonal of a 2x2 grid") {
        const auto r = siddon_ray({-1, -1}, {1, 1}, 2);
        REQUIRE(r.indices.size() == 2);
        CHECK(r.weights[0] == doctest::Approx(std::sqrt(2.0)));
        CHECK(r.weights[1] == doctest::Approx(std::sqrt(2.0)));
        // bottom-left (row 1, col 0) then top-right (row 0, col 1)
        CHECK(r.indices[0] == 2);
        CHECK(r.indices[1] == 1);
    }
    SUBCASE("ray outside the grid") {
        CHECK(siddon_ray({-5, 3}, {5, 3}, 4).empty());
        CHECK(siddon_ray({3, 3}, {4, 5}, 4).empty());
    }
    SUBCASE("weight sums equal chord lengths for random rays") {
        std::mt19937_64 gen(41);
        std::uniform_real_distribution<double> u(-8.0, 8.0);
        for (int k = 0; k < 1000; ++k) {
            const std::size_t n = 1 + static_cast<std::size_t>(k % 9);
            const Point p0{u(gen), u(gen)}, p1{u(gen), u(gen)};
            const auto r = siddon_ray(p0, p1, n);
            double total = 0.0;
            for (std::size_t i = 0; i < r.indices.size(); ++i) {
                CHECK(r.indices[i] < n * n);
                CHECK(r.weights[i] > 0.0);
                total += r.weights[i];
            }
            CHECK(std::abs(total - chord_length(p0, p1, n / 2.0)) <= 1e-10);
        }
    }
    SUBCASE("a vertical ray along column 2 of a 4x4 grid") {
        const auto r = siddon_ray({0.5, -3}, {0.5, 3}, 4);
        REQUIRE(r.indices.size() == 4);
        for (std::size_t k = 0; k < 4; ++k) {
            CHECK(r.indices[k] % 4 == 2);
            CHECK(r.weights[k] == doctest::Approx(1.0));
        }
    }
}

TEST_CASE("gen_parallel_beam") {
    const auto img = shepp_logan(10);
    SUBCASE("one angle sums pixel columns") {
        const auto s = gen_parallel_beam(img, 1, 10);
        REQUIRE(s.m() == 10);
        for (std::size_t d = 0; d < 10; ++d) {
            double col = 0.0;
            for (std::size_t i = 0; i < 10; ++i) col += img.pixels[i * 10 + d];
            CHECK(s.b[d] == doctest::Approx(col).epsilon(1e-12));
        }
    }
    SUBCASE("consistency, geometry and Gramian band") {
        const auto s = gen_parallel_beam(img, 37, 6);
        CHECK(s.m() == 222);
        CHECK(s.n() == 100);
        CHECK(s.kind == SystemKind::parallel_beam);
        REQUIRE(s.geometry);
        CHECK(s.geometry->angular_range == doctest::Approx(std::numbers::pi));
        CHECK(consistency(s) <= 1e-10);
        const double mean = analysis::gram_stats(analysis::gramian(s.a)).mean;
        CHECK(mean >= 0.08);
        CHECK(mean <= 0.30);
        for (std::size_t i = 0; i < s.m(); ++i) CHECK(oracle::norm(Vector(s.a.row(i).begin(), s.a.row(i).end())) > 0.0);
    }
}

TEST_CASE("gen_fan_beam") {
    const auto img = shepp_logan(10);
    CHECK_THROWS_AS(gen_fan_beam(img, 10, 20, 7.0), InvalidArgument);
    const auto s = gen_fan_beam(img, 10, 20, 20.0);
    CHECK(s.m() <= 200);
    CHECK(s.m() > 100);
    CHECK(consistency(s) <= 1e-10);
    REQUIRE(s.geometry);
    CHECK(s.geometry->mode == BeamMode::fan);
    CHECK(s.geometry->angular_range == doctest::Approx(2.0 * std::numbers::pi));
    for (std::size_t i = 0; i < s.m(); ++i) {
        double row = 0.0;
        for (double v : s.a.row(i)) row += v;
        CHECK(row > 0.0);
        CHECK(row <= 10.0 * std::sqrt(2.0) + 1e-9);
    }
    std::vector<double> gauss;
    for (std::uint64_t seed = 1; seed <= 10; ++seed)
        gauss.push_back(analysis::mutual_coherence(gen_gaussian_system(s.m(), 100, seed).a));
    std::sort(gauss.begin(), gauss.end());
    CHECK(analysis::mutual_coherence(s.a) >= gauss[5]);
}

TEST_CASE("add_noise") {
    const auto s = gen_gaussian_system(30, 10, 3);
    CHECK(add_noise(s, 0.0, 1).b == s.b);
    const auto n1 = add_noise(s, 0.05, 1);
    const auto n2 = add_noise(s, 0.05, 2);
    CHECK(n1.noisy);
    CHECK(n1.x_star == s.x_star);
    CHECK(std::abs(oracle::dist(n1.b, s.b) / oracle::norm(s.b) - 0.05) <= 1e-12);
    CHECK(std::abs(oracle::dist(n2.b, s.b) / oracle::norm(s.b) - 0.05) <= 1e-12);
    CHECK(n1.b != n2.b);
    CHECK_THROWS_AS(add_noise(s, -0.1, 1), InvalidArgument);
}

TEST_CASE("normalize_rows") {
    LinearSystem s;
    s.a = DenseMatrix{{3, 4}, {0, 2}};
    s.b = {10, 2};
    s.x_star = Vector{2, 1};
    const auto n = normalize_rows(s);
    CHECK(n.a(0, 0) == doctest::Approx(0.6));
    CHECK(n.a(0, 1) == doctest::Approx(0.8));
    CHECK(n.b[0] == doctest::Approx(2.0));
    CHECK(n.b[1] == doctest::Approx(1.0));
    CHECK(consistency(n) <= 1e-12);

    const auto twice = normalize_rows(n);
    CHECK(oracle::max_abs_diff(twice.a, n.a) <= 1e-15);

    LinearSystem z;
    z.a = DenseMatrix{{1, 0}, {0, 0}};
    z.b = {1, 0};
    CHECK_THROWS_AS(normalize_rows(z), ZeroRow);
}

TEST_CASE("system kinds round-trip through their names") {
    for (auto k : {SystemKind::gaussian, SystemKind::parallel_beam, SystemKind::fan_beam, SystemKind::custom})
        CHECK(parse_system_kind(to_string(k)) == k);
    CHECK(parse_system_kind("fan") == SystemKind::fan_beam);
    CHECK_THROWS_AS(parse_system_kind("helical"), InvalidArgument);
}
