#include <cmath>
#include <random>

#include "doctest.h"
#include "kaczmarz/analysis.hpp"
#include "kaczmarz/bounds.hpp"
#include "kaczmarz/errors.hpp"
#include "kaczmarz/problems.hpp"
#include "oracles.hpp"

using namespace kaczmarz;
using namespace kaczmarz::analysis;

TEST_CASE("gramian") {
    const DenseMatrix g = gramian(DenseMatrix{{2, 0}, {0, 5}});
    CHECK(oracle::max_abs_diff(g, DenseMatrix::identity(2)) == 0.0);
    CHECK(gramian(DenseMatrix{{1, 2}, {1, 2}})(0, 1) == doctest::Approx(1.0));
    CHECK(gramian(DenseMatrix{{1, 0}, {1, 1}})(0, 1) == doctest::Approx(1.0 / std::sqrt(2.0)));
    CHECK_THROWS_AS(gramian(DenseMatrix{{1, 0}, {0, 0}}), ZeroRow);

    std::mt19937_64 gen(1);
    const DenseMatrix r = gramian(oracle::random_matrix(30, 8, gen));
    for (std::size_t i = 0; i < 30; ++i) {
        CHECK(std::abs(r(i, i) - 1.0) <= 1e-12);
        for (std::size_t j = 0; j < 30; ++j) CHECK(std::abs(r(i, j) - r(j, i)) <= 1e-12);
    }
}

TEST_CASE("mutual_coherence") {
    CHECK(mutual_coherence(DenseMatrix::identity(5)) == 0.0);
    CHECK(mutual_coherence(DenseMatrix{{1, 2, 0}, {0, 1, 1}, {-2, -4, 0}}) == doctest::Approx(1.0));
    CHECK_THROWS_AS(mutual_coherence(DenseMatrix{{1, 2}}), InvalidArgument);

    std::mt19937_64 gen(2);
    DenseMatrix a = oracle::random_matrix(12, 5, gen);
    const double phi = mutual_coherence(a);
    for (std::size_t j = 0; j < 5; ++j) a(3, j) *= 250.0;
    CHECK(std::abs(mutual_coherence(a) - phi) <= 1e-12);
    CHECK(phi >= bounds::welch_bound(12, 5).sqrt_form);

    std::vector<double> phis;
    for (std::uint64_t seed = 1; seed <= 10; ++seed)
        phis.push_back(mutual_coherence(problems::gen_gaussian_system(200, 100, seed).a));
    std::sort(phis.begin(), phis.end());
    const double median = 0.5 * (phis[4] + phis[5]);
    CHECK(median >= 0.25);
    CHECK(median <= 0.55);
}

TEST_CASE("gram_stats") {
    const auto id = gram_stats(DenseMatrix::identity(4));
    CHECK(id.mean == 0.0);
    CHECK(id.median == 0.0);
    const DenseMatrix g{{1, 0.1, 0.2}, {0.1, 1, 0.3}, {0.2, 0.3, 1}};
    const auto s = gram_stats(g);
    CHECK(s.mean == doctest::Approx(0.2));
    CHECK(s.median == doctest::Approx(0.2));
    const DenseMatrix h{{1, 0.1, 0.2, 0.3}, {0.1, 1, 0.4, 0.5}, {0.2, 0.4, 1, 0.9}, {0.3, 0.5, 0.9, 1}};
    CHECK(gram_stats(h).median == doctest::Approx(0.35));
    CHECK(std::abs(gram_stats(gramian(problems::gen_gaussian_system(200, 100, 1).a)).mean) <= 0.02);
}

TEST_CASE("angle_histogram") {
    const auto h = angle_histogram(DenseMatrix::identity(5));
    CHECK(h.counts.size() == 180);
    CHECK(h.edges.front() == 0.0);
    CHECK(h.edges.back() == 180.0);
    CHECK(h.total() == 10);
    CHECK(h.counts[90] == 10);

    const auto dup = angle_histogram(gramian(DenseMatrix{{1, 1}, {2, 2}, {-1, -1}}));
    CHECK(dup.counts[0] == 1);
    CHECK(dup.counts[179] == 2);

    const auto s = problems::gen_gaussian_system(200, 100, 1);
    const auto gh = angle_histogram(gramian(s.a), 1.0, true);
    CHECK(gh.total() == 200 * 199 / 2);
    CHECK(gh.mode_bin() >= 85);
    CHECK(gh.mode_bin() < 95);
    double total = 0.0;
    for (double d : gh.density) total += d;
    CHECK(total == doctest::Approx(1.0));

    CHECK(angle_histogram(DenseMatrix::identity(3), 7.0).counts.size() == 26);
    CHECK_THROWS_AS(angle_histogram(DenseMatrix::identity(3), 0.0), InvalidArgument);
}

TEST_CASE("coherence_report") {
    const auto r = coherence_report(problems::gen_gaussian_system(40, 10, 3).a);
    CHECK(r.m == 40);
    CHECK(r.n == 10);
    CHECK(r.mutual_coherence >= r.welch_sqrt);
    CHECK(r.welch_paper == doctest::Approx(30.0 / 390.0));
    CHECK(r.mutual_coherence <= 1.0);
    CHECK(std::abs(r.mean_gram) <= 1.0);
}
