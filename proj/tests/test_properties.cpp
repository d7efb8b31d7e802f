#include <algorithm>
#include <cmath>
#include <functional>
#include <random>

#include "doctest.h"
#include "kaczmarz/analysis.hpp"
#include "kaczmarz/bounds.hpp"
#include "kaczmarz/errors.hpp"
#include "kaczmarz/problems.hpp"
#include "kaczmarz/solvers.hpp"
#include "oracles.hpp"

using namespace kaczmarz;
using namespace kaczmarz::solvers;
using problems::LinearSystem;

namespace {

// Random consistent systems of varied shape and conditioning: independent rows,
// rows with wildly different norms, and clusters of nearly parallel rows.
class SystemGen {
public:
    explicit SystemGen(std::uint64_t seed) : gen_(seed) {}

    LinearSystem next(bool square = false) {
        const std::size_t n = pick(2, 10);
        const std::size_t m = square ? n : pick(n, 3 * n);
        DenseMatrix a = oracle::random_matrix(m, n, gen_);
        switch (pick(0, 2)) {
        case 1:
            for (std::size_t i = 0; i < m; ++i) {
                const double s = std::pow(10.0, unit() * 4.0 - 2.0);
                for (double& v : a.row(i)) v *= s;
            }
            break;
        case 2:
            for (std::size_t i = 1; i < m; i += 2)
                for (std::size_t j = 0; j < n; ++j) a(i, j) = a(i - 1, j) + 0.05 * (unit() - 0.5);
            break;
        default:
            break;
        }
        LinearSystem s;
        s.a = a;
        s.x_star = oracle::random_vector(n, gen_);
        s.b = oracle::matvec(a, *s.x_star);
        return s;
    }

    std::size_t pick(std::size_t lo, std::size_t hi) {
        return std::uniform_int_distribution<std::size_t>(lo, hi)(gen_);
    }
    double unit() { return std::uniform_real_distribution<double>(0.0, 1.0)(gen_); }
    std::mt19937_64& engine() { return gen_; }

private:
    std::mt19937_64 gen_;
};

struct Solver {
    std::string name;
    std::function<IterationTrace(const LinearSystem&, const StopRule&, Rng&, const SolverOptions&)> run;
};

std::vector<Solver> all_solvers() {
    using samplers::SamplerPolicy;
    std::vector<Solver> out;
    for (auto policy : {SamplerPolicy::cyclic(), SamplerPolicy::uniform(), SamplerPolicy::norm_squared(),
                        SamplerPolicy::angle_pair()}) {
        out.push_back({policy.tag(), [policy](const LinearSystem& s, const StopRule& st, Rng& r,
                                              const SolverOptions& o) { return run_kaczmarz(s, policy, st, r, o); }});
    }
    out.push_back({"custom", [](const LinearSystem& s, const StopRule& st, Rng& r, const SolverOptions& o) {
                       Vector w(s.m());
                       for (std::size_t i = 0; i < w.size(); ++i) w[i] = 1.0 + static_cast<double>(i % 3);
                       return run_kaczmarz(s, SamplerPolicy::custom(w), st, r, o);
                   }});
    out.push_back({"rkha", [](const LinearSystem& s, const StopRule& st, Rng& r, const SolverOptions& o) {
                       return run_rkha(s, st, r, o);
                   }});
    out.push_back({"block", [](const LinearSystem& s, const StopRule& st, Rng&, const SolverOptions& o) {
                       return run_block_kaczmarz(s, samplers::contiguous_partition(s.m(), 2), st, o);
                   }});
    for (auto variant : {RkosVariant::gram_schmidt, RkosVariant::qr}) {
        out.push_back({variant == RkosVariant::qr ? "rkos_qr" : "rkos_gs",
                       [variant](const LinearSystem& s, const StopRule& st, Rng& r, const SolverOptions& o) {
                           return run_rkos(s, std::min<std::size_t>(2, s.n()), st, r, variant, o);
                       }});
    }
    return out;
}

StopRule fixed_steps(std::size_t steps) {
    StopRule s;
    s.max_steps = steps;
    s.residual_tol = 0.0;
    return s;
}

double max_orthonormality_defect(const linalg::OrthonormalBasis& b) {
    double worst = 0.0;
    for (std::size_t i = 0; i < b.basis_dim(); ++i)
        for (std::size_t j = 0; j < b.basis_dim(); ++j)
            worst = std::max(worst, std::abs(linalg::dot(b.column(i), b.column(j)) - (i == j ? 1.0 : 0.0)));
    return worst;
}

std::vector<Vector> rows_of(const DenseMatrix& a, const std::vector<std::size_t>& idx) {
    std::vector<Vector> out;
    for (std::size_t i : idx) out.emplace_back(a.row(i).begin(), a.row(i).end());
    return out;
}

} // namespace

TEST_CASE("orthonormal bases stay orthonormal, including on coherent tomography rows") {
    SystemGen g(101);
    for (int k = 0; k < 60; ++k) {
        const auto s = g.next();
        std::vector<std::size_t> idx(std::min(s.m(), s.n()));
        for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
        const auto rows = rows_of(s.a, idx);
        CHECK(max_orthonormality_defect(linalg::mgs_orthonormalize(rows)) <= 1e-12);
        CHECK(max_orthonormality_defect(linalg::householder_qr(s.a.select_rows(idx).transpose()).q) <= 1e-12);
    }
    const auto beam = problems::gen_parallel_beam(problems::shepp_logan(12), 30, 10);
    for (std::size_t start = 0; start + 12 <= beam.m(); start += 12) {
        std::vector<std::size_t> idx;
        for (std::size_t i = start; i < start + 12; ++i) idx.push_back(i);
        CHECK(max_orthonormality_defect(linalg::mgs_orthonormalize(rows_of(beam.a, idx))) <= 1e-12);
    }
}

TEST_CASE("QR and modified Gram-Schmidt span the same subspace") {
    SystemGen g(102);
    for (int k = 0; k < 60; ++k) {
        const auto s = g.next();
        const std::size_t p = g.pick(1, std::min(s.m(), s.n()));
        std::vector<std::size_t> idx;
        for (std::size_t i = 0; i < p; ++i) idx.push_back(i);
        const auto q1 = linalg::mgs_orthonormalize(rows_of(s.a, idx));
        const auto q2 = linalg::householder_qr(s.a.select_rows(idx).transpose()).q;
        for (double angle : linalg::principal_angles(q1, q2)) CHECK(angle <= 1e-10);
    }
}

TEST_CASE("svd reconstructs random matrices up to 50x50") {
    SystemGen g(103);
    for (int k = 0; k < 12; ++k) {
        const std::size_t m = g.pick(1, 50), n = g.pick(1, 50);
        const DenseMatrix a = oracle::random_matrix(m, n, g.engine());
        const auto f = linalg::svd(a);
        DenseMatrix us = f.u;
        for (std::size_t i = 0; i < us.rows(); ++i)
            for (std::size_t j = 0; j < us.cols(); ++j) us(i, j) *= f.sigma[j];
        const DenseMatrix rec = oracle::matmul(us, oracle::transpose(f.v));
        double diff = 0.0;
        for (std::size_t i = 0; i < m; ++i)
            for (std::size_t j = 0; j < n; ++j) diff += std::pow(rec(i, j) - a(i, j), 2);
        CHECK(std::sqrt(diff) <= 1e-10 * linalg::frobenius_norm(a));
    }
}

TEST_CASE("pseudo_inverse satisfies the Penrose identities") {
    SystemGen g(104);
    for (int k = 0; k < 100; ++k) {
        const std::size_t m = g.pick(1, 8), n = g.pick(1, 8);
        const DenseMatrix a = oracle::random_matrix(m, n, g.engine());
        const DenseMatrix p = linalg::pseudo_inverse(a);
        const DenseMatrix ap = oracle::matmul(a, p), pa = oracle::matmul(p, a);
        CHECK(oracle::max_abs_diff(oracle::matmul(ap, a), a) <= 1e-9);
        CHECK(oracle::max_abs_diff(oracle::matmul(pa, p), p) <= 1e-9);
        CHECK(oracle::max_abs_diff(ap, oracle::transpose(ap)) <= 1e-9);
        CHECK(oracle::max_abs_diff(pa, oracle::transpose(pa)) <= 1e-9);
    }
}

TEST_CASE("log_det_gram agrees with a cofactor determinant") {
    SystemGen g(105);
    for (int k = 0; k < 60; ++k) {
        const std::size_t n = g.pick(1, 6);
        const DenseMatrix x = oracle::random_matrix(g.pick(n, 9), n, g.engine());
        const double det = oracle::cofactor_det(oracle::matmul(oracle::transpose(x), x));
        CHECK(std::exp(linalg::log_det_gram(x)) == doctest::Approx(det).epsilon(1e-8));
    }
}

TEST_CASE("principal angles are symmetric in their arguments") {
    SystemGen g(106);
    for (int k = 0; k < 60; ++k) {
        const std::size_t n = g.pick(2, 8);
        const auto u = linalg::householder_qr(oracle::random_matrix(n, g.pick(1, n), g.engine())).q;
        const auto v = linalg::householder_qr(oracle::random_matrix(n, g.pick(1, n), g.engine())).q;
        const auto ab = linalg::principal_angles(u, v), ba = linalg::principal_angles(v, u);
        REQUIRE(ab.size() == ba.size());
        for (std::size_t i = 0; i < ab.size(); ++i) CHECK(std::abs(ab[i] - ba[i]) <= 1e-12);
    }
}

TEST_CASE("generators are deterministic and consistent; normalization is idempotent") {
    for (std::uint64_t seed : {1u, 2u, 3u}) {
        CHECK(problems::gen_gaussian_system(30, 10, seed) == problems::gen_gaussian_system(30, 10, seed));
        const auto fan = problems::gen_fan_beam(problems::shepp_logan(8), 6, 9, 16.0);
        CHECK(fan == problems::gen_fan_beam(problems::shepp_logan(8), 6, 9, 16.0));
        for (const auto& s : {problems::gen_gaussian_system(30, 10, seed), fan,
                              problems::gen_parallel_beam(problems::shepp_logan(8), 5 + seed, 7)}) {
            CHECK(s.consistency_residual() <= 1e-10);
            const auto once = problems::normalize_rows(s);
            const auto twice = problems::normalize_rows(once);
            CHECK(oracle::max_abs_diff(once.a, twice.a) <= 1e-15);
            for (std::size_t i = 0; i < s.m(); ++i) CHECK(std::abs(once.b[i] - twice.b[i]) <= 1e-15 * (1 + std::abs(once.b[i])));
        }
    }
}

TEST_CASE("angle weights ignore row scaling; norm weights of a normalized matrix are uniform") {
    SystemGen g(107);
    for (int k = 0; k < 30; ++k) {
        const auto s = g.next();
        DenseMatrix scaled = s.a;
        for (std::size_t i = 0; i < scaled.rows(); ++i) {
            const double c = (g.unit() < 0.5 ? -1.0 : 1.0) * std::pow(10.0, 3.0 * g.unit() - 1.5);
            for (double& v : scaled.row(i)) v *= c;
        }
        const std::size_t f = g.pick(0, s.m() - 1);
        const Vector w1 = samplers::angle_weights(s.a, f), w2 = samplers::angle_weights(scaled, f);
        for (std::size_t i = 0; i < w1.size(); ++i) CHECK(std::abs(w1[i] - w2[i]) <= 1e-12);

        const Vector nw = samplers::row_norm_weights(problems::normalize_rows(s).a);
        for (double w : nw) CHECK(w == doctest::Approx(nw.front()).epsilon(1e-14));
    }
}

TEST_CASE("random partitions cover every row exactly once") {
    Rng rng(108);
    for (int k = 0; k < 100; ++k) {
        const std::size_t m = 1 + rng.index(40), p = 1 + rng.index(m);
        const auto part = samplers::random_partition(m, p, rng);
        std::vector<int> seen(m, 0);
        for (const auto& b : part.blocks) {
            CHECK(b.size() <= p);
            for (std::size_t i : b) seen.at(i)++;
        }
        CHECK(std::all_of(seen.begin(), seen.end(), [](int c) { return c == 1; }));
    }
}

TEST_CASE("every solver is monotone in the error on every consistent system") {
    SystemGen g(109);
    const auto solvers = all_solvers();
    for (int k = 0; k < 100; ++k) {
        const auto s = g.next();
        for (const auto& solver : solvers) {
            Rng rng(split_seed(109, static_cast<std::uint64_t>(k)));
            const auto t = solver.run(s, fixed_steps(5 * s.m()), rng, {});
            const double e0 = t.records.front().error;
            for (std::size_t j = 1; j < t.records.size(); ++j) {
                INFO(solver.name << " system " << k << " step " << j);
                CHECK(t.records[j].error <= t.records[j - 1].error + 1e-12 * e0);
            }
        }
    }
}

TEST_CASE("each step removes exactly the squared length of its correction") {
    SystemGen g(110);
    const auto solvers = all_solvers();
    SolverOptions opts;
    opts.record_iterates = true;
    for (int k = 0; k < 25; ++k) {
        const auto s = g.next();
        for (const auto& solver : solvers) {
            Rng rng(split_seed(110, static_cast<std::uint64_t>(k)));
            const auto t = solver.run(s, fixed_steps(3 * s.m()), rng, opts);
            REQUIRE(t.iterates.size() == t.records.size());
            // errors are differences of vectors of size ~‖x*‖, so they carry absolute rounding of that order
            const double ulp = 1e-13 * (oracle::norm(*s.x_star) + t.records.front().error);
            for (std::size_t j = 1; j < t.records.size(); ++j) {
                const double e_prev = t.records[j - 1].error, e = t.records[j].error;
                const double roundoff = ulp * (e_prev + ulp);
                const double step_sq = std::pow(oracle::dist(t.iterates[j], t.iterates[j - 1]), 2);
                INFO(solver.name << " system " << k << " step " << j);
                CHECK(std::abs((e_prev * e_prev - e * e) - step_sq) <= 1e-10 * e_prev * e_prev + roundoff);
            }
        }
    }
}

TEST_CASE("scaling the initial error scales the whole error trajectory") {
    SystemGen g(111);
    const auto solvers = all_solvers();
    for (int k = 0; k < 20; ++k) {
        const auto s = g.next();
        const Vector d = oracle::random_vector(s.n(), g.engine());
        for (double c : {0.25, 3.0, 40.0}) {
            for (const auto& solver : solvers) {
                SolverOptions base, scaled;
                base.x0 = Vector(s.n());
                scaled.x0 = Vector(s.n());
                for (std::size_t i = 0; i < s.n(); ++i) {
                    (*base.x0)[i] = (*s.x_star)[i] + d[i];
                    (*scaled.x0)[i] = (*s.x_star)[i] + c * d[i];
                }
                Rng r1(split_seed(111, static_cast<std::uint64_t>(k))), r2(split_seed(111, static_cast<std::uint64_t>(k)));
                const auto t1 = solver.run(s, fixed_steps(2 * s.m()), r1, base);
                const auto t2 = solver.run(s, fixed_steps(2 * s.m()), r2, scaled);
                // a run may stop early on an exactly zero residual
                const std::size_t len = std::min(t1.records.size(), t2.records.size());
                const double ulp = 1e-13 * (oracle::norm(*s.x_star) + c * oracle::norm(d));
                for (std::size_t j = 0; j < len; ++j) {
                    INFO(solver.name << " system " << k << " c " << c << " step " << j);
                    CHECK(t1.records[j].selected == t2.records[j].selected);
                    const double expect = c * t1.records[j].error;
                    CHECK(std::abs(t2.records[j].error - expect) <= 1e-12 * expect + ulp);
                }
            }
        }
    }
}

TEST_CASE("every full-support policy converges on full-column-rank systems") {
    const auto solvers = all_solvers();
    for (const auto& solver : solvers) {
        for (std::uint64_t k = 0; k < 20; ++k) {
            const auto s = problems::gen_gaussian_system(20, 10, split_seed(112, k));
            StopRule stop;
            stop.max_steps = 200000;
            stop.residual_tol = 0.0;
            stop.error_tol = 1e-6 / oracle::norm(*s.x_star);
            Rng rng(split_seed(112, k, 1));
            const auto t = solver.run(s, stop, rng, {});
            INFO(solver.name << " system " << k);
            CHECK(t.last().error <= 1e-6);
        }
    }
}

TEST_CASE("RKHA never pairs a row with itself") {
    SystemGen g(113);
    for (int k = 0; k < 30; ++k) {
        const auto s = g.next();
        Rng rng(split_seed(113, static_cast<std::uint64_t>(k)));
        const auto t = run_rkha(s, fixed_steps(6 * s.m()), rng);
        for (std::size_t j = 2; j < t.records.size(); ++j) {
            if (t.records[j].block_step == t.records[j - 1].block_step) CHECK(t.records[j].selected != t.records[j - 1].selected);
        }
    }
}

TEST_CASE("RKOS removes exactly the block-basis component of the error") {
    SystemGen g(114);
    SolverOptions opts;
    opts.record_iterates = true;
    for (int k = 0; k < 30; ++k) {
        const auto s = g.next();
        const std::size_t p = g.pick(1, std::min<std::size_t>(4, s.n()));
        for (auto variant : {RkosVariant::gram_schmidt, RkosVariant::qr}) {
            Rng rng(split_seed(114, static_cast<std::uint64_t>(k)));
            const auto t = run_rkos(s, p, fixed_steps(3 * s.m()), rng, variant, opts);
            const double ulp = 1e-13 * (oracle::norm(*s.x_star) + t.records.front().error);
            for (std::size_t j = 1; j < t.records.size(); ++j) {
                const double roundoff = ulp * (t.records[j - 1].error + ulp);
                Vector zk(s.n());
                for (std::size_t i = 0; i < s.n(); ++i) zk[i] = t.iterates[j - 1][i] - (*s.x_star)[i];
                const auto basis = linalg::mgs_orthonormalize(rows_of(s.a, t.records[j].selected));
                double removed = 0.0;
                for (std::size_t l = 0; l < basis.basis_dim(); ++l) removed += std::pow(linalg::dot(basis.column(l), zk), 2);
                const double before = std::pow(t.records[j - 1].error, 2), after = std::pow(t.records[j].error, 2);
                CHECK(std::abs(after - (before - removed)) <= 1e-10 * before + roundoff);
            }
        }
    }
}

TEST_CASE("deterministic envelopes are non-increasing and within [0, z0]") {
    SystemGen g(115);
    for (int k = 0; k < 30; ++k) {
        auto s = problems::normalize_rows(g.next(true));
        const double z0 = g.unit() * 5.0 + 0.1;
        std::vector<bounds::BoundReport> reps;
        reps.push_back(bounds::strohmer_bound(s.a, z0, 50));
        const auto part = samplers::contiguous_partition(s.m(), g.pick(1, s.n()));
        try {
            reps.push_back(bounds::galantai_bound(s.a, part, z0, 10));
            reps.push_back(bounds::ssw_bound(s.a, part, z0, 10));
            reps.push_back(bounds::ssw_bound(s.a, part, z0, 10, bounds::AngleMode::smallest));
        } catch (const DegenerateBlock&) {
        }
        reps.push_back(bounds::rkos_expected_decay(s.n(), g.pick(1, s.n()), 10));
        for (const auto& r : reps) {
            const double top = r.kind == "rkos" ? 1.0 : z0;
            INFO(r.kind);
            CHECK(r.envelope.front() == doctest::Approx(top));
            for (std::size_t t = 0; t < r.envelope.size(); ++t) {
                CHECK(r.envelope[t] >= 0.0);
                CHECK(r.envelope[t] <= top * (1 + 1e-12));
                if (t > 0) CHECK(r.envelope[t] <= r.envelope[t - 1]);
            }
        }
    }
}

TEST_CASE("randomized Kaczmarz stays under the expected-error envelope on average") {
    SystemGen g(116);
    for (int k = 0; k < 3; ++k) {
        const auto s = g.next();
        const std::size_t p_max = 500, trials = 200;
        const double z0 = std::pow(oracle::norm(*s.x_star), 2);
        const auto env = bounds::strohmer_bound(s.a, z0, p_max).envelope;
        Vector mean(p_max + 1, 0.0);
        for (std::size_t t = 0; t < trials; ++t) {
            Rng rng(split_seed(116, t, static_cast<std::uint64_t>(k)));
            const auto tr = run_kaczmarz(s, samplers::SamplerPolicy::norm_squared(), fixed_steps(p_max), rng);
            for (std::size_t j = 0; j <= p_max; ++j) mean[j] += std::pow(tr.records[j].error, 2) / trials;
        }
        for (std::size_t j = 0; j <= p_max; ++j) CHECK(mean[j] <= env[j] * 1.2 + 1e-300);
    }
}

TEST_CASE("Gramian symmetry, coherence scaling invariance and the Welch floor") {
    SystemGen g(117);
    for (int k = 0; k < 30; ++k) {
        const auto s = g.next();
        const auto gram = analysis::gramian(s.a);
        for (std::size_t i = 0; i < s.m(); ++i) {
            CHECK(std::abs(gram(i, i) - 1.0) <= 1e-12);
            for (std::size_t j = 0; j < s.m(); ++j) CHECK(std::abs(gram(i, j) - gram(j, i)) <= 1e-12);
        }
        DenseMatrix scaled = s.a;
        for (std::size_t i = 0; i < scaled.rows(); ++i)
            for (double& v : scaled.row(i)) v *= 1.0 + 7.0 * static_cast<double>(i);
        CHECK(analysis::mutual_coherence(scaled) == doctest::Approx(analysis::mutual_coherence(s.a)).epsilon(1e-12));
        if (s.m() > s.n()) CHECK(analysis::mutual_coherence(s.a) >= bounds::welch_bound(s.m(), s.n()).sqrt_form - 1e-12);
        CHECK(analysis::angle_histogram(gram).total() == s.m() * (s.m() - 1) / 2);
    }
}
