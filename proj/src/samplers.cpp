#include "kaczmarz/samplers.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>

#include "json.hpp"

#include "kaczmarz/errors.hpp"

namespace kaczmarz::samplers {

using linalg::dot;
using linalg::norm2;

SamplerPolicy SamplerPolicy::custom(Vector weights) {
    double total = 0.0;
    for (double w : weights) {
        if (!(w >= 0.0) || !std::isfinite(w)) throw InvalidArgument("custom weights must be finite and non-negative");
        total += w;
    }
    if (!(total > 0.0)) throw InvalidArgument("custom weights must have a positive sum");
    return {PolicyKind::custom_weights, std::move(weights)};
}

std::string SamplerPolicy::tag() const {
    switch (kind) {
    case PolicyKind::cyclic: return "cyclic";
    case PolicyKind::uniform: return "uniform";
    case PolicyKind::norm_squared: return "norm2";
    case PolicyKind::angle_pair: return "angle";
    case PolicyKind::custom_weights: return "weights";
    }
    return "cyclic";
}

SamplerPolicy parse_policy(const std::string& text) {
    if (text == "cyclic") return SamplerPolicy::cyclic();
    if (text == "uniform") return SamplerPolicy::uniform();
    if (text == "norm2") return SamplerPolicy::norm_squared();
    if (text == "angle") return SamplerPolicy::angle_pair();
    constexpr std::string_view prefix = "weights:";
    if (text.starts_with(prefix)) {
        const std::string path = text.substr(prefix.size());
        std::ifstream in(path);
        if (!in) throw IoError("cannot open weights file '" + path + "'");
        nlohmann::json j;
        try {
            in >> j;
        } catch (const nlohmann::json::exception& e) {
            throw InvalidArgument("weights file '" + path + "': " + e.what());
        }
        if (!j.is_array()) throw InvalidArgument("weights file '" + path + "' must hold a JSON array");
        Vector w;
        for (const auto& v : j) {
            if (!v.is_number()) throw InvalidArgument("weights file '" + path + "' holds a non-number");
            w.push_back(v.get<double>());
        }
        return SamplerPolicy::custom(std::move(w));
    }
    throw InvalidArgument("unknown sampler policy '" + text + "'");
}

std::size_t BlockPartition::total_rows() const {
    std::size_t s = 0;
    for (const auto& b : blocks) s += b.size();
    return s;
}

bool BlockPartition::is_valid(std::size_t m) const {
    std::vector<bool> seen(m, false);
    for (const auto& b : blocks)
        for (std::size_t i : b) {
            if (i >= m || seen[i]) return false;
            seen[i] = true;
        }
    return true;
}

BlockPartition singleton_partition(std::size_t m) { return contiguous_partition(m, 1); }

BlockPartition contiguous_partition(std::size_t m, std::size_t p) {
    if (p < 1 || p > m) throw InvalidArgument("partition: block size must be in [1, m]");
    BlockPartition part;
    for (std::size_t start = 0; start < m; start += p) {
        std::vector<std::size_t> block(std::min(p, m - start));
        std::iota(block.begin(), block.end(), start);
        part.blocks.push_back(std::move(block));
    }
    return part;
}

std::size_t cyclic_next(std::size_t step, std::size_t m) {
    if (m < 1) throw InvalidArgument("cyclic_next: m must be >= 1");
    return step % m;
}

Vector row_norm_weights(const DenseMatrix& a) {
    Vector w(a.rows());
    for (std::size_t i = 0; i < a.rows(); ++i) {
        w[i] = dot(a.row(i), a.row(i));
        if (w[i] == 0.0) throw ZeroRow("row_norm_weights: row " + std::to_string(i) + " is zero");
    }
    return w;
}

DenseMatrix normalized_gramian(const DenseMatrix& a) {
    const std::size_t m = a.rows();
    DenseMatrix hat = a;
    for (std::size_t i = 0; i < m; ++i) {
        auto r = hat.row(i);
        const double rn = norm2(r);
        if (rn == 0.0) throw ZeroRow("gramian: row " + std::to_string(i) + " is zero");
        for (double& v : r) v /= rn;
    }
    DenseMatrix g(m, m);
    for (std::size_t i = 0; i < m; ++i) {
        g(i, i) = 1.0;
        for (std::size_t j = i + 1; j < m; ++j) {
            const double c = dot(hat.row(i), hat.row(j));
            g(i, j) = c;
            g(j, i) = c;
        }
    }
    return g;
}

Vector angle_weights(const DenseMatrix& a, std::size_t f, const DenseMatrix* gram) {
    constexpr double parallel_tol = 1e-15;
    const std::size_t m = a.rows();
    if (f >= m) throw InvalidArgument("angle_weights: current row out of range");
    if (gram && (gram->rows() != m || gram->cols() != m)) {
        throw InvalidArgument("angle_weights: Gramian shape differs from row count");
    }
    Vector w(m, 0.0);
    double ff = 0.0;
    if (!gram) {
        ff = dot(a.row(f), a.row(f));
        if (ff == 0.0) throw ZeroRow("angle_weights: row " + std::to_string(f) + " is zero");
    }
    bool any = false;
    for (std::size_t g = 0; g < m; ++g) {
        if (g == f) continue;
        double cos2;
        if (gram) {
            const double c = (*gram)(f, g);
            cos2 = c * c;
        } else {
            const double gg = dot(a.row(g), a.row(g));
            if (gg == 0.0) throw ZeroRow("angle_weights: row " + std::to_string(g) + " is zero");
            const double fg = dot(a.row(f), a.row(g));
            cos2 = (fg / ff) * (fg / gg);
        }
        const double s2 = 1.0 - cos2;
        if (s2 > parallel_tol) {
            w[g] = s2;
            any = true;
        }
    }
    if (!any) {
        throw AllParallel("angle_weights: every row is parallel to row " + std::to_string(f));
    }
    return w;
}

std::size_t sample_weighted(std::span<const double> weights, Rng& rng) {
    return DiscreteSampler(weights)(rng);
}

DiscreteSampler::DiscreteSampler(std::span<const double> weights) : cumulative_(weights.size()) {
    double total = 0.0;
    for (std::size_t i = 0; i < weights.size(); ++i) {
        if (!(weights[i] >= 0.0)) throw DegenerateWeights("sample_weighted: negative or NaN weight");
        total += weights[i];
        cumulative_[i] = total;
    }
    if (!(total > 0.0) || !std::isfinite(total)) {
        throw DegenerateWeights("sample_weighted: weights must have a positive finite sum");
    }
}

std::size_t DiscreteSampler::operator()(Rng& rng) const {
    const double total = cumulative_.back();
    const double u = rng.uniform() * total;
    auto it = std::upper_bound(cumulative_.begin(), cumulative_.end(), u);
    if (it == cumulative_.end()) {
        // u rounded up to total: take the last entry with positive weight
        it = std::lower_bound(cumulative_.begin(), cumulative_.end(), total);
    }
    return static_cast<std::size_t>(it - cumulative_.begin());
}

BlockPartition random_partition(std::size_t m, std::size_t p, Rng& rng) {
    if (p < 1 || p > m) throw InvalidArgument("random_partition: requires 1 <= p <= m");
    std::vector<std::size_t> perm(m);
    std::iota(perm.begin(), perm.end(), std::size_t{0});
    std::shuffle(perm.begin(), perm.end(), rng);
    BlockPartition part;
    for (std::size_t start = 0; start < m; start += p) {
        const auto end = std::min(m, start + p);
        part.blocks.emplace_back(perm.begin() + static_cast<std::ptrdiff_t>(start),
                                 perm.begin() + static_cast<std::ptrdiff_t>(end));
    }
    return part;
}

} // namespace kaczmarz::samplers
