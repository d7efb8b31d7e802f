#include "kaczmarz/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>

#include "kaczmarz/bounds.hpp"
#include "kaczmarz/errors.hpp"
#include "kaczmarz/samplers.hpp"

namespace kaczmarz::analysis {

namespace {

void require_square(const DenseMatrix& g) {
    if (g.rows() != g.cols()) throw InvalidArgument("Gram matrix must be square");
}

} // namespace

std::size_t AngleHistogram::total() const {
    return std::accumulate(counts.begin(), counts.end(), std::size_t{0});
}

std::size_t AngleHistogram::mode_bin() const {
    return static_cast<std::size_t>(std::max_element(counts.begin(), counts.end()) - counts.begin());
}

DenseMatrix gramian(const DenseMatrix& a) {
    DenseMatrix g = samplers::normalized_gramian(a);
    for (std::size_t i = 0; i < g.rows(); ++i) g(i, i) = 1.0;
    return g;
}

double mutual_coherence_of_gram(const DenseMatrix& g) {
    require_square(g);
    if (g.rows() < 2) throw InvalidArgument("mutual coherence needs at least two rows");
    double phi = 0.0;
    for (std::size_t i = 0; i < g.rows(); ++i)
        for (std::size_t j = i + 1; j < g.cols(); ++j) phi = std::max(phi, std::abs(g(i, j)));
    return std::min(phi, 1.0);
}

double mutual_coherence(const DenseMatrix& a) {
    if (a.rows() < 2) throw InvalidArgument("mutual coherence needs at least two rows");
    return mutual_coherence_of_gram(gramian(a));
}

GramStats gram_stats(const DenseMatrix& g) {
    require_square(g);
    std::vector<double> vals;
    vals.reserve(g.rows() * (g.rows() - (g.rows() > 0 ? 1 : 0)) / 2);
    for (std::size_t i = 0; i < g.rows(); ++i)
        for (std::size_t j = i + 1; j < g.cols(); ++j) vals.push_back(g(i, j));
    GramStats s;
    if (vals.empty()) return s;
    s.mean = std::accumulate(vals.begin(), vals.end(), 0.0) / static_cast<double>(vals.size());
    const std::size_t mid = vals.size() / 2;
    std::nth_element(vals.begin(), vals.begin() + static_cast<std::ptrdiff_t>(mid), vals.end());
    if (vals.size() % 2 == 1) {
        s.median = vals[mid];
    } else {
        const double hi = vals[mid];
        const double lo = *std::max_element(vals.begin(), vals.begin() + static_cast<std::ptrdiff_t>(mid));
        s.median = 0.5 * (lo + hi);
    }
    return s;
}

AngleHistogram angle_histogram(const DenseMatrix& g, double bin_width_deg, bool normalize) {
    require_square(g);
    if (!(bin_width_deg > 0.0) || bin_width_deg > 180.0) {
        throw InvalidArgument("bin width must lie in (0, 180] degrees");
    }
    AngleHistogram h;
    h.bin_width_deg = bin_width_deg;
    const auto bins = static_cast<std::size_t>(std::ceil(180.0 / bin_width_deg - 1e-9));
    h.counts.assign(bins, 0);
    for (std::size_t b = 0; b <= bins; ++b) h.edges.push_back(std::min(180.0, b * bin_width_deg));

    for (std::size_t i = 0; i < g.rows(); ++i) {
        for (std::size_t j = i + 1; j < g.cols(); ++j) {
            const double deg = std::acos(std::clamp(g(i, j), -1.0, 1.0)) * 180.0 / std::numbers::pi;
            auto b = static_cast<std::size_t>(deg / bin_width_deg);
            h.counts[std::min(b, bins - 1)] += 1;
        }
    }
    if (normalize) {
        h.normalized = true;
        const double total = static_cast<double>(h.total());
        for (std::size_t c : h.counts) h.density.push_back(total > 0 ? c / total : 0.0);
    }
    return h;
}

CoherenceReport coherence_report(const DenseMatrix& a) {
    const DenseMatrix g = gramian(a);
    CoherenceReport r;
    r.m = a.rows();
    r.n = a.cols();
    r.mutual_coherence = mutual_coherence_of_gram(g);
    const GramStats s = gram_stats(g);
    r.mean_gram = s.mean;
    r.median_gram = s.median;
    if (r.m >= 2) {
        const bounds::WelchBound w = bounds::welch_bound(r.m, r.n);
        r.welch_paper = w.paper_form;
        r.welch_sqrt = w.sqrt_form;
    }
    return r;
}

} // namespace kaczmarz::analysis
