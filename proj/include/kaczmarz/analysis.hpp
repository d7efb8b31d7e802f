#pragma once

#include <cstddef>
#include <vector>

#include "kaczmarz/linalg.hpp"

namespace kaczmarz::analysis {

using linalg::DenseMatrix;
using linalg::Vector;

struct GramStats {
    double mean = 0.0;
    double median = 0.0;
};

struct CoherenceReport {
    std::size_t m = 0;
    std::size_t n = 0;
    double mutual_coherence = 0.0;
    double mean_gram = 0.0;
    double median_gram = 0.0;
    double welch_paper = 0.0;
    double welch_sqrt = 0.0;
};

struct AngleHistogram {
    double bin_width_deg = 1.0;
    std::vector<double> edges; // counts.size() + 1 values, 0 … 180
    std::vector<std::size_t> counts;
    bool normalized = false;   // true when `density` is filled

    std::vector<double> density;
    std::size_t total() const;
    /// Index of the fullest bin (first on ties).
    std::size_t mode_bin() const;
};

/// ÂÂᵀ for the row-normalised Â. Throws ZeroRow.
DenseMatrix gramian(const DenseMatrix& a);
/// max_{i≠j} |G_ij|. Throws InvalidArgument for fewer than two rows.
double mutual_coherence(const DenseMatrix& a);
double mutual_coherence_of_gram(const DenseMatrix& g);
/// Mean and median over the strict upper triangle.
GramStats gram_stats(const DenseMatrix& g);
/// arccos(G_ij) in degrees over the strict upper triangle, bins of `bin_width_deg` on [0, 180].
AngleHistogram angle_histogram(const DenseMatrix& g, double bin_width_deg = 1.0, bool normalize = false);
CoherenceReport coherence_report(const DenseMatrix& a);

} // namespace kaczmarz::analysis
