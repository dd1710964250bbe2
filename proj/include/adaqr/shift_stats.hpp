#pragma once

#include <string>
#include <vector>

#include "adaqr/records.hpp"

namespace adaqr {

// Mean resultant length of the unit shift directions
// (reasoned - original) / ||reasoned - original|| across all pairs.
// In [0, 1]; 1 iff all directions coincide. Errors on a zero-shift pair,
// reporting the offending index.
double mean_resultant_length(const EmbeddingPairSet& pairs);

struct ShiftStats {
    double mrl = 0.0;
    double mean_shift_norm = 0.0;
    double min_shift_norm = 0.0;
    double max_shift_norm = 0.0;
};

ShiftStats shift_stats(const EmbeddingPairSet& pairs);

// One arrow per pair: the original and reasoned embeddings projected onto
// the first two principal components of the union of all points.
struct ShiftArrow {
    double start_x = 0.0, start_y = 0.0;
    double end_x = 0.0, end_y = 0.0;
};

struct PcaProjection {
    std::vector<ShiftArrow> arrows;
    std::vector<double> component1; // unit eigenvector, deterministic sign
    std::vector<double> component2;
    double variance1 = 0.0;         // eigenvalues of the sample covariance
    double variance2 = 0.0;
};

// Mean-centered covariance eigendecomposition on the union of original and
// reasoned embeddings. Requires >= 2 pairs and dim >= 2; errors when the
// covariance is degenerate (all points identical).
PcaProjection pca_shift_projection(const EmbeddingPairSet& pairs);

// Export: one record per arrow with its query id (ids parallel to pairs).
void write_pca_export(const PcaProjection& projection, const std::vector<std::string>& ids,
                      const std::string& path);

// Symmetric eigendecomposition via cyclic Jacobi rotations. Returns
// (eigenvalues desc, row-major eigenvector matrix: row i is the unit
// eigenvector for eigenvalue i). Exposed for the diagnostics; matrix is
// row-major n x n and must be symmetric.
std::pair<std::vector<double>, std::vector<double>>
symmetric_eigen(const std::vector<double>& matrix, size_t n);

} // namespace adaqr
