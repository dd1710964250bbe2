#include "adaqr/shift_stats.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <numeric>

#include <json.hpp>

#include "adaqr/errors.hpp"

namespace adaqr {

double mean_resultant_length(const EmbeddingPairSet& pairs) {
    if (pairs.empty()) throw_validation("mean_resultant_length: empty pair set");
    std::vector<double> sum(pairs.dim, 0.0);
    for (size_t i = 0; i < pairs.size(); ++i) {
        const auto& [original, reasoned] = pairs.pairs[i];
        require_same_dim(original, reasoned, "mrl pair " + std::to_string(i));
        double norm_sq = 0.0;
        for (size_t j = 0; j < pairs.dim; ++j) {
            double d = reasoned.values[j] - original.values[j];
            norm_sq += d * d;
        }
        if (norm_sq == 0.0) {
            throw_validation("mean_resultant_length: pair " + std::to_string(i) +
                             " has identical original and reasoned embeddings (zero shift)");
        }
        double inv = 1.0 / std::sqrt(norm_sq);
        for (size_t j = 0; j < pairs.dim; ++j) {
            sum[j] += (reasoned.values[j] - original.values[j]) * inv;
        }
    }
    double norm_sq = 0.0;
    for (double v : sum) norm_sq += v * v;
    return std::sqrt(norm_sq) / static_cast<double>(pairs.size());
}

ShiftStats shift_stats(const EmbeddingPairSet& pairs) {
    ShiftStats stats;
    stats.mrl = mean_resultant_length(pairs);
    stats.min_shift_norm = std::numeric_limits<double>::infinity();
    stats.max_shift_norm = 0.0;
    double total = 0.0;
    for (const auto& [original, reasoned] : pairs.pairs) {
        double n = l2_norm(sub(reasoned, original));
        total += n;
        stats.min_shift_norm = std::min(stats.min_shift_norm, n);
        stats.max_shift_norm = std::max(stats.max_shift_norm, n);
    }
    stats.mean_shift_norm = total / static_cast<double>(pairs.size());
    return stats;
}

std::pair<std::vector<double>, std::vector<double>>
symmetric_eigen(const std::vector<double>& matrix, size_t n) {
    if (matrix.size() != n * n) throw_validation("symmetric_eigen: size mismatch");
    std::vector<double> a = matrix;       // working copy, driven to diagonal
    std::vector<double> v(n * n, 0.0);    // accumulated rotations
    for (size_t i = 0; i < n; ++i) v[i * n + i] = 1.0;

    const int max_sweeps = 100;
    for (int sweep = 0; sweep < max_sweeps; ++sweep) {
        double off = 0.0;
        for (size_t p = 0; p < n; ++p)
            for (size_t q = p + 1; q < n; ++q) off += a[p * n + q] * a[p * n + q];
        if (off < 1e-30) break;

        for (size_t p = 0; p < n; ++p) {
            for (size_t q = p + 1; q < n; ++q) {
                double apq = a[p * n + q];
                if (std::abs(apq) < 1e-300) continue;
                double app = a[p * n + p];
                double aqq = a[q * n + q];
                double theta = (aqq - app) / (2.0 * apq);
                double t = (theta >= 0.0 ? 1.0 : -1.0) /
                           (std::abs(theta) + std::sqrt(theta * theta + 1.0));
                double c = 1.0 / std::sqrt(t * t + 1.0);
                double s = t * c;

                for (size_t k = 0; k < n; ++k) {
                    double akp = a[k * n + p];
                    double akq = a[k * n + q];
                    a[k * n + p] = c * akp - s * akq;
                    a[k * n + q] = s * akp + c * akq;
                }
                for (size_t k = 0; k < n; ++k) {
                    double apk = a[p * n + k];
                    double aqk = a[q * n + k];
                    a[p * n + k] = c * apk - s * aqk;
                    a[q * n + k] = s * apk + c * aqk;
                }
                for (size_t k = 0; k < n; ++k) {
                    double vkp = v[k * n + p];
                    double vkq = v[k * n + q];
                    v[k * n + p] = c * vkp - s * vkq;
                    v[k * n + q] = s * vkp + c * vkq;
                }
            }
        }
    }

    // Sort by descending eigenvalue; stable index tie-break.
    std::vector<size_t> idx(n);
    std::iota(idx.begin(), idx.end(), size_t{0});
    std::vector<double> diag(n);
    for (size_t i = 0; i < n; ++i) diag[i] = a[i * n + i];
    std::stable_sort(idx.begin(), idx.end(),
                     [&](size_t x, size_t y) { return diag[x] > diag[y]; });

    std::vector<double> eigenvalues(n);
    std::vector<double> eigenvectors(n * n);
    for (size_t r = 0; r < n; ++r) {
        eigenvalues[r] = diag[idx[r]];
        // Column idx[r] of v is the eigenvector; store as row r with a
        // deterministic sign (largest-magnitude component positive).
        size_t arg = 0;
        double best = 0.0;
        for (size_t k = 0; k < n; ++k) {
            double x = std::abs(v[k * n + idx[r]]);
            if (x > best) {
                best = x;
                arg = k;
            }
        }
        double sign = v[arg * n + idx[r]] < 0.0 ? -1.0 : 1.0;
        for (size_t k = 0; k < n; ++k) {
            eigenvectors[r * n + k] = sign * v[k * n + idx[r]];
        }
    }
    return {std::move(eigenvalues), std::move(eigenvectors)};
}

PcaProjection pca_shift_projection(const EmbeddingPairSet& pairs) {
    if (pairs.size() < 2) throw_validation("pca_shift_projection: need at least 2 pairs");
    size_t d = pairs.dim;
    if (d < 2) throw_validation("pca_shift_projection: need dim >= 2");

    // Union of originals and reasoned points.
    size_t m = 2 * pairs.size();
    std::vector<double> mean(d, 0.0);
    for (const auto& [original, reasoned] : pairs.pairs) {
        for (size_t j = 0; j < d; ++j) {
            mean[j] += original.values[j] + reasoned.values[j];
        }
    }
    for (double& x : mean) x /= static_cast<double>(m);

    std::vector<double> cov(d * d, 0.0);
    auto accumulate = [&](const Embedding& e) {
        for (size_t i = 0; i < d; ++i) {
            double ci = e.values[i] - mean[i];
            for (size_t j = i; j < d; ++j) {
                cov[i * d + j] += ci * (e.values[j] - mean[j]);
            }
        }
    };
    for (const auto& [original, reasoned] : pairs.pairs) {
        accumulate(original);
        accumulate(reasoned);
    }
    double denom = static_cast<double>(m - 1);
    for (size_t i = 0; i < d; ++i) {
        for (size_t j = i; j < d; ++j) {
            cov[i * d + j] /= denom;
            cov[j * d + i] = cov[i * d + j];
        }
    }

    double trace = 0.0;
    for (size_t i = 0; i < d; ++i) trace += cov[i * d + i];
    if (trace <= 0.0) {
        throw_validation("pca_shift_projection: degenerate covariance (all points identical)");
    }

    auto [eigenvalues, eigenvectors] = symmetric_eigen(cov, d);

    PcaProjection proj;
    proj.variance1 = eigenvalues[0];
    proj.variance2 = eigenvalues[1];
    proj.component1.assign(eigenvectors.begin(), eigenvectors.begin() + d);
    proj.component2.assign(eigenvectors.begin() + d, eigenvectors.begin() + 2 * d);

    auto project = [&](const Embedding& e, double& x, double& y) {
        double px = 0.0, py = 0.0;
        for (size_t j = 0; j < d; ++j) {
            double c = e.values[j] - mean[j];
            px += c * proj.component1[j];
            py += c * proj.component2[j];
        }
        x = px;
        y = py;
    };
    proj.arrows.resize(pairs.size());
    for (size_t i = 0; i < pairs.size(); ++i) {
        project(pairs.pairs[i].first, proj.arrows[i].start_x, proj.arrows[i].start_y);
        project(pairs.pairs[i].second, proj.arrows[i].end_x, proj.arrows[i].end_y);
    }
    return proj;
}

void write_pca_export(const PcaProjection& projection, const std::vector<std::string>& ids,
                      const std::string& path) {
    if (ids.size() != projection.arrows.size()) {
        throw_validation("write_pca_export: ids/arrows count mismatch");
    }
    std::ofstream out(path, std::ios::binary);
    if (!out) throw_io("cannot open " + path + " for writing");
    for (size_t i = 0; i < ids.size(); ++i) {
        nlohmann::json j;
        j["query_id"] = ids[i];
        j["start_x"] = projection.arrows[i].start_x;
        j["start_y"] = projection.arrows[i].start_y;
        j["end_x"] = projection.arrows[i].end_x;
        j["end_y"] = projection.arrows[i].end_y;
        out << j.dump() << "\n";
    }
    if (!out) throw_io("write failed: " + path);
}

} // namespace adaqr
