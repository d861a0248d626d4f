#include "hrdmil/clustering.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace hrdmil {

namespace {

double sq_dist(std::span<const float> row, const double* centroid, uint32_t dim) {
    double acc = 0.0;
    for (uint32_t j = 0; j < dim; ++j) {
        double d = static_cast<double>(row[j]) - centroid[j];
        acc += d * d;
    }
    return acc;
}

// Nearest centroid, strict < so ties go to the lowest index.
uint32_t nearest(std::span<const float> row, const std::vector<double>& centroids,
                 uint32_t k, uint32_t dim, double* out_dist = nullptr) {
    uint32_t best = 0;
    double best_d = std::numeric_limits<double>::infinity();
    for (uint32_t c = 0; c < k; ++c) {
        double d = sq_dist(row, centroids.data() + static_cast<size_t>(c) * dim, dim);
        if (d < best_d) {
            best_d = d;
            best = c;
        }
    }
    if (out_dist) *out_dist = best_d;
    return best;
}

// k-means++ seeding: first centroid uniform, subsequent ones with probability
// proportional to squared distance from the chosen set.
std::vector<double> seed_centroids(const PatchMatrix& m, uint32_t k, Rng& rng) {
    uint32_t n = m.n_patches;
    uint32_t dim = m.dim;
    std::vector<double> centroids(static_cast<size_t>(k) * dim);
    auto copy_point = [&](uint32_t c, uint32_t i) {
        auto row = m.row(i);
        for (uint32_t j = 0; j < dim; ++j)
            centroids[static_cast<size_t>(c) * dim + j] = row[j];
    };

    copy_point(0, static_cast<uint32_t>(rng.uniform_index(n)));
    std::vector<double> d2(n, std::numeric_limits<double>::infinity());
    for (uint32_t c = 1; c < k; ++c) {
        double total = 0.0;
        for (uint32_t i = 0; i < n; ++i) {
            double d = sq_dist(m.row(i), centroids.data() + static_cast<size_t>(c - 1) * dim, dim);
            if (d < d2[i]) d2[i] = d;
            total += d2[i];
        }
        uint32_t pick;
        if (total <= 0.0) {
            // All remaining mass at distance zero (duplicate points); fall back
            // to a uniform draw.
            pick = static_cast<uint32_t>(rng.uniform_index(n));
        } else {
            double target = rng.uniform01() * total;
            double run = 0.0;
            pick = n - 1;
            for (uint32_t i = 0; i < n; ++i) {
                run += d2[i];
                if (run >= target) {
                    pick = i;
                    break;
                }
            }
        }
        copy_point(c, pick);
    }
    return centroids;
}

}  // namespace

ClusterModel kmeans_fit(const PatchMatrix& matrix, uint32_t k, uint64_t seed,
                        uint32_t max_iter, double tol) {
    matrix.validate();
    if (k < 1) fail(ErrorCategory::Usage, "kmeans_fit: k must be >= 1");
    if (k > matrix.n_patches)
        fail(ErrorCategory::InsufficientData,
             "kmeans_fit: k=" + std::to_string(k) + " exceeds n_patches=" +
                 std::to_string(matrix.n_patches));
    if (max_iter < 1) fail(ErrorCategory::Usage, "kmeans_fit: max_iter must be >= 1");
    if (tol < 0.0) fail(ErrorCategory::Usage, "kmeans_fit: tol must be >= 0");

    const uint32_t n = matrix.n_patches;
    const uint32_t dim = matrix.dim;
    Rng rng(seed);

    ClusterModel model;
    model.k = k;
    model.dim = dim;
    model.centroids = seed_centroids(matrix, k, rng);

    std::vector<uint32_t> labels(n, 0);
    std::vector<double> sums(static_cast<size_t>(k) * dim);
    std::vector<uint32_t> counts(k);
    double prev_inertia = std::numeric_limits<double>::infinity();

    for (uint32_t iter = 0; iter < max_iter; ++iter) {
        // Assignment step, tracking inertia at the current centroids.
        double inertia = 0.0;
        for (uint32_t i = 0; i < n; ++i) {
            double d;
            labels[i] = nearest(matrix.row(i), model.centroids, k, dim, &d);
            inertia += d;
        }

        // Reseed empty clusters to the point farthest from the empty centroid.
        std::fill(counts.begin(), counts.end(), 0u);
        for (uint32_t i = 0; i < n; ++i) counts[labels[i]]++;
        bool reseeded = false;
        for (uint32_t c = 0; c < k; ++c) {
            if (counts[c] != 0) continue;
            double best_d = -1.0;
            uint32_t best_i = 0;
            const double* cc = model.centroids.data() + static_cast<size_t>(c) * dim;
            for (uint32_t i = 0; i < n; ++i) {
                double d = sq_dist(matrix.row(i), cc, dim);
                if (d > best_d) {
                    best_d = d;
                    best_i = i;
                }
            }
            auto row = matrix.row(best_i);
            for (uint32_t j = 0; j < dim; ++j)
                model.centroids[static_cast<size_t>(c) * dim + j] = row[j];
            reseeded = true;
        }
        if (reseeded) {
            inertia = 0.0;
            for (uint32_t i = 0; i < n; ++i) {
                double d;
                labels[i] = nearest(matrix.row(i), model.centroids, k, dim, &d);
                inertia += d;
            }
        }

        model.inertia_history.push_back(inertia);
        model.inertia = inertia;

        // Update step.
        std::fill(sums.begin(), sums.end(), 0.0);
        std::fill(counts.begin(), counts.end(), 0u);
        for (uint32_t i = 0; i < n; ++i) {
            uint32_t c = labels[i];
            auto row = matrix.row(i);
            double* s = sums.data() + static_cast<size_t>(c) * dim;
            for (uint32_t j = 0; j < dim; ++j) s[j] += row[j];
            counts[c]++;
        }
        for (uint32_t c = 0; c < k; ++c) {
            if (counts[c] == 0) continue;  // handled next iteration
            double inv = 1.0 / counts[c];
            for (uint32_t j = 0; j < dim; ++j)
                model.centroids[static_cast<size_t>(c) * dim + j] =
                    sums[static_cast<size_t>(c) * dim + j] * inv;
        }

        if (std::isfinite(prev_inertia)) {
            double denom = std::max(prev_inertia, 1e-300);
            if ((prev_inertia - inertia) / denom < tol) break;
        }
        prev_inertia = inertia;
    }

    // Report inertia against the final centroids.
    double inertia = 0.0;
    for (uint32_t i = 0; i < n; ++i) {
        double d;
        nearest(matrix.row(i), model.centroids, k, dim, &d);
        inertia += d;
    }
    model.inertia = inertia;
    return model;
}

ClusterAssignment assign(const ClusterModel& model, const PatchMatrix& matrix) {
    if (matrix.dim != model.dim)
        fail(ErrorCategory::Dimension,
             "assign: matrix dim " + std::to_string(matrix.dim) + " != centroid dim " +
                 std::to_string(model.dim));
    ClusterAssignment a;
    a.labels.resize(matrix.n_patches);
    for (uint32_t i = 0; i < matrix.n_patches; ++i)
        a.labels[i] = nearest(matrix.row(i), model.centroids, model.k, model.dim);
    a.sizes = cluster_sizes(a.labels, model.k);
    return a;
}

std::vector<uint32_t> cluster_sizes(const std::vector<uint32_t>& labels, uint32_t k) {
    std::vector<uint32_t> sizes(k, 0);
    for (uint32_t lbl : labels) {
        if (lbl >= k) fail(ErrorCategory::Validation, "cluster label out of range");
        sizes[lbl]++;
    }
    return sizes;
}

}  // namespace hrdmil
