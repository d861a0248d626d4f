#pragma once

#include <cstdint>
#include <vector>

#include "hrdmil/common.hpp"
#include "hrdmil/datamodel.hpp"

namespace hrdmil {

struct ClusterModel {
    uint32_t k = 0;
    uint32_t dim = 0;
    std::vector<double> centroids;        // k * dim, row-major
    double inertia = 0.0;                 // sum of squared distances at convergence
    std::vector<double> inertia_history;  // one entry per Lloyd iteration

    std::span<const double> centroid(uint32_t c) const {
        return {centroids.data() + static_cast<size_t>(c) * dim, dim};
    }
};

struct ClusterAssignment {
    std::vector<uint32_t> labels;  // length n, values in [0, k)
    std::vector<uint32_t> sizes;   // length k, sizes[c] = |{i : labels[i] == c}|

    uint32_t k() const { return static_cast<uint32_t>(sizes.size()); }
    uint32_t n() const { return static_cast<uint32_t>(labels.size()); }
};

// Lloyd iterations from a k-means++-style seeded init over squared Euclidean
// distance. Stops when the relative inertia improvement drops below `tol` or
// after `max_iter` iterations. Empty clusters are reseeded to the point
// farthest from the empty centroid. Deterministic given (matrix, k, seed).
ClusterModel kmeans_fit(const PatchMatrix& matrix, uint32_t k, uint64_t seed,
                        uint32_t max_iter = 100, double tol = 1e-4);

// Nearest-centroid labels (ties broken toward the lowest cluster index).
ClusterAssignment assign(const ClusterModel& model, const PatchMatrix& matrix);

// Tallied from labels; empty clusters report 0.
std::vector<uint32_t> cluster_sizes(const std::vector<uint32_t>& labels, uint32_t k);

// k clamped to the patient's patch count, per the pipeline-wide rule for
// bags smaller than k.
inline uint32_t effective_k(uint32_t k, uint32_t n_patches) {
    return k < n_patches ? k : n_patches;
}

}  // namespace hrdmil
