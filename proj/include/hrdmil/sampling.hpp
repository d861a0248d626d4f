#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "hrdmil/clustering.hpp"
#include "hrdmil/common.hpp"
#include "hrdmil/datamodel.hpp"

namespace hrdmil {

enum class SamplingVariant { ClusterWeighted, ClusteredRandom, Random, All };

struct SamplingStrategy {
    SamplingVariant variant = SamplingVariant::ClusterWeighted;
    uint32_t bagsize = 0;  // S; ignored for All

    bool needs_clusters() const {
        return variant == SamplingVariant::ClusterWeighted ||
               variant == SamplingVariant::ClusteredRandom;
    }
};

// CLI names: cluster-weighted | clustered-random | random | all.
SamplingStrategy parse_strategy(const std::string& name, uint32_t bagsize);
const char* to_string(SamplingVariant v);

// Cluster-proportional allocation N_i ~ S * C_i / B with every nonempty
// cluster guaranteed at least one draw and sum(N_i) == S exactly. Floor of
// the exact share, zero allocations of nonempty clusters raised to 1, the
// remaining budget spread by largest fractional part (ties toward the lower
// index; raised clusters sit out the first pass), and overshoot from the
// min-1 rule removed from the largest allocations.
std::vector<uint32_t> allocate_proportional(const std::vector<uint32_t>& sizes, uint32_t S);

// Index-level samplers. Returned indices reference bag rows, are distinct,
// and come back in ascending order.
std::vector<uint32_t> sample_cluster_weighted_indices(const ClusterAssignment& assignment,
                                                      uint32_t S, uint64_t seed);
std::vector<uint32_t> sample_clustered_random_indices(const ClusterAssignment& assignment,
                                                      uint32_t S, uint64_t seed);
std::vector<uint32_t> sample_random_indices(uint32_t B, uint32_t S, uint64_t seed);

// Instance builders (materialize the selected rows).
Instance sample_cluster_weighted(const PatientBag& bag, const ClusterAssignment& assignment,
                                 uint32_t S, uint64_t seed);
Instance sample_clustered_random(const PatientBag& bag, const ClusterAssignment& assignment,
                                 uint32_t S, uint64_t seed);
Instance sample_random(const PatientBag& bag, uint32_t S, uint64_t seed);
Instance sample_all(const PatientBag& bag);

// Strategy dispatch with the documented degrade rule: S >= B falls back to
// the full bag. `assignment` may be null for Random/All.
Instance make_instance(const PatientBag& bag, const ClusterAssignment* assignment,
                       const SamplingStrategy& strategy, uint64_t seed);

}  // namespace hrdmil
