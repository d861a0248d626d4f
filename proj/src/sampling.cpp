#include "hrdmil/sampling.hpp"

#include <algorithm>
#include <numeric>

namespace hrdmil {

SamplingStrategy parse_strategy(const std::string& name, uint32_t bagsize) {
    SamplingStrategy s;
    s.bagsize = bagsize;
    if (name == "cluster-weighted") {
        s.variant = SamplingVariant::ClusterWeighted;
    } else if (name == "clustered-random") {
        s.variant = SamplingVariant::ClusteredRandom;
    } else if (name == "random") {
        s.variant = SamplingVariant::Random;
    } else if (name == "all") {
        s.variant = SamplingVariant::All;
    } else {
        fail(ErrorCategory::Usage, "unknown sampling strategy: " + name);
    }
    if (s.variant != SamplingVariant::All && s.bagsize < 1)
        fail(ErrorCategory::Usage, "sampling strategy '" + name + "' requires bagsize >= 1");
    return s;
}

const char* to_string(SamplingVariant v) {
    switch (v) {
        case SamplingVariant::ClusterWeighted: return "cluster-weighted";
        case SamplingVariant::ClusteredRandom: return "clustered-random";
        case SamplingVariant::Random: return "random";
        case SamplingVariant::All: return "all";
    }
    return "unknown";
}

std::vector<uint32_t> allocate_proportional(const std::vector<uint32_t>& sizes, uint32_t S) {
    const uint32_t k = static_cast<uint32_t>(sizes.size());
    uint64_t B = 0;
    uint32_t nonempty = 0;
    for (uint32_t c : sizes) {
        B += c;
        if (c > 0) nonempty++;
    }
    if (nonempty == 0) fail(ErrorCategory::Validation, "allocate_proportional: empty assignment");
    if (S < nonempty)
        fail(ErrorCategory::InsufficientData,
             "allocate_proportional: S=" + std::to_string(S) + " below nonempty cluster count " +
                 std::to_string(nonempty));
    if (S > B)
        fail(ErrorCategory::InsufficientData,
             "allocate_proportional: S=" + std::to_string(S) + " exceeds bag size " +
                 std::to_string(B) + " (use all)");

    std::vector<uint32_t> alloc(k, 0);
    std::vector<double> frac(k, 0.0);
    std::vector<bool> raised(k, false);
    uint64_t assigned = 0;
    for (uint32_t c = 0; c < k; ++c) {
        if (sizes[c] == 0) continue;
        double share = static_cast<double>(S) * static_cast<double>(sizes[c]) /
                       static_cast<double>(B);
        uint32_t fl = static_cast<uint32_t>(share);
        frac[c] = share - fl;
        if (fl == 0) {
            alloc[c] = 1;  // min-1 rule: every nonempty cluster is represented
            raised[c] = true;
        } else {
            alloc[c] = std::min(fl, sizes[c]);
        }
        assigned += alloc[c];
    }

    if (assigned < S) {
        // Largest-remainder distribution; clusters raised to 1 sit out the
        // first pass (their fraction paid for the raise).
        uint64_t budget = S - assigned;
        bool first_pass = true;
        while (budget > 0) {
            std::vector<uint32_t> order;
            for (uint32_t c = 0; c < k; ++c) {
                if (sizes[c] == 0 || alloc[c] >= sizes[c]) continue;
                if (first_pass && raised[c]) continue;
                order.push_back(c);
            }
            if (order.empty()) {
                if (!first_pass)
                    fail(ErrorCategory::Validation, "allocate_proportional: no capacity left");
                first_pass = false;
                continue;
            }
            std::stable_sort(order.begin(), order.end(), [&](uint32_t a, uint32_t b) {
                if (frac[a] != frac[b]) return frac[a] > frac[b];
                return a < b;
            });
            for (uint32_t c : order) {
                if (budget == 0) break;
                alloc[c]++;
                budget--;
            }
            first_pass = false;
        }
    } else if (assigned > S) {
        // The min-1 rule overshot; pull the excess from the largest
        // allocations (ties toward the lower index), never below 1.
        uint64_t excess = assigned - S;
        while (excess > 0) {
            uint32_t best = k;
            for (uint32_t c = 0; c < k; ++c) {
                if (alloc[c] <= 1) continue;
                if (best == k || alloc[c] > alloc[best]) best = c;
            }
            if (best == k)
                fail(ErrorCategory::Validation, "allocate_proportional: cannot honor min-1");
            alloc[best]--;
            excess--;
        }
    }
    return alloc;
}

namespace {

// Draw alloc[c] rows uniformly without replacement within each cluster and
// return the union in ascending original order.
std::vector<uint32_t> draw_per_cluster(const ClusterAssignment& assignment,
                                       const std::vector<uint32_t>& alloc, Rng& rng) {
    const uint32_t k = assignment.k();
    std::vector<std::vector<uint32_t>> members(k);
    for (uint32_t c = 0; c < k; ++c) members[c].reserve(assignment.sizes[c]);
    for (uint32_t i = 0; i < assignment.n(); ++i)
        members[assignment.labels[i]].push_back(i);

    std::vector<uint32_t> picked;
    for (uint32_t c = 0; c < k; ++c) {
        if (alloc[c] == 0) continue;
        auto within = sample_without_replacement(
            static_cast<uint32_t>(members[c].size()), alloc[c], rng);
        for (uint32_t w : within) picked.push_back(members[c][w]);
    }
    std::sort(picked.begin(), picked.end());
    return picked;
}

Instance materialize(const PatientBag& bag, std::vector<uint32_t> indices) {
    Instance inst;
    inst.patient_id = bag.patient_id;
    inst.target = bag.hrd_score;
    inst.matrix.dim = bag.matrix.dim;
    inst.matrix.n_patches = static_cast<uint32_t>(indices.size());
    inst.matrix.features.reserve(indices.size() * bag.matrix.dim);
    bool coords = bag.matrix.has_coords();
    if (coords) inst.matrix.coords.reserve(indices.size() * 2);
    for (uint32_t i : indices) {
        auto row = bag.matrix.row(i);
        inst.matrix.features.insert(inst.matrix.features.end(), row.begin(), row.end());
        if (coords) {
            inst.matrix.coords.push_back(bag.matrix.coord(i, 0));
            inst.matrix.coords.push_back(bag.matrix.coord(i, 1));
        }
    }
    inst.source_rows = std::move(indices);
    return inst;
}

void check_assignment_matches(const PatientBag& bag, const ClusterAssignment& assignment) {
    if (assignment.n() != bag.size())
        fail(ErrorCategory::Dimension, "assignment does not match bag size for patient " +
                                           bag.patient_id);
}

}  // namespace

std::vector<uint32_t> sample_cluster_weighted_indices(const ClusterAssignment& assignment,
                                                      uint32_t S, uint64_t seed) {
    auto alloc = allocate_proportional(assignment.sizes, S);
    Rng rng(seed);
    return draw_per_cluster(assignment, alloc, rng);
}

std::vector<uint32_t> sample_clustered_random_indices(const ClusterAssignment& assignment,
                                                      uint32_t S, uint64_t seed) {
    const uint32_t k = assignment.k();
    uint64_t B = assignment.n();
    uint32_t nonempty = 0;
    for (uint32_t c : assignment.sizes)
        if (c > 0) nonempty++;
    if (S < nonempty)
        fail(ErrorCategory::InsufficientData,
             "clustered-random: S below nonempty cluster count");
    if (S > B) fail(ErrorCategory::InsufficientData, "clustered-random: S exceeds bag size");

    Rng rng(seed);

    // One per nonempty cluster, then the remaining S - k' draws land on a
    // uniformly random cluster among those with remaining capacity.
    std::vector<uint32_t> alloc(k, 0);
    for (uint32_t c = 0; c < k; ++c)
        if (assignment.sizes[c] > 0) alloc[c] = 1;
    uint32_t remaining = S - nonempty;
    while (remaining > 0) {
        std::vector<uint32_t> open;
        open.reserve(k);
        for (uint32_t c = 0; c < k; ++c)
            if (alloc[c] > 0 && alloc[c] < assignment.sizes[c]) open.push_back(c);
        uint32_t pick = open[static_cast<size_t>(rng.uniform_index(open.size()))];
        alloc[pick]++;
        remaining--;
    }
    return draw_per_cluster(assignment, alloc, rng);
}

std::vector<uint32_t> sample_random_indices(uint32_t B, uint32_t S, uint64_t seed) {
    if (S > B) fail(ErrorCategory::InsufficientData, "random sampling: S exceeds bag size (use all)");
    Rng rng(seed);
    return sample_without_replacement(B, S, rng);
}

Instance sample_cluster_weighted(const PatientBag& bag, const ClusterAssignment& assignment,
                                 uint32_t S, uint64_t seed) {
    check_assignment_matches(bag, assignment);
    return materialize(bag, sample_cluster_weighted_indices(assignment, S, seed));
}

Instance sample_clustered_random(const PatientBag& bag, const ClusterAssignment& assignment,
                                 uint32_t S, uint64_t seed) {
    check_assignment_matches(bag, assignment);
    return materialize(bag, sample_clustered_random_indices(assignment, S, seed));
}

Instance sample_random(const PatientBag& bag, uint32_t S, uint64_t seed) {
    return materialize(bag, sample_random_indices(bag.size(), S, seed));
}

Instance sample_all(const PatientBag& bag) {
    std::vector<uint32_t> idx(bag.size());
    std::iota(idx.begin(), idx.end(), 0u);
    return materialize(bag, std::move(idx));
}

Instance make_instance(const PatientBag& bag, const ClusterAssignment* assignment,
                       const SamplingStrategy& strategy, uint64_t seed) {
    if (strategy.variant == SamplingVariant::All || strategy.bagsize >= bag.size())
        return sample_all(bag);
    switch (strategy.variant) {
        case SamplingVariant::ClusterWeighted:
            if (!assignment) fail(ErrorCategory::Usage, "cluster-weighted sampling needs clusters");
            return sample_cluster_weighted(bag, *assignment, strategy.bagsize, seed);
        case SamplingVariant::ClusteredRandom:
            if (!assignment) fail(ErrorCategory::Usage, "clustered-random sampling needs clusters");
            return sample_clustered_random(bag, *assignment, strategy.bagsize, seed);
        case SamplingVariant::Random:
            return sample_random(bag, strategy.bagsize, seed);
        case SamplingVariant::All:
            break;
    }
    return sample_all(bag);
}

}  // namespace hrdmil
