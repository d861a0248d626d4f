#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "hrdmil/common.hpp"
#include "hrdmil/datamodel.hpp"

namespace hrdmil {

struct UpsampleParams {
    uint32_t n_bins = 7;
    double alpha = 0.65;  // budget cap ratio
    double beta = 0.25;   // budget scaling factor

    void validate() const {
        if (n_bins < 1) fail(ErrorCategory::Usage, "upsample: n_bins must be >= 1");
        if (!(alpha > 0.0 && alpha <= 1.0)) fail(ErrorCategory::Usage, "upsample: alpha in (0,1]");
        if (!(beta > 0.0 && beta <= 1.0)) fail(ErrorCategory::Usage, "upsample: beta in (0,1]");
    }
};

// Equal-width histogram of continuous targets over [min, max]; interior
// edges belong to the right bin, the maximum target to the last bin.
struct BinLayout {
    std::vector<double> edges;                         // n_bins + 1 ascending
    std::vector<uint32_t> bin_counts;                  // length n_bins
    std::vector<std::vector<std::string>> patient_bins;  // patient ids per bin

    uint32_t n_bins() const { return static_cast<uint32_t>(bin_counts.size()); }

    // Bin index for a target inside [edges.front(), edges.back()].
    uint32_t bin_of(double target) const;
};

struct TargetEntry {
    std::string patient_id;
    double target = 0.0;
};

// Degenerates to a single bin when all targets coincide.
BinLayout bin_targets(const std::vector<TargetEntry>& targets, uint32_t n_bins);

// Alg. 1 budget lines: maxVal = max(binCounts); budgetCap = round(maxVal*alpha);
// budget_i = min(budgetCap, round((maxVal - binCounts[i])*beta)). Half-up rounding.
std::vector<uint32_t> compute_budgets(const std::vector<uint32_t>& bin_counts,
                                      const UpsampleParams& params);

struct UpsampleResult {
    std::vector<Instance> instances;      // originals first, synthesized appended
    std::vector<uint32_t> added_per_bin;  // realized additions
    std::vector<uint32_t> skipped_bins;   // positive budget but no patients
};

// Appends budget_i fresh instances per bin, each drawn from a uniformly
// random patient of that bin (with replacement across draws) via `sample_fn`.
// Per-draw seeds derive from (seed, bin, draw) so draws are order-independent.
using SampleFn = std::function<Instance(const std::string& patient_id, uint64_t seed)>;
UpsampleResult upsample(std::vector<Instance> training_instances, const BinLayout& layout,
                        const std::vector<uint32_t>& budgets, const SampleFn& sample_fn,
                        uint64_t seed);

}  // namespace hrdmil
