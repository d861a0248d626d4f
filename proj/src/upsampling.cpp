#include "hrdmil/upsampling.hpp"

#include <algorithm>
#include <cmath>

namespace hrdmil {

uint32_t BinLayout::bin_of(double target) const {
    const uint32_t n = n_bins();
    if (n == 1) return 0;
    double lo = edges.front();
    double hi = edges.back();
    double width = (hi - lo) / n;
    auto idx = static_cast<int64_t>(std::floor((target - lo) / width));
    idx = std::clamp<int64_t>(idx, 0, n - 1);
    // Settle float rounding against the actual edge array; a target exactly on
    // an interior edge belongs to the right bin.
    while (idx + 1 < n && target >= edges[static_cast<size_t>(idx) + 1]) ++idx;
    while (idx > 0 && target < edges[static_cast<size_t>(idx)]) --idx;
    return static_cast<uint32_t>(idx);
}

BinLayout bin_targets(const std::vector<TargetEntry>& targets, uint32_t n_bins) {
    if (targets.empty()) fail(ErrorCategory::InsufficientData, "bin_targets: no patients");
    if (n_bins < 1) fail(ErrorCategory::Usage, "bin_targets: n_bins must be >= 1");
    double lo = targets[0].target;
    double hi = targets[0].target;
    for (const auto& t : targets) {
        if (!std::isfinite(t.target))
            fail(ErrorCategory::Validation, "bin_targets: non-finite target for " + t.patient_id);
        lo = std::min(lo, t.target);
        hi = std::max(hi, t.target);
    }

    BinLayout layout;
    if (hi == lo) n_bins = 1;  // degenerate: all targets identical
    layout.edges.resize(n_bins + 1);
    for (uint32_t i = 0; i <= n_bins; ++i)
        layout.edges[i] = lo + (hi - lo) * static_cast<double>(i) / n_bins;
    layout.edges.back() = hi;
    layout.bin_counts.assign(n_bins, 0);
    layout.patient_bins.assign(n_bins, {});

    for (const auto& t : targets) {
        uint32_t b = layout.bin_of(t.target);
        layout.bin_counts[b]++;
        layout.patient_bins[b].push_back(t.patient_id);
    }
    return layout;
}

namespace {

// Half-up rounding, per the algorithm's round() on the budget cap.
uint32_t round_half_up(double v) {
    return static_cast<uint32_t>(std::floor(v + 0.5));
}

}  // namespace

std::vector<uint32_t> compute_budgets(const std::vector<uint32_t>& bin_counts,
                                      const UpsampleParams& params) {
    params.validate();
    if (bin_counts.empty()) fail(ErrorCategory::Usage, "compute_budgets: empty histogram");
    uint32_t max_val = *std::max_element(bin_counts.begin(), bin_counts.end());
    uint32_t cap = round_half_up(static_cast<double>(max_val) * params.alpha);
    std::vector<uint32_t> budgets(bin_counts.size());
    for (size_t i = 0; i < bin_counts.size(); ++i) {
        uint32_t gap = round_half_up(static_cast<double>(max_val - bin_counts[i]) * params.beta);
        budgets[i] = std::min(cap, gap);
    }
    return budgets;
}

UpsampleResult upsample(std::vector<Instance> training_instances, const BinLayout& layout,
                        const std::vector<uint32_t>& budgets, const SampleFn& sample_fn,
                        uint64_t seed) {
    if (budgets.size() != layout.n_bins())
        fail(ErrorCategory::Usage, "upsample: budgets do not match bin layout");

    UpsampleResult result;
    result.instances = std::move(training_instances);
    result.added_per_bin.assign(layout.n_bins(), 0);

    for (uint32_t b = 0; b < layout.n_bins(); ++b) {
        if (budgets[b] == 0) continue;
        const auto& pool = layout.patient_bins[b];
        if (pool.empty()) {
            result.skipped_bins.push_back(b);
            continue;
        }
        for (uint32_t draw = 0; draw < budgets[b]; ++draw) {
            uint64_t draw_seed = mix64(seed, b, draw);
            Rng rng(draw_seed);
            const std::string& pid = pool[static_cast<size_t>(rng.uniform_index(pool.size()))];
            result.instances.push_back(sample_fn(pid, rng.next_u64()));
            result.added_per_bin[b]++;
        }
    }
    return result;
}

}  // namespace hrdmil
