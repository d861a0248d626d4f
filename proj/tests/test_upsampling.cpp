#include <algorithm>
#include <map>
#include <set>

#include "doctest.h"
#include "hrdmil/sampling.hpp"
#include "hrdmil/upsampling.hpp"
#include "test_helpers.hpp"

using namespace hrdmil;

namespace {

// Independent bin-membership oracle: linear scan over the edge array,
// interior edges right-inclusive, last edge inclusive.
uint32_t bin_oracle(const BinLayout& layout, double t) {
    uint32_t n = layout.n_bins();
    for (uint32_t b = 0; b + 1 < n; ++b)
        if (t >= layout.edges[b] && t < layout.edges[b + 1]) return b;
    return n - 1;
}

std::vector<TargetEntry> entries_from(const std::vector<double>& targets) {
    std::vector<TargetEntry> out;
    for (size_t i = 0; i < targets.size(); ++i)
        out.push_back({"P" + std::to_string(i), targets[i]});
    return out;
}

}  // namespace

TEST_SUITE("upsampling") {

TEST_CASE("uniform integer targets spread one per bin") {
    BinLayout layout = bin_targets(entries_from({0, 1, 2, 3, 4, 5, 6}), 7);
    for (uint32_t c : layout.bin_counts) CHECK(c == 1);
}

TEST_CASE("two targets, two bins, edge at the midpoint") {
    BinLayout layout = bin_targets(entries_from({0, 10}), 2);
    CHECK(layout.bin_counts == std::vector<uint32_t>{1, 1});
    CHECK(layout.edges[1] == doctest::Approx(5.0));
}

TEST_CASE("interior-edge targets go right, max goes last") {
    BinLayout layout = bin_targets(entries_from({0, 5, 10}), 2);
    CHECK(layout.bin_of(5.0) == 1);
    CHECK(layout.bin_of(10.0) == 1);
    CHECK(layout.bin_of(0.0) == 0);
}

TEST_CASE("identical targets degenerate to a single bin") {
    BinLayout layout = bin_targets(entries_from({3, 3, 3}), 7);
    CHECK(layout.n_bins() == 1);
    CHECK(layout.bin_counts[0] == 3);
}

TEST_CASE("random targets: counts sum to n and membership matches the oracle") {
    Rng rng(12);
    std::vector<double> targets(1000);
    for (auto& t : targets) t = 100.0 * rng.uniform01();
    BinLayout layout = bin_targets(entries_from(targets), 7);
    uint64_t total = 0;
    for (uint32_t c : layout.bin_counts) total += c;
    CHECK(total == 1000);
    for (double t : targets) CHECK(layout.bin_of(t) == bin_oracle(layout, t));
}

TEST_CASE("budgets: uniform histogram gets all zeros") {
    UpsampleParams p;
    CHECK(compute_budgets({10, 10, 10}, p) == std::vector<uint32_t>{0, 0, 0});
}

TEST_CASE("budgets: hand-evaluated cases incl. the binding cap") {
    UpsampleParams p;  // alpha 0.65, beta 0.25
    CHECK(compute_budgets({100, 20, 4}, p) == std::vector<uint32_t>{0, 20, 24});

    UpsampleParams cap;
    cap.alpha = 0.1;
    cap.beta = 1.0;
    CHECK(compute_budgets({100, 1}, cap) == std::vector<uint32_t>{0, 10});
}

TEST_CASE("largest bin always receives budget zero") {
    Rng rng(5);
    UpsampleParams p;
    for (int rep = 0; rep < 200; ++rep) {
        uint32_t n = 1 + static_cast<uint32_t>(rng.uniform_index(9));
        std::vector<uint32_t> counts(n);
        for (auto& c : counts) c = static_cast<uint32_t>(rng.uniform_index(200));
        auto budgets = compute_budgets(counts, p);
        uint32_t max_val = *std::max_element(counts.begin(), counts.end());
        for (uint32_t b = 0; b < n; ++b)
            if (counts[b] == max_val) CHECK(budgets[b] == 0);
    }
}

TEST_CASE("upsample: zero budgets leave the list untouched") {
    BinLayout layout = bin_targets(entries_from({1, 2, 3}), 3);
    std::vector<Instance> base;
    base.push_back(testutil::random_instance("P0", 4, 2, 1, 1));
    auto result = upsample(base, layout, {0, 0, 0},
                           [](const std::string&, uint64_t) -> Instance {
                               FAIL("sampler must not be called");
                               return {};
                           },
                           7);
    CHECK(result.instances.size() == 1);
    CHECK(result.skipped_bins.empty());
}

TEST_CASE("upsample appends exactly the budget and keeps originals first") {
    std::vector<double> targets;
    Rng rng(9);
    for (int i = 0; i < 124; ++i) targets.push_back(rng.uniform01() < 0.8 ? 10 * rng.uniform01()
                                                                          : 60 + 30 * rng.uniform01());
    BinLayout layout = bin_targets(entries_from(targets), 3);
    std::vector<uint32_t> budgets = {0, 20, 24};
    std::vector<Instance> base;
    for (size_t i = 0; i < targets.size(); ++i)
        base.push_back(testutil::random_instance("P" + std::to_string(i), 3, 2, targets[i], i));

    size_t calls = 0;
    auto result = upsample(base, layout, budgets,
                           [&](const std::string& pid, uint64_t seed) {
                               ++calls;
                               return testutil::random_instance(pid, 3, 2, 0.0, seed);
                           },
                           3);
    CHECK(calls == 44);
    CHECK(result.instances.size() == 124 + 44);
    for (size_t i = 0; i < 124; ++i)
        CHECK(result.instances[i].patient_id == base[i].patient_id);
}

TEST_CASE("draws from a one-patient bin differ by seed but share the patient") {
    PatientBag bag = testutil::random_bag("lonely", 30, 2, 77.0, 4);
    BinLayout layout = bin_targets({{"lonely", 77.0}}, 1);
    std::vector<uint32_t> budgets = {2};
    auto result = upsample({}, layout, budgets,
                           [&](const std::string& pid, uint64_t seed) {
                               REQUIRE(pid == "lonely");
                               return sample_random(bag, 10, seed);
                           },
                           11);
    REQUIRE(result.instances.size() == 2);
    CHECK(result.instances[0].patient_id == "lonely");
    CHECK(result.instances[1].patient_id == "lonely");
    CHECK(result.instances[0].source_rows != result.instances[1].source_rows);
}

TEST_CASE("bins with positive budget but no patients are skipped and reported") {
    BinLayout layout;
    layout.edges = {0.0, 1.0, 2.0};
    layout.bin_counts = {2, 0};
    layout.patient_bins = {{"A", "B"}, {}};
    auto result = upsample({}, layout, {0, 5},
                           [](const std::string&, uint64_t) -> Instance { return {}; }, 1);
    CHECK(result.skipped_bins == std::vector<uint32_t>{1});
    CHECK(result.instances.empty());
}

TEST_CASE("post-upsampling histogram dominates the original and flattens") {
    Rng rng(31);
    std::vector<double> targets;
    for (int i = 0; i < 300; ++i) {
        double u = rng.uniform01();
        targets.push_back(100.0 * u * u);  // right-skewed
    }
    auto entries = entries_from(targets);
    BinLayout layout = bin_targets(entries, 7);
    bool all_nonzero = std::all_of(layout.bin_counts.begin(), layout.bin_counts.end(),
                                   [](uint32_t c) { return c > 0; });
    REQUIRE(all_nonzero);
    UpsampleParams p;
    auto budgets = compute_budgets(layout.bin_counts, p);

    std::vector<Instance> base;
    for (const auto& e : entries) {
        Instance inst;
        inst.patient_id = e.patient_id;
        inst.target = e.target;
        base.push_back(std::move(inst));
    }
    std::map<std::string, double> target_of;
    for (const auto& e : entries) target_of[e.patient_id] = e.target;
    auto result = upsample(base, layout, budgets,
                           [&](const std::string& pid, uint64_t) {
                               Instance inst;
                               inst.patient_id = pid;
                               inst.target = target_of.at(pid);
                               return inst;
                           },
                           17);

    std::vector<uint32_t> after(layout.n_bins(), 0);
    for (const auto& inst : result.instances) after[layout.bin_of(inst.target)]++;

    auto ratio = [](const std::vector<uint32_t>& h) {
        uint32_t mx = *std::max_element(h.begin(), h.end());
        uint32_t mn = *std::min_element(h.begin(), h.end());
        return static_cast<double>(mx) / static_cast<double>(mn);
    };
    for (uint32_t b = 0; b < layout.n_bins(); ++b) CHECK(after[b] >= layout.bin_counts[b]);
    CHECK(ratio(after) <= ratio(layout.bin_counts) + 1e-12);

    uint64_t budget_total = 0;
    for (uint32_t b : budgets) budget_total += b;
    CHECK(result.instances.size() == base.size() + budget_total);
}

TEST_CASE("no synthesized instance mixes patients") {
    // The sampler contract passes a single patient id per draw; verify the
    // pipeline keeps whatever the sampler returns tied to that id.
    PatientBag bag_a = testutil::random_bag("A", 20, 2, 5.0, 1);
    PatientBag bag_b = testutil::random_bag("B", 20, 2, 95.0, 2);
    BinLayout layout = bin_targets({{"A", 5.0}, {"B", 95.0}}, 2);
    auto budgets = std::vector<uint32_t>{3, 3};
    auto result = upsample({}, layout, budgets,
                           [&](const std::string& pid, uint64_t seed) {
                               return sample_random(pid == "A" ? bag_a : bag_b, 5, seed);
                           },
                           23);
    for (const auto& inst : result.instances) {
        const PatientBag& src = inst.patient_id == "A" ? bag_a : bag_b;
        for (uint32_t r = 0; r < inst.size(); ++r) {
            auto row = inst.matrix.row(r);
            auto src_row = src.matrix.row(inst.source_rows[r]);
            CHECK(std::equal(row.begin(), row.end(), src_row.begin()));
        }
    }
}

}  // TEST_SUITE
