#include <numeric>
#include <set>

#include "doctest.h"
#include "hrdmil/sampling.hpp"
#include "test_helpers.hpp"

using namespace hrdmil;

namespace {

ClusterAssignment assignment_from_sizes(const std::vector<uint32_t>& sizes) {
    ClusterAssignment a;
    a.sizes = sizes;
    for (uint32_t c = 0; c < sizes.size(); ++c)
        for (uint32_t i = 0; i < sizes[c]; ++i) a.labels.push_back(c);
    return a;
}

void check_allocation(const std::vector<uint32_t>& sizes, uint32_t S,
                      const std::vector<uint32_t>& alloc) {
    uint64_t total = 0;
    for (uint32_t c = 0; c < sizes.size(); ++c) {
        total += alloc[c];
        CHECK(alloc[c] <= sizes[c]);
        if (sizes[c] > 0)
            CHECK(alloc[c] >= 1);
        else
            CHECK(alloc[c] == 0);
    }
    CHECK(total == S);
}

}  // namespace

TEST_SUITE("sampling") {

TEST_CASE("exact proportional split") {
    CHECK(allocate_proportional({60, 40}, 10) == std::vector<uint32_t>{6, 4});
    CHECK(allocate_proportional({50, 30, 20}, 10) == std::vector<uint32_t>{5, 3, 2});
}

TEST_CASE("floor plus min-1 plus largest remainder, hand-applied") {
    CHECK(allocate_proportional({70, 20, 10}, 8) == std::vector<uint32_t>{6, 1, 1});
}

TEST_CASE("S equal to nonempty cluster count gives exactly one per cluster") {
    std::vector<uint32_t> sizes(50);
    Rng rng(3);
    for (auto& s : sizes) s = 1 + static_cast<uint32_t>(rng.uniform_index(200));
    auto alloc = allocate_proportional(sizes, 50);
    for (uint32_t c = 0; c < 50; ++c) CHECK(alloc[c] == 1);
}

TEST_CASE("allocation bounds hold over random cases") {
    Rng rng(17);
    for (int rep = 0; rep < 500; ++rep) {
        uint32_t k = 1 + static_cast<uint32_t>(rng.uniform_index(12));
        std::vector<uint32_t> sizes(k);
        uint64_t B = 0;
        uint32_t nonempty = 0;
        for (auto& s : sizes) {
            s = static_cast<uint32_t>(rng.uniform_index(30));
            B += s;
            nonempty += s > 0 ? 1 : 0;
        }
        if (nonempty == 0) continue;
        uint32_t S = nonempty + static_cast<uint32_t>(rng.uniform_index(B - nonempty + 1));
        auto alloc = allocate_proportional(sizes, S);
        check_allocation(sizes, S, alloc);
    }
}

TEST_CASE("allocation error cases") {
    CHECK_THROWS_AS(allocate_proportional({5, 5, 5}, 2), Error);   // below nonempty count
    CHECK_THROWS_AS(allocate_proportional({5, 5}, 11), Error);     // above bag size
}

TEST_CASE("cluster-weighted draw: S=B copies the bag in order") {
    PatientBag bag = testutil::random_bag("p", 20, 3, 1.0, 5);
    auto a = assignment_from_sizes({12, 8});
    Instance inst = sample_cluster_weighted(bag, a, 20, 99);
    REQUIRE(inst.size() == 20);
    for (uint32_t i = 0; i < 20; ++i) CHECK(inst.source_rows[i] == i);
    CHECK(inst.matrix.features == bag.matrix.features);
}

TEST_CASE("cluster-weighted draw: k=50 S=50 yields one row per cluster") {
    Rng rng(2);
    std::vector<uint32_t> sizes(50);
    for (auto& s : sizes) s = 1 + static_cast<uint32_t>(rng.uniform_index(40));
    auto a = assignment_from_sizes(sizes);
    PatientBag bag = testutil::random_bag("p", a.n(), 2, 1.0, 7);
    Instance inst = sample_cluster_weighted(bag, a, 50, 123);
    REQUIRE(inst.size() == 50);
    std::set<uint32_t> seen_clusters;
    for (uint32_t r : inst.source_rows) seen_clusters.insert(a.labels[r]);
    CHECK(seen_clusters.size() == 50);
}

TEST_CASE("no duplicate source indices in any draw") {
    Rng rng(10);
    for (int rep = 0; rep < 100; ++rep) {
        uint32_t k = 1 + static_cast<uint32_t>(rng.uniform_index(8));
        std::vector<uint32_t> sizes(k);
        uint32_t B = 0, nonempty = 0;
        for (auto& s : sizes) {
            s = static_cast<uint32_t>(rng.uniform_index(20));
            B += s;
            nonempty += s > 0 ? 1 : 0;
        }
        if (nonempty == 0) continue;
        uint32_t S = nonempty + static_cast<uint32_t>(rng.uniform_index(B - nonempty + 1));
        auto a = assignment_from_sizes(sizes);
        auto idx = sample_cluster_weighted_indices(a, S, rng.next_u64());
        std::set<uint32_t> uniq(idx.begin(), idx.end());
        CHECK(uniq.size() == idx.size());
        CHECK(idx.size() == S);
        for (size_t i = 0; i + 1 < idx.size(); ++i) CHECK(idx[i] < idx[i + 1]);
    }
}

TEST_CASE("clustered-random: forced one-per-cluster and full-bag cases") {
    auto a = assignment_from_sizes({4, 3, 2});
    auto one_each = sample_clustered_random_indices(a, 3, 5);
    REQUIRE(one_each.size() == 3);
    std::set<uint32_t> clusters;
    for (uint32_t r : one_each) clusters.insert(a.labels[r]);
    CHECK(clusters.size() == 3);

    auto everything = sample_clustered_random_indices(a, 9, 5);
    CHECK(everything.size() == 9);
}

TEST_CASE("clustered-random allocations respect bounds over many seeds") {
    auto a = assignment_from_sizes({5, 5});
    for (uint64_t seed = 0; seed < 10000; ++seed) {
        auto idx = sample_clustered_random_indices(a, 4, seed);
        REQUIRE(idx.size() == 4);
        uint32_t in_first = 0;
        std::set<uint32_t> uniq(idx.begin(), idx.end());
        CHECK(uniq.size() == 4);
        for (uint32_t r : idx) in_first += a.labels[r] == 0 ? 1 : 0;
        CHECK(in_first >= 1);
        CHECK(in_first <= 3);  // min-1 for the other cluster
    }
}

TEST_CASE("random sampling: whole bag, distinct indices, uniform singletons") {
    auto all = sample_random_indices(6, 6, 3);
    CHECK(all == std::vector<uint32_t>{0, 1, 2, 3, 4, 5});

    // S=1 over many seeds: frequency within 3 sigma of uniform.
    std::vector<uint32_t> freq(4, 0);
    const int trials = 10000;
    for (uint64_t seed = 0; seed < trials; ++seed)
        freq[sample_random_indices(4, 1, seed)[0]]++;
    double expected = trials / 4.0;
    double sigma = std::sqrt(trials * 0.25 * 0.75);
    for (uint32_t f : freq) CHECK(std::abs(f - expected) < 3.0 * sigma);
}

TEST_CASE("sample_all copies rows and coords and is idempotent") {
    PatientBag bag = testutil::random_bag("p", 37, 4, 2.0, 11, true);
    Instance a = sample_all(bag);
    Instance b = sample_all(bag);
    REQUIRE(a.size() == 37);
    CHECK(a.matrix.features == bag.matrix.features);
    CHECK(a.matrix.coords == bag.matrix.coords);
    CHECK(a.matrix.features == b.matrix.features);
    CHECK(a.source_rows == b.source_rows);
}

TEST_CASE("make_instance degrades to the full bag when S >= B") {
    PatientBag bag = testutil::random_bag("p", 10, 2, 1.0, 3);
    SamplingStrategy s{SamplingVariant::Random, 50};
    Instance inst = make_instance(bag, nullptr, s, 1);
    CHECK(inst.size() == 10);
}

TEST_CASE("determinism: identical seed gives identical instance") {
    PatientBag bag = testutil::random_bag("p", 40, 3, 1.0, 9);
    auto a = assignment_from_sizes({10, 10, 10, 10});
    Instance i1 = sample_cluster_weighted(bag, a, 13, 42);
    Instance i2 = sample_cluster_weighted(bag, a, 13, 42);
    CHECK(i1.source_rows == i2.source_rows);
    Instance i3 = sample_clustered_random(bag, a, 13, 42);
    Instance i4 = sample_clustered_random(bag, a, 13, 42);
    CHECK(i3.source_rows == i4.source_rows);
}

TEST_CASE("strategy names parse and reject unknowns") {
    CHECK(parse_strategy("cluster-weighted", 5).variant == SamplingVariant::ClusterWeighted);
    CHECK(parse_strategy("clustered-random", 5).variant == SamplingVariant::ClusteredRandom);
    CHECK(parse_strategy("random", 5).variant == SamplingVariant::Random);
    CHECK(parse_strategy("all", 0).variant == SamplingVariant::All);
    CHECK_THROWS_AS(parse_strategy("spatial", 5), Error);
    CHECK_THROWS_AS(parse_strategy("random", 0), Error);
}

}  // TEST_SUITE
