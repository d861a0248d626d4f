#include <cmath>

#include "doctest.h"
#include "hrdmil/clustering.hpp"
#include "test_helpers.hpp"

using namespace hrdmil;

namespace {

// Brute-force nearest-centroid oracle (lowest index wins ties).
uint32_t nearest_bruteforce(const PatchMatrix& m, uint32_t i, const ClusterModel& model) {
    uint32_t best = 0;
    double best_d = 1e300;
    for (uint32_t c = 0; c < model.k; ++c) {
        double d = 0.0;
        for (uint32_t j = 0; j < m.dim; ++j) {
            double diff = static_cast<double>(m.at(i, j)) - model.centroid(c)[j];
            d += diff * diff;
        }
        if (d < best_d) {
            best_d = d;
            best = c;
        }
    }
    return best;
}

PatchMatrix two_clouds(uint32_t n_per, uint32_t d, uint64_t seed, double separation) {
    Rng rng(seed);
    PatchMatrix m;
    m.n_patches = 2 * n_per;
    m.dim = d;
    m.features.resize(static_cast<size_t>(m.n_patches) * d);
    for (uint32_t i = 0; i < m.n_patches; ++i) {
        double center = i < n_per ? 0.0 : separation;
        for (uint32_t j = 0; j < d; ++j)
            m.features[static_cast<size_t>(i) * d + j] =
                static_cast<float>(center + 0.05 * rng.gaussian());
    }
    return m;
}

}  // namespace

TEST_SUITE("clustering") {

TEST_CASE("two well-separated clouds recover the cloud means") {
    PatchMatrix m = two_clouds(50, 4, 11, 10.0);
    ClusterModel model = kmeans_fit(m, 2, 3);

    // Closed-form means of the generated clouds.
    std::vector<double> mean_a(4, 0.0), mean_b(4, 0.0);
    for (uint32_t i = 0; i < 50; ++i)
        for (uint32_t j = 0; j < 4; ++j) mean_a[j] += m.at(i, j) / 50.0;
    for (uint32_t i = 50; i < 100; ++i)
        for (uint32_t j = 0; j < 4; ++j) mean_b[j] += m.at(i, j) / 50.0;

    // Centroid order depends on seeding; match by first coordinate.
    auto c0 = model.centroid(0);
    auto c1 = model.centroid(1);
    const auto& lo = c0[0] < c1[0] ? c0 : c1;
    const auto& hi = c0[0] < c1[0] ? c1 : c0;
    for (uint32_t j = 0; j < 4; ++j) {
        CHECK(lo[j] == doctest::Approx(mean_a[j]).epsilon(1e-6));
        CHECK(hi[j] == doctest::Approx(mean_b[j]).epsilon(1e-6));
    }
}

TEST_CASE("k equal to n gives zero inertia") {
    PatchMatrix m = testutil::random_matrix(12, 3, 5);
    ClusterModel model = kmeans_fit(m, 12, 9);
    CHECK(model.inertia == doctest::Approx(0.0).epsilon(1e-12));
}

TEST_CASE("same seed twice gives identical centroids") {
    PatchMatrix m = testutil::random_matrix(60, 6, 21);
    ClusterModel a = kmeans_fit(m, 7, 1234);
    ClusterModel b = kmeans_fit(m, 7, 1234);
    CHECK(a.centroids == b.centroids);
    ClusterAssignment aa = assign(a, m);
    ClusterAssignment bb = assign(b, m);
    CHECK(aa.labels == bb.labels);
}

TEST_CASE("inertia is non-increasing across Lloyd iterations") {
    for (uint64_t seed = 0; seed < 5; ++seed) {
        PatchMatrix m = testutil::random_matrix(80, 5, seed + 40);
        ClusterModel model = kmeans_fit(m, 6, seed);
        for (size_t i = 1; i < model.inertia_history.size(); ++i)
            CHECK(model.inertia_history[i] <= model.inertia_history[i - 1] + 1e-9);
        CHECK(model.inertia <= model.inertia_history.back() + 1e-9);
    }
}

TEST_CASE("assign matches brute-force scan on a random 100x8 matrix") {
    PatchMatrix m = testutil::random_matrix(100, 8, 31);
    ClusterModel model = kmeans_fit(m, 9, 77);
    ClusterAssignment a = assign(model, m);
    for (uint32_t i = 0; i < m.n_patches; ++i)
        CHECK(a.labels[i] == nearest_bruteforce(m, i, model));
}

TEST_CASE("a point equal to a centroid gets that label; equidistant ties break low") {
    ClusterModel model;
    model.k = 5;
    model.dim = 1;
    model.centroids = {0.0, 2.0, 4.0, 6.0, 8.0};
    PatchMatrix m;
    m.n_patches = 2;
    m.dim = 1;
    m.features = {6.0f, 3.0f};  // exact centroid 3; midpoint of centroids 1 and 2
    ClusterAssignment a = assign(model, m);
    CHECK(a.labels[0] == 3);
    CHECK(a.labels[1] == 1);  // tie between centroids 1 and 2 goes low
}

TEST_CASE("assign rejects dim mismatch") {
    PatchMatrix m = testutil::random_matrix(10, 4, 3);
    ClusterModel model = kmeans_fit(m, 2, 3);
    PatchMatrix other = testutil::random_matrix(5, 3, 4);
    CHECK_THROWS_AS(assign(model, other), Error);
}

TEST_CASE("kmeans_fit rejects k greater than n") {
    PatchMatrix m = testutil::random_matrix(4, 2, 3);
    CHECK_THROWS_AS(kmeans_fit(m, 5, 0), Error);
}

TEST_CASE("cluster_sizes tallies and fuzzed labels always sum to n") {
    CHECK(cluster_sizes({0, 0, 1}, 2) == std::vector<uint32_t>{2, 1});
    CHECK(cluster_sizes({1, 1, 1, 1}, 3) == std::vector<uint32_t>{0, 4, 0});
    Rng rng(8);
    for (int rep = 0; rep < 50; ++rep) {
        uint32_t k = 1 + static_cast<uint32_t>(rng.uniform_index(10));
        uint32_t n = 1 + static_cast<uint32_t>(rng.uniform_index(200));
        std::vector<uint32_t> labels(n);
        for (auto& l : labels) l = static_cast<uint32_t>(rng.uniform_index(k));
        auto sizes = cluster_sizes(labels, k);
        uint64_t total = 0;
        for (uint32_t c : sizes) total += c;
        CHECK(total == n);
    }
}

TEST_CASE("empty clusters get reseeded so k stays live") {
    // Duplicated points force k-means++ fallback and empty clusters.
    PatchMatrix m;
    m.n_patches = 6;
    m.dim = 1;
    m.features = {1.0f, 1.0f, 1.0f, 5.0f, 5.0f, 9.0f};
    ClusterModel model = kmeans_fit(m, 3, 4);
    ClusterAssignment a = assign(model, m);
    uint32_t nonempty = 0;
    for (uint32_t c : a.sizes) nonempty += c > 0 ? 1 : 0;
    CHECK(nonempty == 3);
    CHECK(model.inertia == doctest::Approx(0.0).epsilon(1e-12));
}

}  // TEST_SUITE
