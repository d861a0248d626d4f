#include <cmath>
#include <fstream>

#include "doctest.h"
#include "hrdmil/evaluation.hpp"
#include "hrdmil/synthcohort.hpp"
#include "test_helpers.hpp"

using namespace hrdmil;
using testutil::TempDir;

namespace {

std::string slurp(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    return std::string((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
}

}  // namespace

TEST_SUITE("synthcohort") {

TEST_CASE("noise-free full-signal patches recover the target through the linear map") {
    TempDir dir("synth_exact");
    SynthSpec spec;
    spec.n_patients = 5;
    spec.patches_min = 30;
    spec.patches_max = 30;
    spec.dim = 6;
    spec.signal_dims = 3;
    spec.noise_sigma = 0.0;
    spec.signal_fraction = 1.0;
    spec.seed = 3;
    Cohort cohort = generate_cohort(spec, dir.file("c"));
    for (const auto& rec : cohort.patients) {
        PatientBag bag = build_patient_bag(cohort, rec.id);
        double mean = 0.0;
        for (uint32_t i = 0; i < bag.size(); ++i)
            for (uint32_t j = 0; j < spec.signal_dims; ++j)
                mean += bag.matrix.at(i, j);
        mean /= static_cast<double>(bag.size()) * spec.signal_dims;
        double recovered = mean * 100.0 / kSignalScale;
        CHECK(recovered == doctest::Approx(rec.hrd_score).epsilon(1e-4));
    }
}

TEST_CASE("right-skewed law puts most targets under 42") {
    TempDir dir("synth_skew");
    SynthSpec spec;
    spec.n_patients = 1000;
    spec.patches_min = 1;
    spec.patches_max = 2;
    spec.dim = 2;
    spec.signal_dims = 1;
    spec.seed = 5;
    Cohort cohort = generate_cohort(spec, dir.file("c"));
    uint32_t below = 0;
    for (const auto& rec : cohort.patients) below += rec.hrd_score < 42.0 ? 1 : 0;
    CHECK(below > 600);

    // Empirical CDF tracks the stated Beta(2,5) law at a few probes.
    for (double probe : {20.0, 42.0, 60.0}) {
        uint32_t count = 0;
        for (const auto& rec : cohort.patients) count += rec.hrd_score <= probe ? 1 : 0;
        double empirical = count / 1000.0;
        double expected = target_cdf(SkewShape::RightSkewed, probe);
        CHECK(std::abs(empirical - expected) < 0.05);  // ~3 sigma for n=1000
    }
}

TEST_CASE("target law CDFs are proper and ordered") {
    CHECK(target_cdf(SkewShape::Uniform, 0.0) == 0.0);
    CHECK(target_cdf(SkewShape::Uniform, 100.0) == 1.0);
    CHECK(target_cdf(SkewShape::Uniform, 25.0) == doctest::Approx(0.25));
    for (SkewShape s : {SkewShape::RightSkewed, SkewShape::LeftSkewed}) {
        double prev = -1.0;
        for (double y = 0.0; y <= 100.0; y += 5.0) {
            double c = target_cdf(s, y);
            CHECK(c >= prev);
            prev = c;
        }
        CHECK(target_cdf(s, 100.0) == doctest::Approx(1.0));
    }
    // Right skew concentrates low, left skew concentrates high.
    CHECK(target_cdf(SkewShape::RightSkewed, 30.0) > 0.5);
    CHECK(target_cdf(SkewShape::LeftSkewed, 70.0) < 0.5);
}

TEST_CASE("same spec and seed give byte-identical files") {
    TempDir dir("synth_det");
    SynthSpec spec;
    spec.n_patients = 4;
    spec.patches_min = 10;
    spec.patches_max = 20;
    spec.dim = 4;
    spec.signal_dims = 2;
    spec.seed = 7;
    Cohort a = generate_cohort(spec, dir.file("a"));
    Cohort b = generate_cohort(spec, dir.file("b"));
    for (size_t i = 0; i < a.patients.size(); ++i) {
        CHECK(slurp(a.patients[i].files[0]) == slurp(b.patients[i].files[0]));
    }
    CHECK(slurp(dir.file("a") + "/manifest.json") == slurp(dir.file("b") + "/manifest.json"));
}

TEST_CASE("generated cohorts pass datamodel validation and carry coords") {
    TempDir dir("synth_valid");
    SynthSpec spec;
    spec.n_patients = 6;
    spec.patches_min = 5;
    spec.patches_max = 15;
    spec.dim = 3;
    spec.signal_dims = 1;
    spec.seed = 11;
    generate_cohort(spec, dir.file("c"));
    Cohort loaded = load_manifest(dir.file("c") + "/manifest.json");
    CHECK(loaded.patients.size() == 6);
    for (const auto& rec : loaded.patients) {
        PatientBag bag = build_patient_bag(loaded, rec.id);
        CHECK(bag.matrix.has_coords());
        CHECK(bag.size() >= 5);
        CHECK(bag.size() <= 15);
    }
}

TEST_CASE("a linear probe on mean features correlates with the target") {
    TempDir dir("synth_probe");
    SynthSpec spec;
    spec.n_patients = 120;
    spec.patches_min = 50;
    spec.patches_max = 100;
    spec.dim = 16;
    spec.signal_dims = 4;
    spec.noise_sigma = 1.0;
    spec.signal_fraction = 0.3;
    spec.seed = 13;
    Cohort cohort = generate_cohort(spec, dir.file("c"));

    std::vector<double> probe, target;
    for (const auto& rec : cohort.patients) {
        PatientBag bag = build_patient_bag(cohort, rec.id);
        double mean = 0.0;
        for (uint32_t i = 0; i < bag.size(); ++i)
            for (uint32_t j = 0; j < spec.signal_dims; ++j) mean += bag.matrix.at(i, j);
        probe.push_back(mean / (static_cast<double>(bag.size()) * spec.signal_dims));
        target.push_back(rec.hrd_score);
    }
    CHECK(pearson_corr(probe, target) > 0.8);
}

TEST_CASE("oracle_auroc basics") {
    CHECK(oracle_auroc({0.1, 0.9}, {0, 1}) == 1.0);
    CHECK(oracle_auroc({0.5, 0.5, 0.5}, {0, 1, 0}) == 0.5);
    CHECK_THROWS_AS(oracle_auroc({0.5, 0.6}, {1, 1}), Error);
}

TEST_CASE("oracle_mean_predictor_rmse equals the population standard deviation") {
    CHECK(oracle_mean_predictor_rmse({4, 4, 4}) == 0.0);
    CHECK(oracle_mean_predictor_rmse({0, 10}) == doctest::Approx(5.0));
    Rng rng(17);
    std::vector<double> t(200);
    for (auto& v : t) v = 50.0 * rng.gaussian();
    double mean = 0.0;
    for (double v : t) mean += v;
    mean /= t.size();
    double var = 0.0;
    for (double v : t) var += (v - mean) * (v - mean);
    var /= t.size();
    CHECK(oracle_mean_predictor_rmse(t) == doctest::Approx(std::sqrt(var)).epsilon(1e-12));
}

TEST_CASE("spec json loads with overrides applied") {
    TempDir dir("synth_spec");
    {
        std::ofstream out(dir.file("spec.json"));
        out << R"({"n_patients": 9, "dim": 5, "skew": "left-skewed", "seed": 99})";
    }
    SynthSpec spec = load_synth_spec(dir.file("spec.json"));
    CHECK(spec.n_patients == 9);
    CHECK(spec.dim == 5);
    CHECK(spec.skew == SkewShape::LeftSkewed);
    CHECK(spec.seed == 99);
    CHECK(spec.patches_min == 100);  // default retained
}

}  // TEST_SUITE
