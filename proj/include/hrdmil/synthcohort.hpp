#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "hrdmil/common.hpp"
#include "hrdmil/datamodel.hpp"

namespace hrdmil {

enum class SkewShape { Uniform, RightSkewed, LeftSkewed };

SkewShape parse_skew(const std::string& name);  // uniform | right-skewed | left-skewed
const char* to_string(SkewShape s);

// Synthetic cohort with planted signal: targets y on [0, 100] drawn from the
// chosen law; a signal_fraction share of each patient's patches carries
// (y/100) * kSignalScale on the first signal_dims feature coordinates (plus
// noise_sigma Gaussian noise); everything else is unit Gaussian noise.
// Coordinates sit on a tile grid with the signal patches packed together.
struct SynthSpec {
    std::string name = "synthetic";
    uint32_t n_patients = 200;
    uint32_t patches_min = 100;
    uint32_t patches_max = 300;
    uint32_t dim = 32;
    uint32_t signal_dims = 8;
    double noise_sigma = 1.0;
    SkewShape skew = SkewShape::RightSkewed;
    double signal_fraction = 0.3;
    uint64_t seed = 0;

    void validate() const;
};

SynthSpec load_synth_spec(const std::string& path);

inline constexpr double kSignalScale = 2.0;

// Mean signal-dim activation for target y; the generator's documented
// linear map (invertible when signal_fraction == 1 and noise_sigma == 0).
inline double signal_mean_for_target(double y) { return (y / 100.0) * kSignalScale; }

// CDF of the target law on [0, 100]. Right skew is Beta(2,5) scaled by 100,
// left skew Beta(5,2); exposed so tests can check the empirical CDF.
double target_cdf(SkewShape skew, double y);
double sample_target(SkewShape skew, Rng& rng);

// Writes one feature file per patient plus manifest.json into out_dir and
// returns the loaded cohort. Deterministic given the spec.
Cohort generate_cohort(const SynthSpec& spec, const std::string& out_dir, int threads = 1);

// ---------------------------------------------------------------------------
// Independent oracles for acceptance testing.
// ---------------------------------------------------------------------------

// Explicit O(n_pos * n_neg) pair enumeration with 0.5 credit for ties.
double oracle_auroc(const std::vector<double>& scores, const std::vector<uint8_t>& labels);

// RMSE of always predicting the mean target (the no-skill baseline).
double oracle_mean_predictor_rmse(const std::vector<double>& targets);

}  // namespace hrdmil
