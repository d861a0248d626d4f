#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "hrdmil/aggregators.hpp"
#include "hrdmil/clustering.hpp"
#include "hrdmil/common.hpp"
#include "hrdmil/datamodel.hpp"
#include "hrdmil/sampling.hpp"
#include "hrdmil/upsampling.hpp"

namespace hrdmil {

struct TrainConfig {
    Arch arch = Arch::AttMil;
    SamplingStrategy strategy{SamplingVariant::ClusterWeighted, 600};
    uint32_t epochs = 30;
    double learning_rate = 1e-4;
    uint32_t batch_size = 16;
    uint64_t seed = 0;
    bool target_standardize = true;
    bool resample_per_epoch = false;
    std::optional<UpsampleParams> upsample;

    // Pipeline knobs surfaced in every report header.
    uint32_t kmeans_k = 50;
    uint32_t d_hidden = 128;
    uint32_t n_layers = 2;
    uint32_t n_heads = 2;

    void validate() const;
};

struct FoldSplit {
    uint32_t n_folds = 0;
    std::map<std::string, uint32_t> fold_assignment;

    uint32_t fold_of(const std::string& patient_id) const;
};

// Patients shuffled by seed and dealt round-robin; all of a patient's data
// lands in one fold and fold sizes differ by at most one.
FoldSplit make_folds(const Cohort& cohort, uint32_t n_folds, uint64_t seed);

// ---------------------------------------------------------------------------
// Target standardization (training-split statistics only).
// ---------------------------------------------------------------------------

struct TargetScaler {
    double mu = 0.0;
    double sigma = 1.0;
    bool active = false;  // false: passthrough (disabled or degenerate sigma=0)

    double apply(double y) const { return active ? (y - mu) / sigma : y; }
    double invert(double y) const { return active ? y * sigma + mu : y; }
};

TargetScaler fit_target_scaler(const std::vector<double>& targets, bool enabled);

// ---------------------------------------------------------------------------
// Training loop: MSE objective, Adam (beta1=0.9, beta2=0.999, eps=1e-8).
// ---------------------------------------------------------------------------

struct TrainResult {
    ModelParams params;
    std::vector<double> loss_history;  // per-epoch mean training MSE (scaled space)
    TargetScaler scaler;
    bool scaler_degenerate = false;  // sigma was 0; standardization skipped
};

TrainResult train(const TrainConfig& config, const std::vector<Instance>& instances);

// `provider(epoch)` supplies that epoch's instance list (resample-per-epoch).
using EpochProvider = std::function<const std::vector<Instance>&(uint32_t epoch)>;
TrainResult train_with_provider(const TrainConfig& config, const EpochProvider& provider);

// Central finite differences on every weight against the analytic gradients;
// returns the worst relative error. Guarded to small configurations.
double grad_check(const ModelParams& params, const Instance& instance, double eps);

// ---------------------------------------------------------------------------
// Cross-validation pipeline. Per fold, everything fit on training patients
// only: clustering assignments, bin layout, budgets, scaler, weights. Each
// held-out patient is predicted exactly once on an instance drawn with the
// evaluation seed.
// ---------------------------------------------------------------------------

struct FoldPrediction {
    std::string patient_id;
    double y_true = 0.0;
    double y_pred = 0.0;
};

struct UpsampleReport {
    std::vector<double> edges;
    std::vector<uint32_t> bin_counts;
    std::vector<uint32_t> budgets;
    std::vector<uint32_t> added_per_bin;
    std::vector<uint32_t> skipped_bins;
};

struct FoldResult {
    uint32_t fold = 0;
    ModelParams params;
    std::vector<FoldPrediction> predictions;
    std::vector<double> loss_history;
    bool scaler_degenerate = false;
    std::optional<UpsampleReport> upsample_report;
};

struct CvResult {
    FoldSplit split;
    std::vector<FoldResult> folds;
};

CvResult run_cv(const Cohort& cohort, const TrainConfig& config, uint32_t n_folds,
                int threads = 1);

}  // namespace hrdmil
