#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "json.hpp"

#include "hrdmil/evaluation.hpp"
#include "hrdmil/training.hpp"

namespace hrdmil {

using ordered_json = nlohmann::ordered_json;

// Embedded in every report. Deliberately excludes wall-clock data and thread
// counts: identical inputs and flags must produce byte-identical reports, so
// timing lives in its own sidecar file.
struct RunManifest {
    std::string command;
    std::vector<std::string> args;  // semantic argv (execution-only flags stripped)
    uint64_t seed = 0;
    std::vector<std::pair<std::string, std::string>> input_digests;  // path, fnv1a64 hex

    void add_input(const std::string& path);
};

ordered_json to_json(const RunManifest& m);

void write_json_file(const std::string& path, const ordered_json& doc);
ordered_json read_json_file(const std::string& path);

void write_text_file(const std::string& path, const std::string& text);

// ---------------------------------------------------------------------------
// predictions.json <-> CvResult
// ---------------------------------------------------------------------------

ordered_json config_json(const TrainConfig& config, uint32_t n_folds);
ordered_json predictions_json(const RunManifest& manifest, const TrainConfig& config,
                              uint32_t n_folds, const CvResult& cv);
ordered_json model_json(const ModelParams& params);

struct LoadedPredictions {
    ordered_json config_echo;
    std::vector<std::vector<FoldPrediction>> folds;
};
LoadedPredictions load_predictions(const std::string& path);

// ---------------------------------------------------------------------------
// Metric summary over per-fold held-out predictions.
//
// Per-fold AUROC uses labels binarized on that fold's own true scores (data-
// driven rules realize their cutpoints per fold); pooled classification
// metrics binarize the pooled scores once.
// ---------------------------------------------------------------------------

struct MetricsSummary {
    ThresholdRule rule;
    ResolvedThreshold pooled_resolved;
    std::vector<double> per_fold_auroc;
    std::vector<double> per_fold_cutpoint;
    double median_auroc = 0.0;
    double balanced_acc = 0.0;
    double recall_positive = 0.0;
    double overall_rmse = 0.0;
    std::vector<double> rmse_bin_edges;
    std::vector<BinnedRmseEntry> rmse_bins;
    uint32_t n_pos = 0, n_neg = 0, n_excluded = 0;
};

MetricsSummary summarize_predictions(const std::vector<std::vector<FoldPrediction>>& folds,
                                     const ThresholdRule& rule, uint32_t rmse_bins);

ordered_json metrics_json(const RunManifest& manifest, const MetricsSummary& s,
                          const ordered_json& config_echo);

std::string hex64(uint64_t v);

}  // namespace hrdmil
