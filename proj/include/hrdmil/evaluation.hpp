#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "hrdmil/common.hpp"
#include "hrdmil/upsampling.hpp"

namespace hrdmil {

// Threshold rules turning continuous HRD scores into HRD+/- labels:
// a fixed cutpoint (e.g. 42), the data median, or tertile cutpoints with the
// middle third excluded.
struct ThresholdRule {
    enum class Kind { Fixed, Median, Tertiles };
    Kind kind = Kind::Fixed;
    double fixed_t = 42.0;
    double lo = 0.0, hi = 0.0;  // tertile cutpoints

    static ThresholdRule fixed(double t);
    static ThresholdRule median();
    static ThresholdRule tertiles(double lo, double hi);
    // CLI grammar: fixed:<t> | median | tertiles:<lo>,<hi>
    static ThresholdRule parse(const std::string& text);
    std::string describe() const;
};

// Rule with its cutpoints pinned against a concrete set of true scores.
struct ResolvedThreshold {
    ThresholdRule::Kind kind;
    double t = 0.0;             // cutpoint (fixed value or realized median)
    double lo = 0.0, hi = 0.0;  // tertiles only
};

// Median is taken from the evaluation labels' true scores.
ResolvedThreshold resolve_threshold(const ThresholdRule& rule,
                                    const std::vector<double>& true_scores);

struct BinarizeResult {
    std::vector<uint8_t> labels;  // 1 = positive; meaningful where kept
    std::vector<uint8_t> kept;    // 0 only for the middle tertile band
    uint32_t n_excluded = 0;
};

// Strict inequality: positive iff score > cutpoint. Tertiles keep only the
// outer bands (positive above hi, negative below lo).
BinarizeResult binarize(const std::vector<double>& scores, const ResolvedThreshold& rule);

// For metrics that need predicted classes: a prediction is positive iff it
// clears the rule's upper cutpoint (t, or hi for tertiles). No exclusion.
std::vector<uint8_t> binarize_predictions(const std::vector<double>& scores,
                                          const ResolvedThreshold& rule);

// Mann-Whitney AUROC with mid-rank tie handling:
// (wins + 0.5 * ties) / (n_pos * n_neg). Errors when a class is missing.
double auroc(const std::vector<double>& pred_scores, const std::vector<uint8_t>& true_labels);

double balanced_accuracy(const std::vector<uint8_t>& pred_labels,
                         const std::vector<uint8_t>& true_labels);
double recall_pos(const std::vector<uint8_t>& pred_labels,
                  const std::vector<uint8_t>& true_labels);

double rmse(const std::vector<double>& preds, const std::vector<double>& targets);

struct BinnedRmseEntry {
    uint32_t bin = 0;
    uint32_t count = 0;
    double rmse = 0.0;
};

// Per-bin RMSE grouped by the TRUE target's bin; empty bins are absent.
std::vector<BinnedRmseEntry> binned_rmse(const std::vector<double>& preds,
                                         const std::vector<double>& targets,
                                         const BinLayout& layout);

// Mean rank per model over a model x fold metric table (rank 1 = best =
// highest metric; ties share the average rank).
std::vector<double> rank_models(const std::vector<std::vector<double>>& metric_table);

double pearson_corr(const std::vector<double>& x, const std::vector<double>& y);

double median(std::vector<double> v);

}  // namespace hrdmil
