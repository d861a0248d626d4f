#include "hrdmil/reportio.hpp"

#include <fstream>

namespace hrdmil {

std::string hex64(uint64_t v) {
    char buf[17];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(v));
    return buf;
}

void RunManifest::add_input(const std::string& path) {
    input_digests.emplace_back(path, hex64(fnv1a64_file(path)));
}

ordered_json to_json(const RunManifest& m) {
    ordered_json j;
    j["command"] = m.command;
    j["args"] = m.args;
    j["version"] = "0.1.0";
    j["seed"] = m.seed;
    ordered_json inputs = ordered_json::object();
    for (const auto& [path, digest] : m.input_digests) inputs[path] = digest;
    j["inputs"] = inputs;
    return j;
}

void write_json_file(const std::string& path, const ordered_json& doc) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) fail(ErrorCategory::Io, "cannot open for writing: " + path);
    out << doc.dump(2) << "\n";
    if (!out) fail(ErrorCategory::Io, "write failed: " + path);
}

ordered_json read_json_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) fail(ErrorCategory::Io, "cannot open: " + path);
    try {
        ordered_json doc;
        in >> doc;
        return doc;
    } catch (const nlohmann::json::exception& e) {
        fail(ErrorCategory::Format, path + " is not valid JSON: " + e.what());
    }
}

void write_text_file(const std::string& path, const std::string& text) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) fail(ErrorCategory::Io, "cannot open for writing: " + path);
    out << text;
    if (!out) fail(ErrorCategory::Io, "write failed: " + path);
}

ordered_json config_json(const TrainConfig& config, uint32_t n_folds) {
    ordered_json j;
    j["arch"] = to_string(config.arch);
    j["strategy"] = to_string(config.strategy.variant);
    j["bagsize"] = config.strategy.bagsize;
    j["k"] = config.kmeans_k;
    j["folds"] = n_folds;
    j["seed"] = config.seed;
    j["epochs"] = config.epochs;
    j["learning_rate"] = config.learning_rate;
    j["batch_size"] = config.batch_size;
    j["d_hidden"] = config.d_hidden;
    j["n_layers"] = config.n_layers;
    j["n_heads"] = config.n_heads;
    j["target_standardize"] = config.target_standardize;
    j["resample_per_epoch"] = config.resample_per_epoch;
    if (config.upsample) {
        ordered_json u;
        u["bins"] = config.upsample->n_bins;
        u["alpha"] = config.upsample->alpha;
        u["beta"] = config.upsample->beta;
        u["budget_rounding"] = "half-up";
        j["upsample"] = u;
    } else {
        j["upsample"] = nullptr;
    }
    if (config.arch == Arch::SpatialTransformer)
        j["spatial_attention"] = "simplified";  // distance-proportional logit bias
    return j;
}

ordered_json predictions_json(const RunManifest& manifest, const TrainConfig& config,
                              uint32_t n_folds, const CvResult& cv) {
    ordered_json doc;
    doc["run"] = to_json(manifest);
    doc["config"] = config_json(config, n_folds);
    ordered_json folds = ordered_json::array();
    for (const auto& fr : cv.folds) {
        ordered_json fj;
        fj["fold"] = fr.fold;
        fj["loss_history"] = fr.loss_history;
        fj["scaler_degenerate"] = fr.scaler_degenerate;
        if (fr.upsample_report) {
            ordered_json u;
            u["edges"] = fr.upsample_report->edges;
            u["bin_counts"] = fr.upsample_report->bin_counts;
            u["budgets"] = fr.upsample_report->budgets;
            u["added_per_bin"] = fr.upsample_report->added_per_bin;
            u["skipped_bins"] = fr.upsample_report->skipped_bins;
            fj["upsampling"] = u;
        } else {
            fj["upsampling"] = nullptr;
        }
        ordered_json preds = ordered_json::array();
        for (const auto& p : fr.predictions) {
            ordered_json pj;
            pj["patient"] = p.patient_id;
            pj["y_true"] = p.y_true;
            pj["y_pred"] = p.y_pred;
            preds.push_back(pj);
        }
        fj["predictions"] = preds;
        folds.push_back(fj);
    }
    doc["folds"] = folds;
    return doc;
}

ordered_json model_json(const ModelParams& params) {
    ordered_json doc;
    doc["arch"] = to_string(params.arch);
    doc["d_in"] = params.d_in;
    doc["d_hidden"] = params.d_hidden;
    if (params.arch == Arch::SpatialTransformer) {
        doc["n_layers"] = params.n_layers;
        doc["n_heads"] = params.n_heads;
    }
    ordered_json tensors = ordered_json::array();
    visit_params(const_cast<ModelParams&>(params),
                 [&](const char* name, std::span<double> s) {
                     ordered_json t;
                     t["name"] = name;
                     t["values"] = std::vector<double>(s.begin(), s.end());
                     tensors.push_back(t);
                 });
    doc["tensors"] = tensors;
    return doc;
}

LoadedPredictions load_predictions(const std::string& path) {
    ordered_json doc = read_json_file(path);
    if (!doc.contains("folds"))
        fail(ErrorCategory::Format, "predictions file missing 'folds': " + path);
    LoadedPredictions out;
    if (doc.contains("config")) out.config_echo = doc["config"];
    for (const auto& fj : doc["folds"]) {
        std::vector<FoldPrediction> fold;
        for (const auto& pj : fj.at("predictions")) {
            FoldPrediction p;
            p.patient_id = pj.at("patient").get<std::string>();
            p.y_true = pj.at("y_true").get<double>();
            p.y_pred = pj.at("y_pred").get<double>();
            fold.push_back(std::move(p));
        }
        out.folds.push_back(std::move(fold));
    }
    if (out.folds.empty()) fail(ErrorCategory::Format, "predictions file has no folds: " + path);
    return out;
}

MetricsSummary summarize_predictions(const std::vector<std::vector<FoldPrediction>>& folds,
                                     const ThresholdRule& rule, uint32_t rmse_bins) {
    MetricsSummary s;
    s.rule = rule;

    std::vector<double> pooled_true, pooled_pred;
    for (const auto& fold : folds) {
        std::vector<double> y_true, y_pred;
        for (const auto& p : fold) {
            y_true.push_back(p.y_true);
            y_pred.push_back(p.y_pred);
            pooled_true.push_back(p.y_true);
            pooled_pred.push_back(p.y_pred);
        }
        ResolvedThreshold fold_rule = resolve_threshold(rule, y_true);
        BinarizeResult labels = binarize(y_true, fold_rule);
        std::vector<double> kept_scores;
        std::vector<uint8_t> kept_labels;
        for (size_t i = 0; i < y_true.size(); ++i) {
            if (!labels.kept[i]) continue;
            kept_scores.push_back(y_pred[i]);
            kept_labels.push_back(labels.labels[i]);
        }
        s.per_fold_auroc.push_back(auroc(kept_scores, kept_labels));
        s.per_fold_cutpoint.push_back(fold_rule.t);
    }
    s.median_auroc = median(s.per_fold_auroc);

    s.pooled_resolved = resolve_threshold(rule, pooled_true);
    BinarizeResult true_labels = binarize(pooled_true, s.pooled_resolved);
    std::vector<uint8_t> pred_labels = binarize_predictions(pooled_pred, s.pooled_resolved);
    std::vector<uint8_t> kept_true, kept_pred;
    for (size_t i = 0; i < pooled_true.size(); ++i) {
        if (!true_labels.kept[i]) continue;
        kept_true.push_back(true_labels.labels[i]);
        kept_pred.push_back(pred_labels[i]);
    }
    s.n_excluded = true_labels.n_excluded;
    for (uint8_t l : kept_true) (l ? s.n_pos : s.n_neg)++;
    s.balanced_acc = balanced_accuracy(kept_pred, kept_true);
    s.recall_positive = recall_pos(kept_pred, kept_true);
    s.overall_rmse = rmse(pooled_pred, pooled_true);

    std::vector<TargetEntry> entries;
    for (size_t i = 0; i < pooled_true.size(); ++i)
        entries.push_back({"", pooled_true[i]});
    BinLayout layout = bin_targets(entries, rmse_bins);
    s.rmse_bin_edges = layout.edges;
    s.rmse_bins = binned_rmse(pooled_pred, pooled_true, layout);
    return s;
}

ordered_json metrics_json(const RunManifest& manifest, const MetricsSummary& s,
                          const ordered_json& config_echo) {
    ordered_json doc;
    doc["run"] = to_json(manifest);
    ordered_json thr;
    thr["rule"] = s.rule.describe();
    switch (s.pooled_resolved.kind) {
        case ThresholdRule::Kind::Fixed:
        case ThresholdRule::Kind::Median:
            thr["cutpoint"] = s.pooled_resolved.t;
            break;
        case ThresholdRule::Kind::Tertiles:
            thr["lo"] = s.pooled_resolved.lo;
            thr["hi"] = s.pooled_resolved.hi;
            break;
    }
    thr["per_fold_cutpoints"] = s.per_fold_cutpoint;
    doc["threshold"] = thr;

    ordered_json per_fold = ordered_json::array();
    for (size_t f = 0; f < s.per_fold_auroc.size(); ++f) {
        ordered_json fj;
        fj["fold"] = f;
        fj["auroc"] = s.per_fold_auroc[f];
        per_fold.push_back(fj);
    }
    doc["per_fold_auroc"] = per_fold;
    doc["median_auroc"] = s.median_auroc;

    ordered_json pooled;
    pooled["balanced_accuracy"] = s.balanced_acc;
    pooled["recall_pos"] = s.recall_positive;
    pooled["rmse"] = s.overall_rmse;
    pooled["n_pos"] = s.n_pos;
    pooled["n_neg"] = s.n_neg;
    pooled["n_excluded"] = s.n_excluded;
    doc["pooled"] = pooled;

    ordered_json binned;
    binned["edges"] = s.rmse_bin_edges;
    ordered_json bins = ordered_json::array();
    for (const auto& b : s.rmse_bins) {
        ordered_json bj;
        bj["bin"] = b.bin;
        bj["count"] = b.count;
        bj["rmse"] = b.rmse;
        bins.push_back(bj);
    }
    binned["bins"] = bins;
    doc["binned_rmse"] = binned;

    doc["config_echo"] = config_echo;
    return doc;
}

}  // namespace hrdmil
