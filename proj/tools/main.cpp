#include <chrono>
#include <cstdio>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "hrdmil/clustering.hpp"
#include "hrdmil/common.hpp"
#include "hrdmil/datamodel.hpp"
#include "hrdmil/evaluation.hpp"
#include "hrdmil/reportio.hpp"
#include "hrdmil/sampling.hpp"
#include "hrdmil/svg.hpp"
#include "hrdmil/synthcohort.hpp"
#include "hrdmil/training.hpp"
#include "hrdmil/upsampling.hpp"

namespace fs = std::filesystem;
using namespace hrdmil;

namespace {

// argv without execution-only flags; reports must hash/echo identically for
// any --threads setting.
std::vector<std::string> semantic_args(int argc, char** argv) {
    std::vector<std::string> out;
    for (int i = 1; i < argc; ++i) {
        std::string a = argv[i];
        if (a == "--threads") {
            ++i;
            continue;
        }
        if (a.rfind("--threads=", 0) == 0) continue;
        out.push_back(std::move(a));
    }
    return out;
}

struct Timing {
    std::chrono::steady_clock::time_point start = std::chrono::steady_clock::now();

    void write(const std::string& out_dir, int threads) const {
        double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start)
                          .count();
        ordered_json j;
        j["wall_seconds"] = secs;
        j["threads"] = threads;
        write_json_file((fs::path(out_dir) / "timing.json").string(), j);
    }
};

// Shared pipeline pieces -----------------------------------------------------

struct ClusteredCohort {
    std::vector<PatientBag> bags;
    std::vector<ClusterAssignment> assignments;  // empty when not clustered
    std::map<std::string, size_t> index;
};

ClusteredCohort prepare_bags(const Cohort& cohort, bool with_clusters, uint32_t k,
                             uint64_t seed, int threads) {
    ClusteredCohort cc;
    cc.bags.resize(cohort.patients.size());
    if (with_clusters) cc.assignments.resize(cohort.patients.size());
    uint64_t kseed = mix64(seed, seedtag::kKmeans);
    parallel_for(cohort.patients.size(), threads, [&](size_t i) {
        const auto& rec = cohort.patients[i];
        cc.bags[i] = build_patient_bag(cohort, rec.id);
        if (with_clusters) {
            uint32_t k_eff = effective_k(k, cc.bags[i].size());
            ClusterModel model =
                kmeans_fit(cc.bags[i].matrix, k_eff, mix64(kseed, fnv1a64(rec.id)));
            cc.assignments[i] = assign(model, cc.bags[i].matrix);
        }
    });
    for (size_t i = 0; i < cohort.patients.size(); ++i) cc.index[cohort.patients[i].id] = i;
    return cc;
}

// instances.json rows -> Instance list against freshly built bags.
ordered_json instances_to_json(const std::vector<Instance>& instances) {
    ordered_json arr = ordered_json::array();
    for (const auto& inst : instances) {
        ordered_json ij;
        ij["patient"] = inst.patient_id;
        ij["target"] = inst.target;
        ij["rows"] = inst.source_rows;
        arr.push_back(ij);
    }
    return arr;
}

std::string derive_label(const ordered_json& config_echo) {
    std::string label;
    if (config_echo.contains("arch")) label += config_echo["arch"].get<std::string>();
    if (config_echo.contains("strategy"))
        label += (label.empty() ? "" : "/") + config_echo["strategy"].get<std::string>();
    if (config_echo.contains("bagsize"))
        label += "/S=" + std::to_string(config_echo["bagsize"].get<uint64_t>());
    return label.empty() ? "model" : label;
}

// ----------------------------------------------------------------------------
// Subcommand options
// ----------------------------------------------------------------------------

struct SynthOpts {
    std::string spec_path;
    std::string out_dir;
    SynthSpec spec;
    std::string skew_name = "right-skewed";
    int threads = 1;
};

struct ClusterOpts {
    std::string manifest;
    uint32_t k = 50;
    uint64_t seed = 0;
    std::string out = "clusters.json";
    int threads = 1;
};

struct SampleOpts {
    std::string manifest;
    std::string strategy = "cluster-weighted";
    uint32_t bagsize = 600;
    uint32_t k = 50;
    uint64_t seed = 0;
    std::string out = "instances.json";
    int threads = 1;
};

struct UpsampleOpts {
    std::string manifest;
    std::string instances;
    uint32_t bins = 7;
    double alpha = 0.65;
    double beta = 0.25;
    uint64_t seed = 0;
    std::string out_dir = ".";
    int threads = 1;
};

struct TrainOpts {
    std::string manifest;
    std::string out_dir = ".";
    std::string arch = "attmil";
    std::string strategy = "cluster-weighted";
    uint32_t bagsize = 600;
    uint32_t k = 50;
    uint32_t folds = 5;
    uint64_t seed = 0;
    uint32_t epochs = 30;
    double lr = 1e-4;
    uint32_t batch = 16;
    uint32_t d_hidden = 128;
    uint32_t layers = 2;
    uint32_t heads = 2;
    bool standardize = true;
    bool resample_per_epoch = false;
    bool upsample = false;
    uint32_t bins = 7;
    double alpha = 0.65;
    double beta = 0.25;
    bool save_models = false;
    int threads = 1;
};

struct EvalOpts {
    std::string predictions;
    std::string threshold = "fixed:42";
    uint32_t bins = 7;
    std::string out = "metrics.json";
};

struct ReportOpts {
    std::string kind;
    std::vector<std::string> inputs;
    std::vector<std::string> labels;
    std::string out_dir = ".";
};

// ----------------------------------------------------------------------------
// Subcommand bodies
// ----------------------------------------------------------------------------

int cmd_synth(const SynthOpts& o, const std::vector<std::string>& args) {
    Timing timing;
    SynthSpec spec = o.spec;
    if (!o.spec_path.empty()) spec = load_synth_spec(o.spec_path);
    if (o.spec_path.empty()) spec.skew = parse_skew(o.skew_name);
    Cohort cohort = generate_cohort(spec, o.out_dir, o.threads);

    RunManifest manifest;
    manifest.command = "synth";
    manifest.args = args;
    manifest.seed = spec.seed;
    if (!o.spec_path.empty()) manifest.add_input(o.spec_path);

    ordered_json rep;
    rep["run"] = to_json(manifest);
    ordered_json sj;
    sj["name"] = spec.name;
    sj["n_patients"] = spec.n_patients;
    sj["patches_min"] = spec.patches_min;
    sj["patches_max"] = spec.patches_max;
    sj["dim"] = spec.dim;
    sj["signal_dims"] = spec.signal_dims;
    sj["noise_sigma"] = spec.noise_sigma;
    sj["skew"] = to_string(spec.skew);
    sj["signal_fraction"] = spec.signal_fraction;
    sj["seed"] = spec.seed;
    rep["spec"] = sj;
    rep["manifest"] = (fs::path(o.out_dir) / "manifest.json").string();
    write_json_file((fs::path(o.out_dir) / "synth_report.json").string(), rep);
    timing.write(o.out_dir, o.threads);
    std::printf("wrote %zu patients to %s\n", cohort.patients.size(), o.out_dir.c_str());
    return 0;
}

int cmd_cluster(const ClusterOpts& o, const std::vector<std::string>& args) {
    Cohort cohort = load_manifest(o.manifest);
    ClusteredCohort cc = prepare_bags(cohort, true, o.k, o.seed, o.threads);

    RunManifest manifest;
    manifest.command = "cluster";
    manifest.args = args;
    manifest.seed = o.seed;
    manifest.add_input(o.manifest);

    ordered_json doc;
    doc["run"] = to_json(manifest);
    doc["k"] = o.k;
    doc["seed"] = o.seed;
    ordered_json patients = ordered_json::array();
    for (size_t i = 0; i < cohort.patients.size(); ++i) {
        ordered_json pj;
        pj["id"] = cohort.patients[i].id;
        pj["k_effective"] = cc.assignments[i].k();
        pj["sizes"] = cc.assignments[i].sizes;
        pj["labels"] = cc.assignments[i].labels;
        patients.push_back(pj);
    }
    doc["patients"] = patients;
    write_json_file(o.out, doc);
    std::printf("wrote cluster assignments for %zu patients to %s\n",
                cohort.patients.size(), o.out.c_str());
    return 0;
}

int cmd_sample(const SampleOpts& o, const std::vector<std::string>& args) {
    Cohort cohort = load_manifest(o.manifest);
    SamplingStrategy strategy = parse_strategy(o.strategy, o.bagsize);
    ClusteredCohort cc = prepare_bags(cohort, strategy.needs_clusters(), o.k, o.seed, o.threads);

    std::vector<Instance> instances(cohort.patients.size());
    parallel_for(cohort.patients.size(), o.threads, [&](size_t i) {
        const ClusterAssignment* a =
            strategy.needs_clusters() ? &cc.assignments[i] : nullptr;
        instances[i] = make_instance(cc.bags[i], a, strategy,
                                     derive_patient_seed(o.seed, cohort.patients[i].id));
    });

    RunManifest manifest;
    manifest.command = "sample";
    manifest.args = args;
    manifest.seed = o.seed;
    manifest.add_input(o.manifest);

    ordered_json doc;
    doc["run"] = to_json(manifest);
    doc["strategy"] = to_string(strategy.variant);
    doc["bagsize"] = strategy.bagsize;
    doc["k"] = o.k;
    doc["seed"] = o.seed;
    doc["instances"] = instances_to_json(instances);
    write_json_file(o.out, doc);
    std::printf("wrote %zu instances to %s\n", instances.size(), o.out.c_str());
    return 0;
}

int cmd_upsample(const UpsampleOpts& o, const std::vector<std::string>& args) {
    Timing timing;
    Cohort cohort = load_manifest(o.manifest);
    ordered_json base_doc = read_json_file(o.instances);
    if (!base_doc.contains("strategy") || !base_doc.contains("instances"))
        fail(ErrorCategory::Format, "instances file missing strategy/instances: " + o.instances);
    SamplingStrategy strategy = parse_strategy(base_doc["strategy"].get<std::string>(),
                                               base_doc.value("bagsize", 0u));
    uint32_t k = base_doc.value("k", 50u);

    UpsampleParams params;
    params.n_bins = o.bins;
    params.alpha = o.alpha;
    params.beta = o.beta;
    params.validate();

    ClusteredCohort cc = prepare_bags(cohort, strategy.needs_clusters(),
                                      k, base_doc.value("seed", uint64_t{0}), o.threads);

    // Reconstruct the base instances from their recorded row indices.
    std::vector<Instance> base;
    for (const auto& ij : base_doc["instances"]) {
        std::string pid = ij.at("patient").get<std::string>();
        auto it = cc.index.find(pid);
        if (it == cc.index.end())
            fail(ErrorCategory::Validation, "instances file references unknown patient " + pid);
        const PatientBag& bag = cc.bags[it->second];
        Instance inst;
        inst.patient_id = pid;
        inst.target = bag.hrd_score;
        inst.source_rows = ij.at("rows").get<std::vector<uint32_t>>();
        inst.matrix.dim = bag.matrix.dim;
        inst.matrix.n_patches = static_cast<uint32_t>(inst.source_rows.size());
        for (uint32_t r : inst.source_rows) {
            if (r >= bag.size())
                fail(ErrorCategory::Validation, "row index out of range for patient " + pid);
            auto row = bag.matrix.row(r);
            inst.matrix.features.insert(inst.matrix.features.end(), row.begin(), row.end());
        }
        base.push_back(std::move(inst));
    }

    std::vector<TargetEntry> entries;
    for (const auto& p : cohort.patients) entries.push_back({p.id, p.hrd_score});
    BinLayout layout = bin_targets(entries, params.n_bins);
    std::vector<uint32_t> budgets = compute_budgets(layout.bin_counts, params);

    auto draw = [&](const std::string& pid, uint64_t seed) {
        size_t i = cc.index.at(pid);
        const ClusterAssignment* a = strategy.needs_clusters() ? &cc.assignments[i] : nullptr;
        return make_instance(cc.bags[i], a, strategy, seed);
    };
    UpsampleResult ups = upsample(std::move(base), layout, budgets, draw,
                                  mix64(o.seed, seedtag::kUpsample));

    RunManifest manifest;
    manifest.command = "upsample";
    manifest.args = args;
    manifest.seed = o.seed;
    manifest.add_input(o.manifest);
    manifest.add_input(o.instances);

    // Post-upsampling histogram over instance targets.
    std::vector<uint32_t> counts_after(layout.n_bins(), 0);
    for (const auto& inst : ups.instances) counts_after[layout.bin_of(inst.target)]++;

    ordered_json rep;
    rep["run"] = to_json(manifest);
    rep["params"] = {{"bins", params.n_bins},
                     {"alpha", params.alpha},
                     {"beta", params.beta},
                     {"budget_rounding", "half-up"}};
    rep["edges"] = layout.edges;
    rep["bin_counts"] = layout.bin_counts;
    rep["budgets"] = budgets;
    rep["added_per_bin"] = ups.added_per_bin;
    rep["skipped_bins"] = ups.skipped_bins;
    rep["instance_counts_after"] = counts_after;
    write_json_file((fs::path(o.out_dir) / "upsample_report.json").string(), rep);

    ordered_json doc;
    doc["run"] = to_json(manifest);
    doc["strategy"] = to_string(strategy.variant);
    doc["bagsize"] = strategy.bagsize;
    doc["k"] = k;
    doc["seed"] = o.seed;
    doc["instances"] = instances_to_json(ups.instances);
    write_json_file((fs::path(o.out_dir) / "instances_upsampled.json").string(), doc);
    timing.write(o.out_dir, o.threads);
    std::printf("added %zu instances (%zu skipped bins)\n",
                ups.instances.size() - base_doc["instances"].size(), ups.skipped_bins.size());
    return 0;
}

int cmd_train(const TrainOpts& o, const std::vector<std::string>& args) {
    Timing timing;
    Cohort cohort = load_manifest(o.manifest);

    TrainConfig config;
    config.arch = parse_arch(o.arch);
    config.strategy = parse_strategy(o.strategy, o.bagsize);
    config.epochs = o.epochs;
    config.learning_rate = o.lr;
    config.batch_size = o.batch;
    config.seed = o.seed;
    config.target_standardize = o.standardize;
    config.resample_per_epoch = o.resample_per_epoch;
    config.kmeans_k = o.k;
    config.d_hidden = o.d_hidden;
    config.n_layers = o.layers;
    config.n_heads = o.heads;
    if (o.upsample) {
        UpsampleParams up;
        up.n_bins = o.bins;
        up.alpha = o.alpha;
        up.beta = o.beta;
        config.upsample = up;
    }
    config.validate();

    fs::create_directories(o.out_dir);
    CvResult cv = run_cv(cohort, config, o.folds, o.threads);

    RunManifest manifest;
    manifest.command = "train";
    manifest.args = args;
    manifest.seed = o.seed;
    manifest.add_input(o.manifest);

    write_json_file((fs::path(o.out_dir) / "predictions.json").string(),
                    predictions_json(manifest, config, o.folds, cv));
    if (o.save_models) {
        for (const auto& fr : cv.folds) {
            std::string path =
                (fs::path(o.out_dir) / ("model_fold" + std::to_string(fr.fold) + ".json"))
                    .string();
            write_json_file(path, model_json(fr.params));
        }
    }
    timing.write(o.out_dir, o.threads);
    std::printf("trained %u folds; predictions in %s\n", o.folds,
                (fs::path(o.out_dir) / "predictions.json").string().c_str());
    return 0;
}

int cmd_eval(const EvalOpts& o, const std::vector<std::string>& args) {
    LoadedPredictions loaded = load_predictions(o.predictions);
    ThresholdRule rule = ThresholdRule::parse(o.threshold);
    MetricsSummary summary = summarize_predictions(loaded.folds, rule, o.bins);

    RunManifest manifest;
    manifest.command = "eval";
    manifest.args = args;
    manifest.add_input(o.predictions);

    write_json_file(o.out, metrics_json(manifest, summary, loaded.config_echo));
    std::printf("median AUROC %.4f | balanced accuracy %.4f | recall+ %.4f | rmse %.4f\n",
                summary.median_auroc, summary.balanced_acc, summary.recall_positive,
                summary.overall_rmse);
    return 0;
}

int cmd_report(const ReportOpts& o, const std::vector<std::string>& args) {
    (void)args;
    fs::create_directories(o.out_dir);
    auto out_path = [&](const std::string& name) {
        return (fs::path(o.out_dir) / name).string();
    };
    auto label_for = [&](size_t i, const ordered_json& doc) {
        if (i < o.labels.size()) return o.labels[i];
        if (doc.contains("config_echo")) return derive_label(doc["config_echo"]);
        return std::string("series ") + std::to_string(i);
    };

    if (o.kind == "hist") {
        if (o.inputs.size() != 1)
            fail(ErrorCategory::Usage, "report hist expects one upsample report or predictions file");
        ordered_json doc = read_json_file(o.inputs[0]);
        ordered_json block;
        if (doc.contains("bin_counts")) {
            block = doc;
        } else if (doc.contains("folds") && !doc["folds"].empty() &&
                   !doc["folds"][0]["upsampling"].is_null()) {
            block = doc["folds"][0]["upsampling"];
        } else {
            fail(ErrorCategory::Format, "input has no upsampling histogram: " + o.inputs[0]);
        }
        std::vector<double> edges = block["edges"].get<std::vector<double>>();
        std::vector<double> before, after;
        auto counts = block["bin_counts"].get<std::vector<double>>();
        auto added = block.contains("added_per_bin")
                         ? block["added_per_bin"].get<std::vector<double>>()
                         : std::vector<double>(counts.size(), 0.0);
        for (size_t i = 0; i < counts.size(); ++i) {
            before.push_back(counts[i]);
            after.push_back(counts[i] + added[i]);
        }
        write_text_file(out_path("histogram_pair.svg"),
                        svg::histogram_pair(edges, before, after, "original", "upsampled",
                                            "Original vs. upsampled target distribution"));
        std::string csv = "bin,edge_lo,edge_hi,count_original,count_upsampled\n";
        for (size_t i = 0; i < before.size(); ++i) {
            char buf[160];
            std::snprintf(buf, sizeof(buf), "%zu,%.6g,%.6g,%.6g,%.6g\n", i, edges[i],
                          edges[i + 1], before[i], after[i]);
            csv += buf;
        }
        write_text_file(out_path("histogram_pair.csv"), csv);
        std::printf("wrote histogram_pair.svg\n");
        return 0;
    }

    if (o.kind == "binned-rmse") {
        if (o.inputs.empty() || o.inputs.size() > 2)
            fail(ErrorCategory::Usage, "report binned-rmse expects one or two metrics files");
        std::vector<std::pair<std::string, std::vector<double>>> series;
        std::vector<std::string> categories;
        std::string csv = "series,bin,count,rmse\n";
        for (size_t i = 0; i < o.inputs.size(); ++i) {
            ordered_json doc = read_json_file(o.inputs[i]);
            if (!doc.contains("binned_rmse"))
                fail(ErrorCategory::Format, "metrics file missing binned_rmse: " + o.inputs[i]);
            auto& binned = doc["binned_rmse"];
            size_t n_bins = binned["edges"].size() - 1;
            std::vector<double> vals(n_bins, 0.0);
            std::string label = i < o.labels.size()
                                    ? o.labels[i]
                                    : (o.inputs.size() == 2 ? (i == 0 ? "baseline" : "upsampled")
                                                            : label_for(i, doc));
            for (const auto& bj : binned["bins"]) {
                uint32_t b = bj["bin"].get<uint32_t>();
                vals[b] = bj["rmse"].get<double>();
                char buf[160];
                std::snprintf(buf, sizeof(buf), "%s,%u,%u,%.6g\n", label.c_str(), b,
                              bj["count"].get<uint32_t>(), vals[b]);
                csv += buf;
            }
            if (categories.empty())
                for (size_t b = 0; b < n_bins; ++b) categories.push_back("bin " + std::to_string(b));
            series.emplace_back(label, vals);
        }
        write_text_file(out_path("binned_rmse.svg"),
                        svg::grouped_bars(categories, series, "Binned RMSE by true-target bin",
                                          "RMSE"));
        write_text_file(out_path("binned_rmse.csv"), csv);
        std::printf("wrote binned_rmse.svg\n");
        return 0;
    }

    if (o.kind == "bagsize" || o.kind == "strategy") {
        if (o.inputs.empty()) fail(ErrorCategory::Usage, "report needs metrics files");
        // Group median AUROC by arch (bagsize kind) or strategy, over bagsize.
        std::map<std::string, std::map<double, double>> grouped;
        for (const auto& in : o.inputs) {
            ordered_json doc = read_json_file(in);
            if (!doc.contains("config_echo") || !doc.contains("median_auroc"))
                fail(ErrorCategory::Format, "metrics file missing config echo: " + in);
            const auto& cfg = doc["config_echo"];
            std::string key = o.kind == "bagsize" ? cfg.value("arch", "model")
                                                  : cfg.value("strategy", "strategy");
            double bagsize = cfg.value("bagsize", 0.0);
            grouped[key][bagsize] = doc["median_auroc"].get<double>();
        }
        std::vector<svg::Series> series;
        std::string csv = "series,bagsize,median_auroc\n";
        for (const auto& [key, points] : grouped) {
            svg::Series s;
            s.label = key;
            for (const auto& [x, y] : points) {
                s.x.push_back(x);
                s.y.push_back(y);
                char buf[160];
                std::snprintf(buf, sizeof(buf), "%s,%.6g,%.6g\n", key.c_str(), x, y);
                csv += buf;
            }
            series.push_back(std::move(s));
        }
        std::string stem = o.kind == "bagsize" ? "auroc_vs_bagsize" : "strategy_comparison";
        write_text_file(out_path(stem + ".svg"),
                        svg::line_chart(series, "Median AUROC across bagsizes", "bagsize",
                                        "median AUROC"));
        write_text_file(out_path(stem + ".csv"), csv);
        std::printf("wrote %s.svg\n", stem.c_str());
        return 0;
    }

    if (o.kind == "ranks") {
        if (o.inputs.size() < 2) fail(ErrorCategory::Usage, "report ranks needs >= 2 metrics files");
        std::vector<std::string> models;
        std::vector<std::vector<double>> table;
        for (size_t i = 0; i < o.inputs.size(); ++i) {
            ordered_json doc = read_json_file(o.inputs[i]);
            std::vector<double> row;
            for (const auto& fj : doc.at("per_fold_auroc"))
                row.push_back(fj.at("auroc").get<double>());
            models.push_back(label_for(i, doc));
            table.push_back(std::move(row));
        }
        std::vector<double> mean_ranks = rank_models(table);

        ordered_json doc;
        RunManifest manifest;
        manifest.command = "report";
        manifest.args = {"--kind", "ranks"};
        for (const auto& in : o.inputs) manifest.add_input(in);
        doc["run"] = to_json(manifest);
        ordered_json rows = ordered_json::array();
        for (size_t m = 0; m < models.size(); ++m) {
            ordered_json rj;
            rj["model"] = models[m];
            rj["fold_auroc"] = table[m];
            rj["mean_rank"] = mean_ranks[m];
            rows.push_back(rj);
        }
        doc["ranks"] = rows;
        write_json_file(out_path("ranks.json"), doc);
        write_text_file(out_path("ranks.svg"),
                        svg::rank_table(models, table, mean_ranks,
                                        "Per-fold AUROC and mean rank"));
        std::string csv = "model,mean_rank\n";
        for (size_t m = 0; m < models.size(); ++m) {
            char buf[256];
            std::snprintf(buf, sizeof(buf), "%s,%.6g\n", models[m].c_str(), mean_ranks[m]);
            csv += buf;
        }
        write_text_file(out_path("ranks.csv"), csv);
        std::printf("wrote ranks.svg\n");
        return 0;
    }

    fail(ErrorCategory::Usage, "unknown report kind: " + o.kind +
                                   " (hist | binned-rmse | bagsize | strategy | ranks)");
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"hrdmil: regression MIL pipeline for continuous HRD score prediction"};
    app.require_subcommand(1);
    std::vector<std::string> args = semantic_args(argc, argv);

    SynthOpts synth;
    auto* s = app.add_subcommand("synth", "generate a synthetic cohort with planted signal");
    s->add_option("--spec", synth.spec_path, "synth spec JSON file");
    s->add_option("--out-dir", synth.out_dir, "output directory")->required();
    s->add_option("--name", synth.spec.name);
    s->add_option("--patients", synth.spec.n_patients);
    s->add_option("--patches-min", synth.spec.patches_min);
    s->add_option("--patches-max", synth.spec.patches_max);
    s->add_option("--dim", synth.spec.dim);
    s->add_option("--signal-dims", synth.spec.signal_dims);
    s->add_option("--noise-sigma", synth.spec.noise_sigma);
    s->add_option("--skew", synth.skew_name, "uniform | right-skewed | left-skewed");
    s->add_option("--signal-fraction", synth.spec.signal_fraction);
    s->add_option("--seed", synth.spec.seed);
    s->add_option("--threads", synth.threads);

    ClusterOpts cluster;
    auto* c = app.add_subcommand("cluster", "per-patient k-means over patch features");
    c->add_option("--manifest", cluster.manifest)->required();
    c->add_option("--k", cluster.k);
    c->add_option("--seed", cluster.seed);
    c->add_option("--out", cluster.out);
    c->add_option("--threads", cluster.threads);

    SampleOpts sample;
    auto* sm = app.add_subcommand("sample", "draw fixed-size instances per patient");
    sm->add_option("--manifest", sample.manifest)->required();
    sm->add_option("--strategy", sample.strategy,
                   "cluster-weighted | clustered-random | random | all");
    sm->add_option("--bagsize", sample.bagsize);
    sm->add_option("--k", sample.k);
    sm->add_option("--seed", sample.seed);
    sm->add_option("--out", sample.out);
    sm->add_option("--threads", sample.threads);

    UpsampleOpts upsample;
    auto* u = app.add_subcommand("upsample", "distribution-based upsampling of instances");
    u->add_option("--manifest", upsample.manifest)->required();
    u->add_option("--instances", upsample.instances)->required();
    u->add_option("--bins", upsample.bins);
    u->add_option("--alpha", upsample.alpha);
    u->add_option("--beta", upsample.beta);
    u->add_option("--seed", upsample.seed);
    u->add_option("--out-dir", upsample.out_dir);
    u->add_option("--threads", upsample.threads);

    TrainOpts train;
    auto* t = app.add_subcommand("train", "cross-validated regression training");
    t->set_config("--config");
    t->add_option("--manifest", train.manifest)->required();
    t->add_option("--out-dir", train.out_dir);
    t->add_option("--arch", train.arch, "attmil | transformer");
    t->add_option("--strategy", train.strategy);
    t->add_option("--bagsize", train.bagsize);
    t->add_option("--k", train.k);
    t->add_option("--folds", train.folds);
    t->add_option("--seed", train.seed);
    t->add_option("--epochs", train.epochs);
    t->add_option("--lr", train.lr);
    t->add_option("--batch", train.batch);
    t->add_option("--d-hidden", train.d_hidden);
    t->add_option("--layers", train.layers);
    t->add_option("--heads", train.heads);
    t->add_flag("--standardize,!--no-standardize", train.standardize,
                "standardize targets on the training split");
    t->add_flag("--resample-per-epoch", train.resample_per_epoch);
    t->add_flag("--upsample", train.upsample);
    t->add_option("--bins", train.bins);
    t->add_option("--alpha", train.alpha);
    t->add_option("--beta", train.beta);
    t->add_flag("--save-models", train.save_models);
    t->add_option("--threads", train.threads);

    EvalOpts eval;
    auto* e = app.add_subcommand("eval", "metrics from held-out predictions");
    e->add_option("--predictions", eval.predictions)->required();
    e->add_option("--threshold", eval.threshold, "fixed:<t> | median | tertiles:<lo>,<hi>");
    e->add_option("--bins", eval.bins, "bins for binned RMSE");
    e->add_option("--out", eval.out);

    ReportOpts report;
    auto* r = app.add_subcommand("report", "render JSON metrics into SVG charts");
    r->add_option("--kind", report.kind, "hist | binned-rmse | bagsize | strategy | ranks")
        ->required();
    r->add_option("--in", report.inputs, "input JSON files")->required();
    r->add_option("--label", report.labels, "series labels (one per input)");
    r->add_option("--out-dir", report.out_dir);

    try {
        app.parse(argc, argv);
        if (*s) return cmd_synth(synth, args);
        if (*c) return cmd_cluster(cluster, args);
        if (*sm) return cmd_sample(sample, args);
        if (*u) return cmd_upsample(upsample, args);
        if (*t) return cmd_train(train, args);
        if (*e) return cmd_eval(eval, args);
        if (*r) return cmd_report(report, args);
    } catch (const CLI::ParseError& err) {
        if (err.get_exit_code() == 0) return app.exit(err);  // --help
        std::fprintf(stderr, "error usage: %s\n", err.what());
        return 1;
    } catch (const Error& err) {
        std::fprintf(stderr, "error %s: %s\n", to_string(err.category), err.what());
        return 1;
    } catch (const std::exception& err) {
        std::fprintf(stderr, "error internal: %s\n", err.what());
        return 1;
    }
    return 0;
}
