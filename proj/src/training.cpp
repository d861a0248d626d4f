#include "hrdmil/training.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace hrdmil {

void TrainConfig::validate() const {
    if (epochs < 1) fail(ErrorCategory::Usage, "config: epochs must be >= 1");
    if (!(learning_rate > 0.0)) fail(ErrorCategory::Usage, "config: learning_rate must be > 0");
    if (batch_size < 1) fail(ErrorCategory::Usage, "config: batch_size must be >= 1");
    if (strategy.variant == SamplingVariant::All && arch == Arch::SpatialTransformer)
        fail(ErrorCategory::Usage,
             "config: the all-features strategy is only supported by attmil");
    if (kmeans_k < 1) fail(ErrorCategory::Usage, "config: k must be >= 1");
    if (upsample) upsample->validate();
}

uint32_t FoldSplit::fold_of(const std::string& patient_id) const {
    auto it = fold_assignment.find(patient_id);
    if (it == fold_assignment.end())
        fail(ErrorCategory::Validation, "patient not in fold split: " + patient_id);
    return it->second;
}

FoldSplit make_folds(const Cohort& cohort, uint32_t n_folds, uint64_t seed) {
    if (n_folds < 1) fail(ErrorCategory::Usage, "make_folds: n_folds must be >= 1");
    if (n_folds > cohort.patients.size())
        fail(ErrorCategory::InsufficientData, "make_folds: more folds than patients");
    std::vector<std::string> ids;
    ids.reserve(cohort.patients.size());
    for (const auto& p : cohort.patients) ids.push_back(p.id);
    Rng rng(seed);
    shuffle(ids, rng);
    FoldSplit split;
    split.n_folds = n_folds;
    for (size_t i = 0; i < ids.size(); ++i)
        split.fold_assignment[ids[i]] = static_cast<uint32_t>(i % n_folds);
    return split;
}

TargetScaler fit_target_scaler(const std::vector<double>& targets, bool enabled) {
    if (targets.empty()) fail(ErrorCategory::InsufficientData, "no targets to standardize");
    TargetScaler s;
    if (!enabled) return s;
    double n = static_cast<double>(targets.size());
    s.mu = std::accumulate(targets.begin(), targets.end(), 0.0) / n;
    double var = 0.0;
    for (double t : targets) var += (t - s.mu) * (t - s.mu);
    var /= n;
    s.sigma = std::sqrt(var);
    s.active = s.sigma > 0.0;
    return s;
}

namespace {

// Adam with a fixed visit order over the parameter tensors.
class AdamOptimizer {
public:
    AdamOptimizer(const ModelParams& shape, double lr)
        : lr_(lr), m_(zeros_like(shape)), v_(zeros_like(shape)) {}

    void step(ModelParams& params, ModelParams& grads) {
        ++t_;
        double bc1 = 1.0 - std::pow(kBeta1, t_);
        double bc2 = 1.0 - std::pow(kBeta2, t_);

        std::vector<std::span<double>> p_spans, g_spans, m_spans, v_spans;
        collect(params, p_spans);
        collect(grads, g_spans);
        collect(m_, m_spans);
        collect(v_, v_spans);
        for (size_t s = 0; s < p_spans.size(); ++s) {
            auto p = p_spans[s];
            auto g = g_spans[s];
            auto m = m_spans[s];
            auto v = v_spans[s];
            for (size_t i = 0; i < p.size(); ++i) {
                m[i] = kBeta1 * m[i] + (1.0 - kBeta1) * g[i];
                v[i] = kBeta2 * v[i] + (1.0 - kBeta2) * g[i] * g[i];
                double mhat = m[i] / bc1;
                double vhat = v[i] / bc2;
                p[i] -= lr_ * mhat / (std::sqrt(vhat) + kEps);
            }
        }
        // The decay rate stays in its admissible range.
        if (params.arch == Arch::SpatialTransformer && params.lambda_decay < 0.0)
            params.lambda_decay = 0.0;
    }

private:
    static constexpr double kBeta1 = 0.9;
    static constexpr double kBeta2 = 0.999;
    static constexpr double kEps = 1e-8;

    static void collect(ModelParams& p, std::vector<std::span<double>>& out) {
        visit_params(p, [&](const char*, std::span<double> s) { out.push_back(s); });
    }

    double lr_;
    uint64_t t_ = 0;
    ModelParams m_, v_;
};

void zero_grads(ModelParams& g) {
    visit_params(g, [](const char*, std::span<double> s) {
        std::fill(s.begin(), s.end(), 0.0);
    });
}

}  // namespace

TrainResult train_with_provider(const TrainConfig& config, const EpochProvider& provider) {
    config.validate();
    const std::vector<Instance>& first = provider(0);
    if (first.empty()) fail(ErrorCategory::InsufficientData, "train: no instances");
    const uint32_t d_in = first[0].matrix.dim;
    for (const auto& inst : first)
        if (inst.matrix.dim != d_in) fail(ErrorCategory::Dimension, "train: mixed instance dims");

    std::vector<double> targets;
    targets.reserve(first.size());
    for (const auto& inst : first) targets.push_back(inst.target);

    TrainResult result;
    result.scaler = fit_target_scaler(targets, config.target_standardize);
    result.scaler_degenerate = config.target_standardize && !result.scaler.active;
    result.params = init_params(config.arch, d_in, config.d_hidden,
                                mix64(config.seed, seedtag::kInit), config.n_layers,
                                config.n_heads);

    AdamOptimizer opt(result.params, config.learning_rate);
    ModelParams grads = zeros_like(result.params);
    ModelCache cache;

    for (uint32_t epoch = 0; epoch < config.epochs; ++epoch) {
        const std::vector<Instance>& instances =
            config.resample_per_epoch ? provider(epoch) : first;
        std::vector<size_t> order(instances.size());
        std::iota(order.begin(), order.end(), size_t{0});
        Rng rng(mix64(config.seed, seedtag::kBatch, epoch));
        shuffle(order, rng);

        double epoch_sq = 0.0;
        size_t pos = 0;
        while (pos < order.size()) {
            size_t batch_n = std::min<size_t>(config.batch_size, order.size() - pos);
            zero_grads(grads);
            for (size_t b = 0; b < batch_n; ++b) {
                const Instance& inst = instances[order[pos + b]];
                Prediction pred = model_forward(result.params, inst, &cache);
                double target = result.scaler.apply(inst.target);
                double err = pred.y_hat - target;
                epoch_sq += err * err;
                model_backward(result.params, cache, 2.0 * err / static_cast<double>(batch_n),
                               grads);
            }
            opt.step(result.params, grads);
            pos += batch_n;
        }
        double mean_loss = epoch_sq / static_cast<double>(order.size());
        if (!std::isfinite(mean_loss))
            fail(ErrorCategory::Numeric,
                 "training diverged (non-finite loss) at epoch " + std::to_string(epoch));
        result.loss_history.push_back(mean_loss);
    }
    return result;
}

TrainResult train(const TrainConfig& config, const std::vector<Instance>& instances) {
    return train_with_provider(config, [&](uint32_t) -> const std::vector<Instance>& {
        return instances;
    });
}

double grad_check(const ModelParams& params, const Instance& instance, double eps) {
    if (!(eps > 0.0)) fail(ErrorCategory::Usage, "grad_check: eps must be > 0");
    if (instance.matrix.n_patches > 64 || params.parameter_count() > 200000)
        fail(ErrorCategory::Usage, "grad_check: configuration too large for finite differences");

    ModelParams work = params;
    ModelParams grads = zeros_like(params);
    ModelCache cache;
    model_forward(work, instance, &cache);
    model_backward(work, cache, 1.0, grads);

    // A transformer without coordinates keeps lambda frozen at zero; central
    // differences would step it into the coords-required region.
    const bool skip_lambda =
        params.arch == Arch::SpatialTransformer && !instance.matrix.has_coords();

    double worst = 0.0;
    std::vector<std::span<double>> w_spans, g_spans;
    visit_params(work, [&](const char*, std::span<double> s) { w_spans.push_back(s); });
    std::vector<const char*> names;
    visit_params(grads, [&](const char* n, std::span<double> s) {
        g_spans.push_back(s);
        names.push_back(n);
    });

    for (size_t s = 0; s < w_spans.size(); ++s) {
        if (skip_lambda && std::string_view(names[s]) == "lambda") continue;
        for (size_t i = 0; i < w_spans[s].size(); ++i) {
            double saved = w_spans[s][i];
            w_spans[s][i] = saved + eps;
            double y_plus = model_forward(work, instance).y_hat;
            w_spans[s][i] = saved - eps;
            double y_minus = model_forward(work, instance).y_hat;
            w_spans[s][i] = saved;
            double fd = (y_plus - y_minus) / (2.0 * eps);
            double an = g_spans[s][i];
            double rel = std::abs(an - fd) / std::max({std::abs(an), std::abs(fd), 1e-4});
            worst = std::max(worst, rel);
        }
    }
    return worst;
}

// ---------------------------------------------------------------------------
// Cross-validation pipeline.
// ---------------------------------------------------------------------------

namespace {

struct PatientData {
    PatientBag bag;
    std::optional<ClusterAssignment> assignment;
    Instance base_instance;
    Instance eval_instance;
};

}  // namespace

CvResult run_cv(const Cohort& cohort, const TrainConfig& config, uint32_t n_folds,
                int threads) {
    config.validate();
    const size_t n_patients = cohort.patients.size();
    if (n_patients == 0) fail(ErrorCategory::InsufficientData, "run_cv: empty cohort");

    const bool needs_clusters = config.strategy.needs_clusters();
    const uint64_t kmeans_seed = mix64(config.seed, seedtag::kKmeans);
    const uint64_t eval_seed = mix64(config.seed, seedtag::kEvalDraw);

    // Per-patient work is independent and seed-derived, so thread count
    // cannot change any result.
    std::vector<PatientData> data(n_patients);
    parallel_for(n_patients, threads, [&](size_t i) {
        const auto& rec = cohort.patients[i];
        PatientData& pd = data[i];
        pd.bag = build_patient_bag(cohort, rec.id);
        const ClusterAssignment* assign_ptr = nullptr;
        if (needs_clusters) {
            uint32_t k_eff = effective_k(config.kmeans_k, pd.bag.size());
            ClusterModel model =
                kmeans_fit(pd.bag.matrix, k_eff, mix64(kmeans_seed, fnv1a64(rec.id)));
            pd.assignment = assign(model, pd.bag.matrix);
            assign_ptr = &*pd.assignment;
        }
        pd.base_instance = make_instance(pd.bag, assign_ptr, config.strategy,
                                         derive_patient_seed(config.seed, rec.id));
        pd.eval_instance = make_instance(pd.bag, assign_ptr, config.strategy,
                                         mix64(eval_seed, fnv1a64(rec.id)));
    });

    std::map<std::string, size_t> index_of;
    for (size_t i = 0; i < n_patients; ++i) index_of[cohort.patients[i].id] = i;

    CvResult result;
    result.split = make_folds(cohort, n_folds, mix64(config.seed, seedtag::kFolds));

    for (uint32_t fold = 0; fold < n_folds; ++fold) {
        std::vector<size_t> train_idx, test_idx;
        for (size_t i = 0; i < n_patients; ++i) {
            if (result.split.fold_of(cohort.patients[i].id) == fold)
                test_idx.push_back(i);
            else
                train_idx.push_back(i);
        }
        if (train_idx.empty())
            fail(ErrorCategory::InsufficientData, "run_cv: empty training split");

        TrainConfig fold_config = config;
        fold_config.seed = mix64(config.seed, fold + 1);

        // Draws a fresh instance for a training patient; used by upsampling
        // and by per-epoch resampling.
        auto draw_instance = [&](const std::string& pid, uint64_t seed) {
            const PatientData& pd = data[index_of.at(pid)];
            return make_instance(pd.bag, pd.assignment ? &*pd.assignment : nullptr,
                                 config.strategy, seed);
        };

        std::optional<BinLayout> layout;
        std::vector<uint32_t> budgets;
        if (config.upsample) {
            std::vector<TargetEntry> entries;
            for (size_t i : train_idx)
                entries.push_back({cohort.patients[i].id, cohort.patients[i].hrd_score});
            layout = bin_targets(entries, config.upsample->n_bins);
            budgets = compute_budgets(layout->bin_counts, *config.upsample);
        }

        FoldResult fr;
        fr.fold = fold;

        auto build_epoch_instances = [&](uint32_t epoch) {
            std::vector<Instance> list;
            list.reserve(train_idx.size());
            if (epoch == 0 || !config.resample_per_epoch) {
                for (size_t i : train_idx) list.push_back(data[i].base_instance);
            } else {
                uint64_t epoch_seed = mix64(config.seed, seedtag::kEpoch, epoch);
                for (size_t i : train_idx)
                    list.push_back(draw_instance(cohort.patients[i].id,
                                                 mix64(epoch_seed, fnv1a64(cohort.patients[i].id))));
            }
            if (layout) {
                uint64_t ups_seed = mix64(config.seed, seedtag::kUpsample,
                                          static_cast<uint64_t>(fold) << 20 | epoch);
                UpsampleResult ups = upsample(std::move(list), *layout, budgets,
                                              draw_instance, ups_seed);
                if (epoch == 0) {
                    UpsampleReport rep;
                    rep.edges = layout->edges;
                    rep.bin_counts = layout->bin_counts;
                    rep.budgets = budgets;
                    rep.added_per_bin = ups.added_per_bin;
                    rep.skipped_bins = ups.skipped_bins;
                    fr.upsample_report = std::move(rep);
                }
                return std::move(ups.instances);
            }
            return list;
        };

        std::vector<Instance> epoch_cache = build_epoch_instances(0);
        uint32_t cached_epoch = 0;
        TrainResult tr = train_with_provider(
            fold_config, [&](uint32_t epoch) -> const std::vector<Instance>& {
                if (epoch != cached_epoch) {
                    epoch_cache = build_epoch_instances(epoch);
                    cached_epoch = epoch;
                }
                return epoch_cache;
            });

        fr.params = std::move(tr.params);
        fr.loss_history = std::move(tr.loss_history);
        fr.scaler_degenerate = tr.scaler_degenerate;

        fr.predictions.resize(test_idx.size());
        parallel_for(test_idx.size(), threads, [&](size_t t) {
            size_t i = test_idx[t];
            Prediction pred = model_forward(fr.params, data[i].eval_instance);
            fr.predictions[t] = {cohort.patients[i].id, cohort.patients[i].hrd_score,
                                 tr.scaler.invert(pred.y_hat)};
        });

        result.folds.push_back(std::move(fr));
    }
    return result;
}

}  // namespace hrdmil
