#include "hrdmil/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

namespace hrdmil {

ThresholdRule ThresholdRule::fixed(double t) {
    if (!std::isfinite(t)) fail(ErrorCategory::Usage, "fixed threshold must be finite");
    ThresholdRule r;
    r.kind = Kind::Fixed;
    r.fixed_t = t;
    return r;
}

ThresholdRule ThresholdRule::median() {
    ThresholdRule r;
    r.kind = Kind::Median;
    return r;
}

ThresholdRule ThresholdRule::tertiles(double lo, double hi) {
    if (!(lo < hi)) fail(ErrorCategory::Usage, "tertiles require lo < hi");
    ThresholdRule r;
    r.kind = Kind::Tertiles;
    r.lo = lo;
    r.hi = hi;
    return r;
}

ThresholdRule ThresholdRule::parse(const std::string& text) {
    if (text == "median") return median();
    if (text.rfind("fixed:", 0) == 0) {
        try {
            return fixed(std::stod(text.substr(6)));
        } catch (const std::exception&) {
            fail(ErrorCategory::Usage, "cannot parse threshold: " + text);
        }
    }
    if (text.rfind("tertiles:", 0) == 0) {
        std::string rest = text.substr(9);
        size_t comma = rest.find(',');
        if (comma == std::string::npos)
            fail(ErrorCategory::Usage, "tertiles need two cutpoints: " + text);
        try {
            return tertiles(std::stod(rest.substr(0, comma)), std::stod(rest.substr(comma + 1)));
        } catch (const std::exception&) {
            fail(ErrorCategory::Usage, "cannot parse threshold: " + text);
        }
    }
    fail(ErrorCategory::Usage, "unknown threshold rule: " + text +
                                   " (expected fixed:<t> | median | tertiles:<lo>,<hi>)");
}

std::string ThresholdRule::describe() const {
    std::ostringstream ss;
    switch (kind) {
        case Kind::Fixed: ss << "fixed:" << fixed_t; break;
        case Kind::Median: ss << "median"; break;
        case Kind::Tertiles: ss << "tertiles:" << lo << "," << hi; break;
    }
    return ss.str();
}

double median(std::vector<double> v) {
    if (v.empty()) fail(ErrorCategory::InsufficientData, "median of empty vector");
    std::sort(v.begin(), v.end());
    size_t n = v.size();
    return n % 2 == 1 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

ResolvedThreshold resolve_threshold(const ThresholdRule& rule,
                                    const std::vector<double>& true_scores) {
    ResolvedThreshold r;
    r.kind = rule.kind;
    switch (rule.kind) {
        case ThresholdRule::Kind::Fixed:
            r.t = rule.fixed_t;
            break;
        case ThresholdRule::Kind::Median:
            r.t = median(true_scores);
            break;
        case ThresholdRule::Kind::Tertiles:
            r.lo = rule.lo;
            r.hi = rule.hi;
            r.t = rule.hi;
            break;
    }
    return r;
}

BinarizeResult binarize(const std::vector<double>& scores, const ResolvedThreshold& rule) {
    BinarizeResult out;
    out.labels.resize(scores.size(), 0);
    out.kept.resize(scores.size(), 1);
    for (size_t i = 0; i < scores.size(); ++i) {
        double s = scores[i];
        if (!std::isfinite(s)) fail(ErrorCategory::Validation, "binarize: non-finite score");
        if (rule.kind == ThresholdRule::Kind::Tertiles) {
            if (s > rule.hi) {
                out.labels[i] = 1;
            } else if (s < rule.lo) {
                out.labels[i] = 0;
            } else {
                out.kept[i] = 0;
                out.n_excluded++;
            }
        } else {
            out.labels[i] = s > rule.t ? 1 : 0;
        }
    }
    if (out.n_excluded == scores.size())
        fail(ErrorCategory::InsufficientData, "binarize: tertile rule excluded every score");
    return out;
}

std::vector<uint8_t> binarize_predictions(const std::vector<double>& scores,
                                          const ResolvedThreshold& rule) {
    double cut = rule.kind == ThresholdRule::Kind::Tertiles ? rule.hi : rule.t;
    std::vector<uint8_t> labels(scores.size(), 0);
    for (size_t i = 0; i < scores.size(); ++i) labels[i] = scores[i] > cut ? 1 : 0;
    return labels;
}

double auroc(const std::vector<double>& pred_scores, const std::vector<uint8_t>& true_labels) {
    if (pred_scores.size() != true_labels.size())
        fail(ErrorCategory::Usage, "auroc: length mismatch");
    size_t n = pred_scores.size();
    size_t n_pos = 0;
    for (uint8_t l : true_labels) n_pos += l ? 1 : 0;
    size_t n_neg = n - n_pos;
    if (n_pos == 0 || n_neg == 0)
        fail(ErrorCategory::InsufficientData, "auroc undefined with a single class");

    // Mid-rank assignment over score-sorted order.
    std::vector<size_t> order(n);
    std::iota(order.begin(), order.end(), size_t{0});
    std::stable_sort(order.begin(), order.end(),
                     [&](size_t a, size_t b) { return pred_scores[a] < pred_scores[b]; });
    std::vector<double> rank(n);
    size_t i = 0;
    while (i < n) {
        size_t j = i;
        while (j + 1 < n && pred_scores[order[j + 1]] == pred_scores[order[i]]) ++j;
        double mid = 0.5 * (static_cast<double>(i + 1) + static_cast<double>(j + 1));
        for (size_t t = i; t <= j; ++t) rank[order[t]] = mid;
        i = j + 1;
    }
    double rank_sum_pos = 0.0;
    for (size_t idx = 0; idx < n; ++idx)
        if (true_labels[idx]) rank_sum_pos += rank[idx];
    double u = rank_sum_pos - 0.5 * static_cast<double>(n_pos) * (n_pos + 1);
    return u / (static_cast<double>(n_pos) * static_cast<double>(n_neg));
}

namespace {

struct Confusion {
    uint64_t tp = 0, tn = 0, fp = 0, fn = 0;
};

Confusion confusion(const std::vector<uint8_t>& pred, const std::vector<uint8_t>& truth) {
    if (pred.size() != truth.size()) fail(ErrorCategory::Usage, "labels length mismatch");
    Confusion c;
    for (size_t i = 0; i < pred.size(); ++i) {
        if (truth[i] && pred[i]) c.tp++;
        else if (truth[i] && !pred[i]) c.fn++;
        else if (!truth[i] && pred[i]) c.fp++;
        else c.tn++;
    }
    return c;
}

}  // namespace

double balanced_accuracy(const std::vector<uint8_t>& pred_labels,
                         const std::vector<uint8_t>& true_labels) {
    Confusion c = confusion(pred_labels, true_labels);
    if (c.tp + c.fn == 0 || c.tn + c.fp == 0)
        fail(ErrorCategory::InsufficientData, "balanced_accuracy needs both true classes");
    double tpr = static_cast<double>(c.tp) / static_cast<double>(c.tp + c.fn);
    double tnr = static_cast<double>(c.tn) / static_cast<double>(c.tn + c.fp);
    return 0.5 * (tpr + tnr);
}

double recall_pos(const std::vector<uint8_t>& pred_labels,
                  const std::vector<uint8_t>& true_labels) {
    Confusion c = confusion(pred_labels, true_labels);
    if (c.tp + c.fn == 0)
        fail(ErrorCategory::InsufficientData, "recall_pos needs at least one positive case");
    return static_cast<double>(c.tp) / static_cast<double>(c.tp + c.fn);
}

double rmse(const std::vector<double>& preds, const std::vector<double>& targets) {
    if (preds.size() != targets.size()) fail(ErrorCategory::Usage, "rmse: length mismatch");
    if (preds.empty()) fail(ErrorCategory::InsufficientData, "rmse of empty vectors");
    double acc = 0.0;
    for (size_t i = 0; i < preds.size(); ++i) {
        double d = preds[i] - targets[i];
        acc += d * d;
    }
    return std::sqrt(acc / static_cast<double>(preds.size()));
}

std::vector<BinnedRmseEntry> binned_rmse(const std::vector<double>& preds,
                                         const std::vector<double>& targets,
                                         const BinLayout& layout) {
    if (preds.size() != targets.size()) fail(ErrorCategory::Usage, "binned_rmse: length mismatch");
    std::vector<double> sq(layout.n_bins(), 0.0);
    std::vector<uint32_t> cnt(layout.n_bins(), 0);
    for (size_t i = 0; i < preds.size(); ++i) {
        uint32_t b = layout.bin_of(targets[i]);
        double d = preds[i] - targets[i];
        sq[b] += d * d;
        cnt[b]++;
    }
    std::vector<BinnedRmseEntry> out;
    for (uint32_t b = 0; b < layout.n_bins(); ++b) {
        if (cnt[b] == 0) continue;
        out.push_back({b, cnt[b], std::sqrt(sq[b] / cnt[b])});
    }
    return out;
}

std::vector<double> rank_models(const std::vector<std::vector<double>>& metric_table) {
    if (metric_table.empty()) fail(ErrorCategory::Usage, "rank_models: empty table");
    size_t n_models = metric_table.size();
    size_t n_folds = metric_table[0].size();
    if (n_folds == 0) fail(ErrorCategory::Usage, "rank_models: no folds");
    for (const auto& row : metric_table)
        if (row.size() != n_folds)
            fail(ErrorCategory::Usage, "rank_models: missing cell (ragged table)");

    std::vector<double> mean_rank(n_models, 0.0);
    for (size_t f = 0; f < n_folds; ++f) {
        // Rank within this fold; higher metric is better (rank 1).
        std::vector<size_t> order(n_models);
        std::iota(order.begin(), order.end(), size_t{0});
        std::stable_sort(order.begin(), order.end(), [&](size_t a, size_t b) {
            return metric_table[a][f] > metric_table[b][f];
        });
        size_t i = 0;
        while (i < n_models) {
            size_t j = i;
            while (j + 1 < n_models &&
                   metric_table[order[j + 1]][f] == metric_table[order[i]][f])
                ++j;
            double avg = 0.5 * (static_cast<double>(i + 1) + static_cast<double>(j + 1));
            for (size_t t = i; t <= j; ++t) mean_rank[order[t]] += avg;
            i = j + 1;
        }
    }
    for (double& r : mean_rank) r /= static_cast<double>(n_folds);
    return mean_rank;
}

double pearson_corr(const std::vector<double>& x, const std::vector<double>& y) {
    if (x.size() != y.size()) fail(ErrorCategory::Usage, "pearson_corr: length mismatch");
    if (x.size() < 2) fail(ErrorCategory::InsufficientData, "pearson_corr needs >= 2 points");
    double n = static_cast<double>(x.size());
    double mx = std::accumulate(x.begin(), x.end(), 0.0) / n;
    double my = std::accumulate(y.begin(), y.end(), 0.0) / n;
    double sxx = 0.0, syy = 0.0, sxy = 0.0;
    for (size_t i = 0; i < x.size(); ++i) {
        double dx = x[i] - mx;
        double dy = y[i] - my;
        sxx += dx * dx;
        syy += dy * dy;
        sxy += dx * dy;
    }
    if (sxx == 0.0 || syy == 0.0)
        fail(ErrorCategory::InsufficientData, "pearson_corr: zero variance");
    return sxy / std::sqrt(sxx * syy);
}

}  // namespace hrdmil
