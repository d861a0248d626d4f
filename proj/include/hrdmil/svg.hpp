#pragma once

#include <string>
#include <vector>

namespace hrdmil {
namespace svg {

struct Series {
    std::string label;
    std::vector<double> x;
    std::vector<double> y;
};

// Paired histogram bars (e.g. original vs upsampled target distribution).
std::string histogram_pair(const std::vector<double>& edges,
                           const std::vector<double>& counts_a,
                           const std::vector<double>& counts_b,
                           const std::string& label_a, const std::string& label_b,
                           const std::string& title);

// Grouped bars per category (e.g. per-bin RMSE, one or two series).
std::string grouped_bars(const std::vector<std::string>& categories,
                         const std::vector<std::pair<std::string, std::vector<double>>>& series,
                         const std::string& title, const std::string& y_label);

// Line chart with markers (e.g. metric vs bagsize per strategy).
std::string line_chart(const std::vector<Series>& series, const std::string& title,
                       const std::string& x_label, const std::string& y_label);

// Per-fold rank table: one row per model, fold metrics plus mean rank.
std::string rank_table(const std::vector<std::string>& models,
                       const std::vector<std::vector<double>>& fold_metrics,
                       const std::vector<double>& mean_ranks, const std::string& title);

}  // namespace svg
}  // namespace hrdmil
