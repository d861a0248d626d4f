#include "hrdmil/svg.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <sstream>

namespace hrdmil {
namespace svg {

namespace {

constexpr int kWidth = 640;
constexpr int kHeight = 420;
constexpr int kMarginLeft = 64;
constexpr int kMarginRight = 24;
constexpr int kMarginTop = 48;
constexpr int kMarginBottom = 56;

const char* kPalette[] = {"#4878b0", "#e07b39", "#5fa05a", "#b05f9c", "#a0a04a", "#d05050"};

std::string num(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.6g", v);
    return buf;
}

std::string px(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.2f", v);
    return buf;
}

std::string escape(const std::string& s) {
    std::string out;
    for (char c : s) {
        switch (c) {
            case '&': out += "&amp;"; break;
            case '<': out += "&lt;"; break;
            case '>': out += "&gt;"; break;
            default: out += c;
        }
    }
    return out;
}

struct Frame {
    double x_min, x_max, y_min, y_max;

    double sx(double x) const {
        double span = x_max - x_min;
        if (span == 0.0) span = 1.0;
        return kMarginLeft + (x - x_min) / span * (kWidth - kMarginLeft - kMarginRight);
    }
    double sy(double y) const {
        double span = y_max - y_min;
        if (span == 0.0) span = 1.0;
        return kHeight - kMarginBottom -
               (y - y_min) / span * (kHeight - kMarginTop - kMarginBottom);
    }
};

void open_doc(std::ostringstream& out, const std::string& title) {
    out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kWidth << "\" height=\""
        << kHeight << "\" viewBox=\"0 0 " << kWidth << " " << kHeight << "\">\n";
    out << "<rect width=\"" << kWidth << "\" height=\"" << kHeight << "\" fill=\"white\"/>\n";
    out << "<text x=\"" << kWidth / 2 << "\" y=\"24\" text-anchor=\"middle\" "
        << "font-family=\"sans-serif\" font-size=\"15\" font-weight=\"bold\">" << escape(title)
        << "</text>\n";
}

void axes(std::ostringstream& out, const Frame& f, const std::string& x_label,
          const std::string& y_label) {
    out << "<line x1=\"" << kMarginLeft << "\" y1=\"" << kHeight - kMarginBottom << "\" x2=\""
        << kWidth - kMarginRight << "\" y2=\"" << kHeight - kMarginBottom
        << "\" stroke=\"black\"/>\n";
    out << "<line x1=\"" << kMarginLeft << "\" y1=\"" << kMarginTop << "\" x2=\"" << kMarginLeft
        << "\" y2=\"" << kHeight - kMarginBottom << "\" stroke=\"black\"/>\n";
    for (int i = 0; i <= 4; ++i) {
        double ty = f.y_min + (f.y_max - f.y_min) * i / 4.0;
        double y = f.sy(ty);
        out << "<line x1=\"" << kMarginLeft - 4 << "\" y1=\"" << px(y) << "\" x2=\""
            << kMarginLeft << "\" y2=\"" << px(y) << "\" stroke=\"black\"/>\n";
        out << "<text x=\"" << kMarginLeft - 8 << "\" y=\"" << px(y + 4)
            << "\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"11\">" << num(ty)
            << "</text>\n";
    }
    if (!x_label.empty())
        out << "<text x=\"" << (kMarginLeft + kWidth - kMarginRight) / 2 << "\" y=\""
            << kHeight - 12 << "\" text-anchor=\"middle\" font-family=\"sans-serif\" "
            << "font-size=\"12\">" << escape(x_label) << "</text>\n";
    if (!y_label.empty())
        out << "<text x=\"16\" y=\"" << (kMarginTop + kHeight - kMarginBottom) / 2
            << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"12\" "
            << "transform=\"rotate(-90 16 " << (kMarginTop + kHeight - kMarginBottom) / 2
            << ")\">" << escape(y_label) << "</text>\n";
}

void legend(std::ostringstream& out, const std::vector<std::string>& labels) {
    double x = kMarginLeft + 8;
    for (size_t s = 0; s < labels.size(); ++s) {
        out << "<rect x=\"" << px(x) << "\" y=\"" << kMarginTop - 14 << "\" width=\"10\" "
            << "height=\"10\" fill=\"" << kPalette[s % 6] << "\"/>\n";
        out << "<text x=\"" << px(x + 14) << "\" y=\"" << kMarginTop - 5
            << "\" font-family=\"sans-serif\" font-size=\"11\">" << escape(labels[s])
            << "</text>\n";
        x += 18 + 7.0 * labels[s].size() + 16;
    }
}

}  // namespace

std::string histogram_pair(const std::vector<double>& edges,
                           const std::vector<double>& counts_a,
                           const std::vector<double>& counts_b,
                           const std::string& label_a, const std::string& label_b,
                           const std::string& title) {
    size_t n = counts_a.size();
    double y_max = 1.0;
    for (double c : counts_a) y_max = std::max(y_max, c);
    for (double c : counts_b) y_max = std::max(y_max, c);
    Frame f{edges.front(), edges.back(), 0.0, y_max * 1.05};

    std::ostringstream out;
    open_doc(out, title);
    axes(out, f, "target", "count");
    legend(out, {label_a, label_b});
    for (size_t b = 0; b < n; ++b) {
        double x0 = f.sx(edges[b]);
        double x1 = f.sx(edges[b + 1]);
        double w = (x1 - x0) * 0.42;
        double ya = f.sy(counts_a[b]);
        double yb = f.sy(counts_b[b]);
        out << "<rect x=\"" << px(x0 + 1) << "\" y=\"" << px(ya) << "\" width=\"" << px(w)
            << "\" height=\"" << px(f.sy(0) - ya) << "\" fill=\"" << kPalette[0] << "\"/>\n";
        out << "<rect x=\"" << px(x0 + 1 + w) << "\" y=\"" << px(yb) << "\" width=\"" << px(w)
            << "\" height=\"" << px(f.sy(0) - yb) << "\" fill=\"" << kPalette[1] << "\"/>\n";
    }
    // Bin edge labels.
    for (size_t b = 0; b < edges.size(); ++b) {
        double x = f.sx(edges[b]);
        out << "<text x=\"" << px(x) << "\" y=\"" << kHeight - kMarginBottom + 16
            << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"10\">"
            << num(edges[b]) << "</text>\n";
    }
    out << "</svg>\n";
    return out.str();
}

std::string grouped_bars(const std::vector<std::string>& categories,
                         const std::vector<std::pair<std::string, std::vector<double>>>& series,
                         const std::string& title, const std::string& y_label) {
    double y_max = 1e-9;
    for (const auto& [_, vals] : series)
        for (double v : vals) y_max = std::max(y_max, v);
    Frame f{0.0, static_cast<double>(categories.size()), 0.0, y_max * 1.05};

    std::ostringstream out;
    open_doc(out, title);
    axes(out, f, "", y_label);
    std::vector<std::string> labels;
    for (const auto& [name, _] : series) labels.push_back(name);
    legend(out, labels);

    double group_w = (kWidth - kMarginLeft - kMarginRight) / std::max<size_t>(1, categories.size());
    double bar_w = group_w * 0.8 / std::max<size_t>(1, series.size());
    for (size_t c = 0; c < categories.size(); ++c) {
        for (size_t s = 0; s < series.size(); ++s) {
            double v = c < series[s].second.size() ? series[s].second[c] : 0.0;
            double x = kMarginLeft + group_w * c + group_w * 0.1 + bar_w * s;
            double y = f.sy(v);
            out << "<rect x=\"" << px(x) << "\" y=\"" << px(y) << "\" width=\"" << px(bar_w - 2)
                << "\" height=\"" << px(f.sy(0) - y) << "\" fill=\"" << kPalette[s % 6]
                << "\"/>\n";
        }
        out << "<text x=\"" << px(kMarginLeft + group_w * (c + 0.5)) << "\" y=\""
            << kHeight - kMarginBottom + 16
            << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"10\">"
            << escape(categories[c]) << "</text>\n";
    }
    out << "</svg>\n";
    return out.str();
}

std::string line_chart(const std::vector<Series>& series, const std::string& title,
                       const std::string& x_label, const std::string& y_label) {
    double x_min = 1e300, x_max = -1e300, y_min = 1e300, y_max = -1e300;
    for (const auto& s : series) {
        for (double v : s.x) {
            x_min = std::min(x_min, v);
            x_max = std::max(x_max, v);
        }
        for (double v : s.y) {
            y_min = std::min(y_min, v);
            y_max = std::max(y_max, v);
        }
    }
    if (x_min > x_max) { x_min = 0; x_max = 1; y_min = 0; y_max = 1; }
    double pad = (y_max - y_min) * 0.08 + 1e-12;
    Frame f{x_min, x_max, y_min - pad, y_max + pad};

    std::ostringstream out;
    open_doc(out, title);
    axes(out, f, x_label, y_label);
    std::vector<std::string> labels;
    for (const auto& s : series) labels.push_back(s.label);
    legend(out, labels);

    for (size_t s = 0; s < series.size(); ++s) {
        const auto& ser = series[s];
        out << "<polyline fill=\"none\" stroke=\"" << kPalette[s % 6]
            << "\" stroke-width=\"2\" points=\"";
        for (size_t i = 0; i < ser.x.size(); ++i)
            out << px(f.sx(ser.x[i])) << "," << px(f.sy(ser.y[i])) << " ";
        out << "\"/>\n";
        for (size_t i = 0; i < ser.x.size(); ++i)
            out << "<circle cx=\"" << px(f.sx(ser.x[i])) << "\" cy=\"" << px(f.sy(ser.y[i]))
                << "\" r=\"3\" fill=\"" << kPalette[s % 6] << "\"/>\n";
    }
    // X ticks at series points of the first series.
    if (!series.empty()) {
        for (double xv : series[0].x) {
            out << "<text x=\"" << px(f.sx(xv)) << "\" y=\"" << kHeight - kMarginBottom + 16
                << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"10\">"
                << num(xv) << "</text>\n";
        }
    }
    out << "</svg>\n";
    return out.str();
}

std::string rank_table(const std::vector<std::string>& models,
                       const std::vector<std::vector<double>>& fold_metrics,
                       const std::vector<double>& mean_ranks, const std::string& title) {
    size_t n_folds = fold_metrics.empty() ? 0 : fold_metrics[0].size();
    int row_h = 24;
    int col_w = 78;
    int name_w = 170;
    int width = name_w + col_w * static_cast<int>(n_folds + 1) + 32;
    int height = 64 + row_h * static_cast<int>(models.size() + 1);

    std::ostringstream out;
    out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\""
        << height << "\">\n";
    out << "<rect width=\"" << width << "\" height=\"" << height << "\" fill=\"white\"/>\n";
    out << "<text x=\"" << width / 2 << "\" y=\"22\" text-anchor=\"middle\" "
        << "font-family=\"sans-serif\" font-size=\"14\" font-weight=\"bold\">" << escape(title)
        << "</text>\n";

    auto cell = [&](int col, int row, const std::string& text, bool bold) {
        int x = col == 0 ? 16 : name_w + (col - 1) * col_w + 16;
        int y = 48 + row * row_h;
        out << "<text x=\"" << x << "\" y=\"" << y << "\" font-family=\"sans-serif\" "
            << "font-size=\"12\"" << (bold ? " font-weight=\"bold\"" : "") << ">" << escape(text)
            << "</text>\n";
    };
    cell(0, 0, "model", true);
    for (size_t fIdx = 0; fIdx < n_folds; ++fIdx)
        cell(static_cast<int>(fIdx) + 1, 0, "fold " + std::to_string(fIdx), true);
    cell(static_cast<int>(n_folds) + 1, 0, "mean rank", true);
    for (size_t m = 0; m < models.size(); ++m) {
        cell(0, static_cast<int>(m) + 1, models[m], false);
        for (size_t fIdx = 0; fIdx < n_folds; ++fIdx)
            cell(static_cast<int>(fIdx) + 1, static_cast<int>(m) + 1,
                 num(fold_metrics[m][fIdx]), false);
        cell(static_cast<int>(n_folds) + 1, static_cast<int>(m) + 1, num(mean_ranks[m]), false);
    }
    out << "</svg>\n";
    return out.str();
}

}  // namespace svg
}  // namespace hrdmil
