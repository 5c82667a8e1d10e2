#pragma once

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "mrms/common.hpp"
#include "mrms/stats.hpp"

namespace mrms::svg {

inline std::string escape(const std::string& s) {
    std::string out;
    for (char c : s) {
        switch (c) {
            case '&': out += "&amp;"; break;
            case '<': out += "&lt;"; break;
            case '>': out += "&gt;"; break;
            case '"': out += "&quot;"; break;
            default: out += c;
        }
    }
    return out;
}

inline std::string num(double v) { return format_fixed(v, 2); }

namespace detail {

inline void open_doc(std::string& out, int w, int h) {
    out += "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n";
    out += "<svg xmlns=\"http://www.w3.org/2000/svg\" version=\"1.1\" width=\"" +
           std::to_string(w) + "\" height=\"" + std::to_string(h) + "\" viewBox=\"0 0 " +
           std::to_string(w) + " " + std::to_string(h) + "\">\n";
    out += "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
}

inline void text(std::string& out, double x, double y, const std::string& s,
                 const std::string& anchor = "start", int size = 12) {
    out += "<text x=\"" + num(x) + "\" y=\"" + num(y) + "\" font-family=\"sans-serif\" font-size=\"" +
           std::to_string(size) + "\" text-anchor=\"" + anchor + "\">" + escape(s) + "</text>\n";
}

inline void line(std::string& out, double x1, double y1, double x2, double y2,
                 const std::string& stroke = "black", double width = 1.0,
                 const std::string& extra = "") {
    out += "<line x1=\"" + num(x1) + "\" y1=\"" + num(y1) + "\" x2=\"" + num(x2) + "\" y2=\"" +
           num(y2) + "\" stroke=\"" + stroke + "\" stroke-width=\"" + num(width) + "\"" + extra +
           "/>\n";
}

}  // namespace detail

// Critical-difference diagram: a number-line axis spanning [1, k] with one
// labeled tick per model at its average rank and a horizontal bar over every
// maximal group of mutually non-significant models. Layout is deterministic:
// models are ordered by (rank, label).
inline std::string cd_diagram(const RankingReport& report, const std::string& title = "") {
    const std::size_t k = report.models.size();
    require(k >= 2, "cd_diagram: need at least 2 models");

    std::vector<std::size_t> order(k);
    for (std::size_t i = 0; i < k; ++i) order[i] = i;
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        if (report.avg_ranks[a] != report.avg_ranks[b])
            return report.avg_ranks[a] < report.avg_ranks[b];
        return report.models[a] < report.models[b];
    });

    const int margin_left = 150, margin_right = 150, axis_y = 70;
    const int plot_w = 420;
    const int width = margin_left + plot_w + margin_right;
    auto x_of = [&](double rank) {
        return margin_left + (rank - 1.0) / (static_cast<double>(k) - 1.0) * plot_w;
    };

    const int bar_h = 7;
    const int bars_bottom = axis_y + 12 + static_cast<int>(report.cliques.size()) * bar_h;
    const int label_row = 18;
    const std::size_t n_left = (k + 1) / 2;
    const std::size_t rows = std::max(n_left, k - n_left);
    const int height = bars_bottom + 18 + static_cast<int>(rows) * label_row + 20;

    std::string out;
    detail::open_doc(out, width, height);
    if (!title.empty()) detail::text(out, width / 2.0, 22, title, "middle", 14);

    std::string stats_line = "Friedman chi2=" + format_fixed(report.friedman.chi2, 4) +
                             "  p=" + format_double(report.friedman.p_value) +
                             "  CD=" + format_fixed(report.cd, 4) + " (alpha=" +
                             format_double(report.alpha) + ", N=" +
                             std::to_string(report.n_datasets) + ")";
    detail::text(out, width / 2.0, 40, stats_line, "middle", 11);

    // axis with integer ticks
    detail::line(out, x_of(1.0), axis_y, x_of(static_cast<double>(k)), axis_y, "black", 1.5);
    for (std::size_t i = 1; i <= k; ++i) {
        const double x = x_of(static_cast<double>(i));
        detail::line(out, x, axis_y - 5, x, axis_y, "black", 1.0);
        detail::text(out, x, axis_y - 9, std::to_string(i), "middle", 10);
    }

    // CD ruler above the axis, anchored at rank 1
    if (report.cd < static_cast<double>(k) - 1.0) {
        detail::line(out, x_of(1.0), axis_y - 22, x_of(1.0 + report.cd), axis_y - 22, "black", 1.0);
        detail::line(out, x_of(1.0), axis_y - 26, x_of(1.0), axis_y - 18, "black", 1.0);
        detail::line(out, x_of(1.0 + report.cd), axis_y - 26, x_of(1.0 + report.cd), axis_y - 18,
                     "black", 1.0);
        detail::text(out, x_of(1.0 + report.cd / 2.0), axis_y - 28, "CD", "middle", 10);
    }

    // clique bars
    for (std::size_t ci = 0; ci < report.cliques.size(); ++ci) {
        double lo = 1e300, hi = -1e300;
        for (std::size_t idx : report.cliques[ci]) {
            lo = std::min(lo, report.avg_ranks[idx]);
            hi = std::max(hi, report.avg_ranks[idx]);
        }
        const double y = axis_y + 12 + static_cast<double>(ci) * bar_h;
        detail::line(out, x_of(lo) - 3, y, x_of(hi) + 3, y, "black", 3.5);
    }

    // model labels: best half on the left, rest on the right
    for (std::size_t pos = 0; pos < k; ++pos) {
        const std::size_t idx = order[pos];
        const double rx = x_of(report.avg_ranks[idx]);
        const bool left = pos < n_left;
        const std::size_t row = left ? pos : (k - 1 - pos);
        const double ly = bars_bottom + 18 + static_cast<double>(row) * label_row;
        const double label_x = left ? margin_left - 12 : margin_left + plot_w + 12;
        detail::line(out, rx, axis_y, rx, ly - 4, "gray", 1.0);
        detail::line(out, rx, ly - 4, label_x + (left ? 4 : -4), ly - 4, "gray", 1.0);
        const std::string label =
            report.models[idx] + " (" + format_fixed(report.avg_ranks[idx], 4) + ")";
        detail::text(out, label_x, ly, label, left ? "end" : "start", 12);
    }

    out += "</svg>\n";
    return out;
}

// One point per model on a cost/score plane; marker radius encodes `size`
// (AUC) and fill encodes `color` (NLL, low = blue, high = red). The dashed
// polyline joins the Pareto-optimal points in ascending cost.
struct ParetoPlotPoint {
    std::string label;
    double cost = 0.0;
    double score = 0.0;
    double size = 0.0;
    double color = 0.0;
};

inline std::string pareto_plot(const std::vector<ParetoPlotPoint>& points,
                               const std::vector<std::size_t>& frontier,
                               const std::string& cost_label, const std::string& score_label) {
    require(!points.empty(), "pareto_plot: no points");

    const int ml = 80, mr = 60, mt = 40, mb = 60;
    const int pw = 440, ph = 320;
    const int width = ml + pw + mr, height = mt + ph + mb;

    auto minmax = [](const std::vector<ParetoPlotPoint>& ps, auto get) {
        double lo = 1e300, hi = -1e300;
        for (const auto& p : ps) {
            lo = std::min(lo, get(p));
            hi = std::max(hi, get(p));
        }
        if (hi - lo < 1e-12) {  // degenerate span, pad symmetrically
            const double pad = std::max(1e-3, std::abs(hi) * 0.1);
            lo -= pad;
            hi += pad;
        } else {
            const double pad = (hi - lo) * 0.08;
            lo -= pad;
            hi += pad;
        }
        return std::pair<double, double>(lo, hi);
    };
    const auto [cost_lo, cost_hi] = minmax(points, [](const auto& p) { return p.cost; });
    const auto [score_lo, score_hi] = minmax(points, [](const auto& p) { return p.score; });
    const auto [size_lo, size_hi] = minmax(points, [](const auto& p) { return p.size; });
    const auto [color_lo, color_hi] = minmax(points, [](const auto& p) { return p.color; });

    auto x_of = [&](double c) { return ml + (c - cost_lo) / (cost_hi - cost_lo) * pw; };
    auto y_of = [&](double s) { return mt + ph - (s - score_lo) / (score_hi - score_lo) * ph; };

    std::string out;
    detail::open_doc(out, width, height);

    // axes with four ticks each
    detail::line(out, ml, mt + ph, ml + pw, mt + ph, "black", 1.2);
    detail::line(out, ml, mt, ml, mt + ph, "black", 1.2);
    for (int i = 0; i <= 3; ++i) {
        const double c = cost_lo + (cost_hi - cost_lo) * i / 3.0;
        const double s = score_lo + (score_hi - score_lo) * i / 3.0;
        detail::line(out, x_of(c), mt + ph, x_of(c), mt + ph + 5, "black", 1.0);
        detail::text(out, x_of(c), mt + ph + 18, format_fixed(c, 3), "middle", 10);
        detail::line(out, ml - 5, y_of(s), ml, y_of(s), "black", 1.0);
        detail::text(out, ml - 8, y_of(s) + 4, format_fixed(s, 3), "end", 10);
    }
    detail::text(out, ml + pw / 2.0, mt + ph + 40, cost_label, "middle", 12);
    out += "<text x=\"" + num(18) + "\" y=\"" + num(mt + ph / 2.0) +
           "\" font-family=\"sans-serif\" font-size=\"12\" text-anchor=\"middle\" transform=\"rotate(-90 " +
           num(18) + " " + num(mt + ph / 2.0) + ")\">" + escape(score_label) + "</text>\n";

    // dashed frontier polyline
    if (frontier.size() >= 2) {
        std::string pts;
        for (std::size_t idx : frontier) {
            if (!pts.empty()) pts += " ";
            pts += num(x_of(points[idx].cost)) + "," + num(y_of(points[idx].score));
        }
        out += "<polyline points=\"" + pts +
               "\" fill=\"none\" stroke=\"black\" stroke-width=\"1.2\" stroke-dasharray=\"6,4\"/>\n";
    }

    // markers
    for (const auto& p : points) {
        const double tsize = (p.size - size_lo) / (size_hi - size_lo);
        const double tcolor = (p.color - color_lo) / (color_hi - color_lo);
        const double r = 5.0 + 9.0 * std::clamp(tsize, 0.0, 1.0);
        const double tc = std::clamp(tcolor, 0.0, 1.0);
        const int red = static_cast<int>(std::lround(44 + tc * (215 - 44)));
        const int green = static_cast<int>(std::lround(123 + tc * (25 - 123)));
        const int blue = static_cast<int>(std::lround(182 + tc * (28 - 182)));
        out += "<circle cx=\"" + num(x_of(p.cost)) + "\" cy=\"" + num(y_of(p.score)) + "\" r=\"" +
               num(r) + "\" fill=\"rgb(" + std::to_string(red) + "," + std::to_string(green) + "," +
               std::to_string(blue) + ")\" fill-opacity=\"0.85\" stroke=\"black\"/>\n";
        detail::text(out, x_of(p.cost) + r + 4, y_of(p.score) - 4, p.label, "start", 11);
    }

    out += "</svg>\n";
    return out;
}

}  // namespace mrms::svg
