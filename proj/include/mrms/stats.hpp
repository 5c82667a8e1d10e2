#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include "mrms/common.hpp"
#include "mrms/prob.hpp"

namespace mrms {

// N datasets x k models of scores, higher = better.
struct ScoreMatrix {
    std::vector<std::string> models;    // k columns
    std::vector<std::string> datasets;  // N rows
    std::vector<double> scores;         // row-major N x k

    std::size_t n_datasets() const { return datasets.size(); }
    std::size_t n_models() const { return models.size(); }
    double at(std::size_t row, std::size_t col) const { return scores[row * models.size() + col]; }

    void validate() const {
        require(models.size() >= 2, "ScoreMatrix: need k >= 2 models");
        require(datasets.size() >= 2, "ScoreMatrix: need N >= 2 datasets");
        require(scores.size() == models.size() * datasets.size(),
                "ScoreMatrix: score count does not match labels");
        require(all_finite(scores), "ScoreMatrix: non-finite score");
    }
};

struct FriedmanResult {
    double chi2 = 0.0;
    double p_value = 1.0;
    // Iman-Davenport F correction, offered alongside the plain chi-square form
    double f_stat = 0.0;
    double f_p_value = 1.0;
};

struct RankingReport {
    std::vector<std::string> models;
    std::vector<double> avg_ranks;
    FriedmanResult friedman;
    double cd = 0.0;
    double alpha = 0.05;
    std::size_t n_datasets = 0;
    // maximal sets of mutually non-significant models (indices into models),
    // cliques of size >= 2 only
    std::vector<std::vector<std::size_t>> cliques;
};

// Within each dataset row, rank 1 = best score; ties get the mean of the
// positions they occupy. Returns per-model column means.
inline std::vector<double> average_ranks(const ScoreMatrix& m) {
    m.validate();
    const std::size_t k = m.n_models();
    std::vector<double> avg(k, 0.0);
    std::vector<std::size_t> order(k);
    for (std::size_t row = 0; row < m.n_datasets(); ++row) {
        for (std::size_t j = 0; j < k; ++j) order[j] = j;
        std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
            return m.at(row, a) > m.at(row, b);  // descending: best first
        });
        std::size_t i = 0;
        while (i < k) {
            std::size_t j = i;
            while (j + 1 < k && m.at(row, order[j + 1]) == m.at(row, order[i])) ++j;
            const double mid_rank = 0.5 * static_cast<double>(i + j) + 1.0;
            for (std::size_t t = i; t <= j; ++t) avg[order[t]] += mid_rank;
            i = j + 1;
        }
    }
    for (double& v : avg) v /= static_cast<double>(m.n_datasets());
    return avg;
}

// chi2_F = 12N/(k(k+1)) * [sum_j Rbar_j^2 - k(k+1)^2/4], p from chi-square
// with k-1 dof. The Iman-Davenport corrected statistic is reported alongside.
inline FriedmanResult friedman(const ScoreMatrix& m) {
    m.validate();
    const double k = static_cast<double>(m.n_models());
    const double n = static_cast<double>(m.n_datasets());
    const std::vector<double> ranks = average_ranks(m);
    double sum_sq = 0.0;
    for (double r : ranks) sum_sq += r * r;
    FriedmanResult res;
    res.chi2 = 12.0 * n / (k * (k + 1.0)) * (sum_sq - k * (k + 1.0) * (k + 1.0) / 4.0);
    if (res.chi2 < 0.0) res.chi2 = 0.0;  // guard tiny negative round-off on all-tied input
    res.p_value = prob::chi2_sf(res.chi2, k - 1.0);

    const double denom = n * (k - 1.0) - res.chi2;
    if (denom <= 0.0) {
        res.f_stat = std::numeric_limits<double>::infinity();
        res.f_p_value = 0.0;
    } else {
        res.f_stat = (n - 1.0) * res.chi2 / denom;
        res.f_p_value = prob::f_sf(res.f_stat, k - 1.0, (k - 1.0) * (n - 1.0));
    }
    return res;
}

// Critical values q_alpha for the Nemenyi test (two-tailed studentized range
// over sqrt(2)), k = 2..10.
inline double nemenyi_q(int k, double alpha) {
    static const double q05[] = {1.960, 2.343, 2.569, 2.728, 2.850, 2.949, 3.031, 3.102, 3.164};
    static const double q10[] = {1.645, 2.052, 2.291, 2.459, 2.589, 2.693, 2.780, 2.855, 2.920};
    require(k >= 2 && k <= 10, "nemenyi: k must be in [2, 10]");
    if (alpha == 0.05) return q05[k - 2];
    if (alpha == 0.10) return q10[k - 2];
    throw std::invalid_argument("nemenyi: alpha must be 0.05 or 0.10");
}

// CD = q_alpha * sqrt(k(k+1) / (6N)).
inline double nemenyi_cd(int k, std::size_t n_datasets, double alpha = 0.05) {
    require(n_datasets >= 1, "nemenyi_cd: need N >= 1");
    const double q = nemenyi_q(k, alpha);
    const double kk = static_cast<double>(k);
    return q * std::sqrt(kk * (kk + 1.0) / (6.0 * static_cast<double>(n_datasets)));
}

// Maximal groups of models whose pairwise average-rank differences are all
// below cd. On a line these are maximal windows in rank order; windows
// contained in another are dropped. Only groups of >= 2 models are reported.
inline std::vector<std::vector<std::size_t>> rank_cliques(const std::vector<double>& ranks,
                                                          double cd) {
    const std::size_t k = ranks.size();
    std::vector<std::size_t> order(k);
    for (std::size_t i = 0; i < k; ++i) order[i] = i;
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        if (ranks[a] != ranks[b]) return ranks[a] < ranks[b];
        return a < b;
    });
    std::vector<std::vector<std::size_t>> cliques;
    std::size_t prev_end = 0;
    for (std::size_t start = 0; start < k; ++start) {
        std::size_t end = start;
        while (end + 1 < k && ranks[order[end + 1]] - ranks[order[start]] < cd) ++end;
        if (end > start && (cliques.empty() || end > prev_end)) {
            std::vector<std::size_t> clique(order.begin() + start, order.begin() + end + 1);
            cliques.push_back(std::move(clique));
            prev_end = end;
        }
    }
    return cliques;
}

inline RankingReport ranking_report(const ScoreMatrix& m, double alpha = 0.05) {
    RankingReport report;
    report.models = m.models;
    report.avg_ranks = average_ranks(m);
    report.friedman = friedman(m);
    report.alpha = alpha;
    report.n_datasets = m.n_datasets();
    report.cd = nemenyi_cd(static_cast<int>(m.n_models()), m.n_datasets(), alpha);
    report.cliques = rank_cliques(report.avg_ranks, report.cd);
    return report;
}

// ---------------------------------------------------------------------------
// Pairwise multi-comparison matrix

struct PairwiseComparison {
    std::size_t wins = 0;
    std::size_t ties = 0;
    std::size_t losses = 0;
    double mean_diff = 0.0;
};

// For every ordered pair (i, j): wins/ties/losses of model i over model j
// across datasets and the mean score difference. Diagonal cells are unused.
inline std::vector<PairwiseComparison> multi_comparison_matrix(const ScoreMatrix& m) {
    m.validate();
    const std::size_t k = m.n_models();
    std::vector<PairwiseComparison> cells(k * k);
    for (std::size_t i = 0; i < k; ++i)
        for (std::size_t j = 0; j < k; ++j) {
            if (i == j) continue;
            PairwiseComparison& c = cells[i * k + j];
            for (std::size_t row = 0; row < m.n_datasets(); ++row) {
                const double a = m.at(row, i), b = m.at(row, j);
                if (a > b) ++c.wins;
                else if (a < b) ++c.losses;
                else ++c.ties;
                c.mean_diff += a - b;
            }
            c.mean_diff /= static_cast<double>(m.n_datasets());
        }
    return cells;
}

// ---------------------------------------------------------------------------
// Pareto frontier: cost minimized, score maximized.

struct ParetoPoint {
    double cost = 0.0;
    double score = 0.0;
};

// Indices of non-dominated points ordered by ascending cost. A point is
// dominated when another has cost <= and score >= with at least one strict;
// exact duplicates are therefore all retained. Sorted sweep, O(n log n).
inline std::vector<std::size_t> pareto_frontier(const std::vector<ParetoPoint>& points) {
    require(!points.empty(), "pareto_frontier: no points");
    const std::size_t n = points.size();
    std::vector<std::size_t> order(n);
    for (std::size_t i = 0; i < n; ++i) order[i] = i;
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        if (points[a].cost != points[b].cost) return points[a].cost < points[b].cost;
        if (points[a].score != points[b].score) return points[a].score > points[b].score;
        return a < b;
    });

    std::vector<std::size_t> frontier;
    double best_score_strictly_cheaper = -std::numeric_limits<double>::infinity();
    std::size_t i = 0;
    while (i < n) {
        // group of equal cost
        std::size_t j = i;
        while (j + 1 < n && points[order[j + 1]].cost == points[order[i]].cost) ++j;
        const double group_best = points[order[i]].score;  // sorted descending within group
        for (std::size_t t = i; t <= j; ++t) {
            const ParetoPoint& p = points[order[t]];
            const bool dominated_cheaper = best_score_strictly_cheaper >= p.score;
            const bool dominated_same_cost = p.score < group_best;
            if (!dominated_cheaper && !dominated_same_cost) frontier.push_back(order[t]);
        }
        best_score_strictly_cheaper = std::max(best_score_strictly_cheaper, group_best);
        i = j + 1;
    }
    // ascending cost; equal-cost survivors keep input order for determinism
    std::stable_sort(frontier.begin(), frontier.end(), [&](std::size_t a, std::size_t b) {
        if (points[a].cost != points[b].cost) return points[a].cost < points[b].cost;
        return a < b;
    });
    return frontier;
}

}  // namespace mrms
