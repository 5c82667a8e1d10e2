#pragma once

#include <algorithm>
#include <cmath>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "mrms/common.hpp"

namespace mrms {

// Per-resample metric bundle, one journal line.
struct RunRecord {
    std::string model;
    std::string dataset;
    int resample = 0;
    double acc = 0.0;
    double f1 = 0.0;
    std::optional<double> auc;  // missing when undefined (single-class truth)
    double nll = 0.0;
    double train_s = 0.0;
    double test_s = 0.0;
    int epochs = 0;
    int64_t params = 0;
};

inline double accuracy(const std::vector<int>& pred, const std::vector<int>& truth) {
    require(!pred.empty(), "accuracy: empty input");
    require(pred.size() == truth.size(), "accuracy: length mismatch");
    std::size_t hits = 0;
    for (std::size_t i = 0; i < pred.size(); ++i)
        if (pred[i] == truth[i]) ++hits;
    return static_cast<double>(hits) / static_cast<double>(pred.size());
}

// Unweighted mean over all C classes of per-class F1. A class with zero
// predicted positives and zero true positives contributes F1 = 0.
inline double macro_f1(const std::vector<int>& pred, const std::vector<int>& truth, int C) {
    require(C >= 2, "macro_f1: need C >= 2");
    require(pred.size() == truth.size(), "macro_f1: length mismatch");
    double total = 0.0;
    for (int c = 0; c < C; ++c) {
        std::size_t tp = 0, fp = 0, fn = 0;
        for (std::size_t i = 0; i < pred.size(); ++i) {
            if (pred[i] == c && truth[i] == c) ++tp;
            else if (pred[i] == c) ++fp;
            else if (truth[i] == c) ++fn;
        }
        const double denom = 2.0 * tp + fp + fn;
        total += denom > 0.0 ? 2.0 * tp / denom : 0.0;
    }
    return total / C;
}

namespace metrics_detail {

// Rank-statistic AUC with ties counted 1/2, via mid-ranks:
// AUC = (sum of positive ranks - P(P+1)/2) / (P * N).
inline std::optional<double> binary_auc(const std::vector<double>& score,
                                        const std::vector<uint8_t>& positive) {
    const std::size_t n = score.size();
    std::size_t p_count = 0;
    for (uint8_t p : positive) p_count += p;
    const std::size_t n_count = n - p_count;
    if (p_count == 0 || n_count == 0) return std::nullopt;

    std::vector<std::size_t> order(n);
    for (std::size_t i = 0; i < n; ++i) order[i] = i;
    std::sort(order.begin(), order.end(),
              [&](std::size_t a, std::size_t b) { return score[a] < score[b]; });
    std::vector<double> rank(n);
    std::size_t i = 0;
    while (i < n) {
        std::size_t j = i;
        while (j + 1 < n && score[order[j + 1]] == score[order[i]]) ++j;
        const double mid = 0.5 * static_cast<double>(i + j) + 1.0;  // 1-based mid-rank
        for (std::size_t t = i; t <= j; ++t) rank[order[t]] = mid;
        i = j + 1;
    }
    double pos_rank_sum = 0.0;
    for (std::size_t t = 0; t < n; ++t)
        if (positive[t]) pos_rank_sum += rank[t];
    const double p = static_cast<double>(p_count);
    return (pos_rank_sum - p * (p + 1.0) / 2.0) / (p * static_cast<double>(n_count));
}

}  // namespace metrics_detail

// Binary: rank AUC on the class-1 probability. Multiclass: unweighted
// one-vs-rest macro average over classes present in the truth. Undefined
// (single-class truth in the binary case, or no resolvable class) reports
// missing.
inline std::optional<double> auc(const std::vector<double>& scores, const std::vector<int>& truth,
                                 int C) {
    require(C >= 2, "auc: need C >= 2");
    const std::size_t B = truth.size();
    require(scores.size() == B * static_cast<std::size_t>(C), "auc: scores must be B x C");
    for (std::size_t b = 0; b < B; ++b) {
        double s = 0.0;
        for (int c = 0; c < C; ++c) s += scores[b * C + c];
        require(std::abs(s - 1.0) <= 1e-6, "auc: probability row " + std::to_string(b) +
                                               " does not sum to 1");
    }
    if (C == 2) {
        std::vector<double> s1(B);
        std::vector<uint8_t> pos(B);
        for (std::size_t b = 0; b < B; ++b) {
            s1[b] = scores[b * 2 + 1];
            pos[b] = truth[b] == 1 ? 1 : 0;
        }
        return metrics_detail::binary_auc(s1, pos);
    }
    double total = 0.0;
    int used = 0;
    for (int c = 0; c < C; ++c) {
        std::vector<double> sc(B);
        std::vector<uint8_t> pos(B);
        for (std::size_t b = 0; b < B; ++b) {
            sc[b] = scores[b * C + c];
            pos[b] = truth[b] == c ? 1 : 0;
        }
        auto a = metrics_detail::binary_auc(sc, pos);
        if (a.has_value()) {
            total += *a;
            ++used;
        }
    }
    if (used == 0) return std::nullopt;
    return total / used;
}

// Mean of -ln(max(p_true, 1e-12)); the floor keeps saturated wrong
// predictions finite.
inline double nll(const std::vector<double>& probs, const std::vector<int>& truth, int C) {
    const std::size_t B = truth.size();
    require(B >= 1, "nll: empty input");
    require(probs.size() == B * static_cast<std::size_t>(C), "nll: probs must be B x C");
    for (std::size_t b = 0; b < B; ++b) {
        double s = 0.0;
        for (int c = 0; c < C; ++c) s += probs[b * C + c];
        require(std::abs(s - 1.0) <= 1e-6, "nll: probability row " + std::to_string(b) +
                                               " does not sum to 1");
        require(truth[b] >= 0 && truth[b] < C, "nll: label out of range");
    }
    double total = 0.0;
    for (std::size_t b = 0; b < B; ++b)
        total += -std::log(std::max(probs[b * C + truth[b]], 1e-12));
    return total / static_cast<double>(B);
}

// ---------------------------------------------------------------------------
// Two-stage aggregation: mean across resamples per (model, dataset), then an
// unweighted mean across datasets per model.

struct AggregateCell {
    double acc = 0.0;
    double f1 = 0.0;
    std::optional<double> auc;
    double nll = 0.0;
    double train_s = 0.0;
    double test_s = 0.0;
    double epochs = 0.0;
    double params = 0.0;
};

// Journal metric names usable for ranking and Pareto axes.
inline const std::vector<std::string>& metric_names() {
    static const std::vector<std::string> names = {"acc",     "f1",     "auc",    "nll",
                                                   "train_s", "test_s", "epochs", "params"};
    return names;
}

inline bool metric_lower_is_better(const std::string& name) {
    return name == "nll" || name == "train_s" || name == "test_s" || name == "epochs" ||
           name == "params";
}

inline double cell_metric(const AggregateCell& cell, const std::string& name) {
    if (name == "acc") return cell.acc;
    if (name == "f1") return cell.f1;
    if (name == "auc") {
        require_data(cell.auc.has_value(), "metric auc is missing (undefined on some runs)");
        return *cell.auc;
    }
    if (name == "nll") return cell.nll;
    if (name == "train_s") return cell.train_s;
    if (name == "test_s") return cell.test_s;
    if (name == "epochs") return cell.epochs;
    if (name == "params") return cell.params;
    throw std::invalid_argument("unknown metric '" + name +
                                "' (valid: acc, f1, auc, nll, train_s, test_s, epochs, params)");
}

struct AggregateTable {
    std::vector<std::string> models;    // sorted
    std::vector<std::string> datasets;  // sorted
    // per (model, dataset) mean over resamples
    std::map<std::pair<std::string, std::string>, AggregateCell> per_dataset;
    // per model unweighted mean over datasets
    std::map<std::string, AggregateCell> overall;
};

inline AggregateTable aggregate(const std::vector<RunRecord>& records) {
    require_data(!records.empty(), "aggregate: no records");

    std::set<std::string> model_set, dataset_set;
    std::set<int> resample_set;
    std::map<std::tuple<std::string, std::string, int>, const RunRecord*> by_key;
    for (const auto& r : records) {
        model_set.insert(r.model);
        dataset_set.insert(r.dataset);
        resample_set.insert(r.resample);
        auto key = std::make_tuple(r.model, r.dataset, r.resample);
        require_data(by_key.emplace(key, &r).second,
                     "aggregate: duplicate record for (" + r.model + ", " + r.dataset + ", " +
                         std::to_string(r.resample) + ")");
    }

    // complete grid across models x datasets x resamples
    std::string missing;
    int missing_count = 0;
    for (const auto& m : model_set)
        for (const auto& d : dataset_set)
            for (int r : resample_set)
                if (!by_key.count(std::make_tuple(m, d, r))) {
                    ++missing_count;
                    if (missing_count <= 20)
                        missing += "\n  (" + m + ", " + d + ", " + std::to_string(r) + ")";
                }
    require_data(missing_count == 0, "aggregate: incomplete grid, missing " +
                                         std::to_string(missing_count) + " key(s):" + missing);

    AggregateTable table;
    table.models.assign(model_set.begin(), model_set.end());
    table.datasets.assign(dataset_set.begin(), dataset_set.end());

    for (const auto& m : table.models) {
        for (const auto& d : table.datasets) {
            AggregateCell cell;
            double auc_sum = 0.0;
            int auc_n = 0;
            int n = 0;
            for (int r : resample_set) {
                const RunRecord* rec = by_key[std::make_tuple(m, d, r)];
                cell.acc += rec->acc;
                cell.f1 += rec->f1;
                cell.nll += rec->nll;
                cell.train_s += rec->train_s;
                cell.test_s += rec->test_s;
                cell.epochs += rec->epochs;
                cell.params += static_cast<double>(rec->params);
                if (rec->auc.has_value()) {
                    auc_sum += *rec->auc;
                    ++auc_n;
                }
                ++n;
            }
            cell.acc /= n;
            cell.f1 /= n;
            cell.nll /= n;
            cell.train_s /= n;
            cell.test_s /= n;
            cell.epochs /= n;
            cell.params /= n;
            if (auc_n > 0) cell.auc = auc_sum / auc_n;
            table.per_dataset[{m, d}] = cell;
        }
        AggregateCell overall;
        double auc_sum = 0.0;
        int auc_n = 0;
        for (const auto& d : table.datasets) {
            const AggregateCell& cell = table.per_dataset[{m, d}];
            overall.acc += cell.acc;
            overall.f1 += cell.f1;
            overall.nll += cell.nll;
            overall.train_s += cell.train_s;
            overall.test_s += cell.test_s;
            overall.epochs += cell.epochs;
            overall.params += cell.params;
            if (cell.auc.has_value()) {
                auc_sum += *cell.auc;
                ++auc_n;
            }
        }
        const double nd = static_cast<double>(table.datasets.size());
        overall.acc /= nd;
        overall.f1 /= nd;
        overall.nll /= nd;
        overall.train_s /= nd;
        overall.test_s /= nd;
        overall.epochs /= nd;
        overall.params /= nd;
        if (auc_n > 0) overall.auc = auc_sum / auc_n;
        table.overall[m] = overall;
    }
    return table;
}

}  // namespace mrms
