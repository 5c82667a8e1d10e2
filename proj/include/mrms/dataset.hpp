#pragma once

#include <algorithm>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "mrms/common.hpp"
#include "mrms/representations.hpp"

namespace mrms {

// A fixed-length univariate dataset with contiguous class labels in [0, C).
struct Dataset {
    std::string name;
    std::vector<Series> series;
    int num_classes = 0;
    std::size_t length = 0;
    // Set when the dataset came from a TRAIN/TEST file pair: the first
    // `original_train_count` series are the original training partition.
    std::optional<std::size_t> original_train_count;

    std::size_t size() const { return series.size(); }

    void validate() const {
        require(num_classes >= 2, "Dataset '" + name + "': need at least 2 classes");
        std::vector<std::size_t> per_class(num_classes, 0);
        for (const auto& s : series) {
            require(s.length() == length, "Dataset '" + name + "': non-uniform series length");
            require(s.label >= 0 && s.label < num_classes,
                    "Dataset '" + name + "': label out of range");
            per_class[s.label]++;
        }
        for (int c = 0; c < num_classes; ++c)
            require(per_class[c] >= 2, "Dataset '" + name + "': class " + std::to_string(c) +
                                           " has fewer than 2 samples");
    }
};

// One stratified train/test split.
struct ResamplePlan {
    int resample_id = 0;
    std::vector<std::size_t> train_indices;
    std::vector<std::size_t> test_indices;

    void validate(const Dataset& ds) const {
        require_data(!train_indices.empty(), plan_tag() + ": empty train set");
        require_data(!test_indices.empty(), plan_tag() + ": empty test set");
        std::set<std::size_t> seen;
        for (auto i : train_indices) {
            require_data(i < ds.size(), plan_tag() + ": train index " + std::to_string(i) +
                                            " out of range for N=" + std::to_string(ds.size()));
            require_data(seen.insert(i).second,
                         plan_tag() + ": duplicate train index " + std::to_string(i));
        }
        for (auto i : test_indices) {
            require_data(i < ds.size(), plan_tag() + ": test index " + std::to_string(i) +
                                            " out of range for N=" + std::to_string(ds.size()));
            require_data(seen.insert(i).second, plan_tag() + ": index " + std::to_string(i) +
                                                    " appears in both train and test");
        }
        std::vector<bool> class_in_train(ds.num_classes, false);
        for (auto i : train_indices) class_in_train[ds.series[i].label] = true;
        for (int c = 0; c < ds.num_classes; ++c)
            require_data(class_in_train[c],
                         plan_tag() + ": class " + std::to_string(c) + " missing from train");
    }

private:
    std::string plan_tag() const { return "resample " + std::to_string(resample_id); }
};

namespace tsv_detail {

inline std::vector<std::string> split_tabs(const std::string& line) {
    std::vector<std::string> fields;
    std::size_t start = 0;
    while (true) {
        auto tab = line.find('\t', start);
        if (tab == std::string::npos) {
            fields.push_back(line.substr(start));
            break;
        }
        fields.push_back(line.substr(start, tab - start));
        start = tab + 1;
    }
    return fields;
}

struct RawRows {
    std::vector<long> labels;
    std::vector<std::vector<double>> values;
    std::size_t length = 0;
};

// Parse one TSV file without label remapping so file pairs can be remapped
// jointly.
inline void parse_tsv_into(const std::string& path, RawRows& rows) {
    std::ifstream in(path);
    require_data(in.good(), "load_tsv: cannot open " + path);
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        auto fields = split_tabs(line);
        require_data(fields.size() >= 2,
                     path + ":" + std::to_string(line_no) + ": expected label and values");
        std::vector<double> vals;
        vals.reserve(fields.size() - 1);
        try {
            std::size_t pos = 0;
            long lbl = std::stol(fields[0], &pos);
            require_data(pos == fields[0].size(),
                         path + ":" + std::to_string(line_no) + ": label '" + fields[0] +
                             "' is not an integer");
            for (std::size_t i = 1; i < fields.size(); ++i) {
                double v = std::stod(fields[i], &pos);
                require_data(pos == fields[i].size(), path + ":" + std::to_string(line_no) +
                                                          ": field '" + fields[i] +
                                                          "' is not numeric");
                require_data(std::isfinite(v),
                             path + ":" + std::to_string(line_no) + ": non-finite value");
                vals.push_back(v);
            }
            rows.labels.push_back(lbl);
        } catch (const std::invalid_argument&) {
            throw DataError(path + ":" + std::to_string(line_no) + ": non-numeric field");
        } catch (const std::out_of_range&) {
            throw DataError(path + ":" + std::to_string(line_no) + ": numeric field out of range");
        }
        if (rows.values.empty()) {
            rows.length = vals.size();
        } else {
            require_data(vals.size() == rows.length,
                         path + ":" + std::to_string(line_no) + ": row length " +
                             std::to_string(vals.size()) + " differs from first row length " +
                             std::to_string(rows.length));
        }
        rows.values.push_back(std::move(vals));
    }
}

inline Dataset finish(RawRows rows, const std::string& name, const std::string& origin) {
    require_data(!rows.values.empty(), "load_tsv: " + origin + " contains no series");
    std::vector<long> uniq = rows.labels;
    std::sort(uniq.begin(), uniq.end());
    uniq.erase(std::unique(uniq.begin(), uniq.end()), uniq.end());
    require_data(uniq.size() >= 2, "load_tsv: " + origin + " contains a single class");
    std::map<long, int> remap;
    for (std::size_t i = 0; i < uniq.size(); ++i) remap[uniq[i]] = static_cast<int>(i);

    Dataset ds;
    ds.name = name;
    ds.length = rows.length;
    ds.num_classes = static_cast<int>(uniq.size());
    ds.series.resize(rows.values.size());
    for (std::size_t i = 0; i < rows.values.size(); ++i) {
        ds.series[i].values = std::move(rows.values[i]);
        ds.series[i].label = remap[rows.labels[i]];
    }
    ds.validate();
    return ds;
}

}  // namespace tsv_detail

// UCR-style TSV: one series per line, integer label first, then L values,
// tab-separated. Labels are remapped to contiguous [0, C) in ascending
// original order.
inline Dataset load_tsv(const std::string& path, const std::string& name = "") {
    tsv_detail::RawRows rows;
    tsv_detail::parse_tsv_into(path, rows);
    return tsv_detail::finish(std::move(rows), name.empty() ? path : name, path);
}

inline void save_tsv(const std::string& path, const Dataset& ds) {
    std::ofstream out(path);
    require_data(out.good(), "save_tsv: cannot open " + path + " for writing");
    for (const auto& s : ds.series) {
        out << s.label;
        for (double v : s.values) out << '\t' << format_double(v);
        out << '\n';
    }
    require_data(out.good(), "save_tsv: write failed for " + path);
}

// Loads a TRAIN/TEST pair into one pool (train rows first, labels remapped
// jointly) and remembers the original partition for the resample-0
// convention.
inline Dataset load_tsv_pair(const std::string& train_path, const std::string& test_path,
                             const std::string& name) {
    tsv_detail::RawRows rows;
    tsv_detail::parse_tsv_into(train_path, rows);
    const std::size_t n_train = rows.values.size();
    tsv_detail::parse_tsv_into(test_path, rows);
    Dataset ds = tsv_detail::finish(std::move(rows), name, train_path + " + " + test_path);
    require_data(n_train > 0 && n_train < ds.size(),
                 name + ": TRAIN/TEST pair must both be non-empty");
    ds.original_train_count = n_train;
    return ds;
}

// R stratified random splits. Resample 0 reproduces the original partition
// when the dataset provides one. Train counts per class are
// clamp(round(f * n_c), 1, n_c - 1) so every class appears on both sides.
inline std::vector<ResamplePlan> monte_carlo_split(const Dataset& ds, int R, uint64_t seed,
                                                   double train_fraction) {
    require(R >= 1, "monte_carlo_split: R must be >= 1");
    require(train_fraction > 0.0 && train_fraction < 1.0,
            "monte_carlo_split: train_fraction must be in (0, 1)");
    ds.validate();

    std::vector<std::vector<std::size_t>> by_class(ds.num_classes);
    for (std::size_t i = 0; i < ds.size(); ++i) by_class[ds.series[i].label].push_back(i);
    for (int c = 0; c < ds.num_classes; ++c)
        require(by_class[c].size() >= 2, "monte_carlo_split: class " + std::to_string(c) +
                                             " too small to stratify");

    std::vector<ResamplePlan> plans;
    Rng rng(seed);
    for (int r = 0; r < R; ++r) {
        ResamplePlan plan;
        plan.resample_id = r;
        if (r == 0 && ds.original_train_count.has_value()) {
            const std::size_t n_train = *ds.original_train_count;
            for (std::size_t i = 0; i < ds.size(); ++i)
                (i < n_train ? plan.train_indices : plan.test_indices).push_back(i);
        } else {
            for (int c = 0; c < ds.num_classes; ++c) {
                std::vector<std::size_t> pool = by_class[c];
                rng.shuffle(pool);
                const double want = train_fraction * static_cast<double>(pool.size());
                std::size_t n_train = static_cast<std::size_t>(std::llround(want));
                n_train = std::clamp<std::size_t>(n_train, 1, pool.size() - 1);
                for (std::size_t i = 0; i < pool.size(); ++i)
                    (i < n_train ? plan.train_indices : plan.test_indices).push_back(pool[i]);
            }
            std::sort(plan.train_indices.begin(), plan.train_indices.end());
            std::sort(plan.test_indices.begin(), plan.test_indices.end());
        }
        plan.validate(ds);
        plans.push_back(std::move(plan));
    }
    return plans;
}

// Predefined resampling indices: one JSON object per line with schema
// {"resample": r, "train": [...], "test": [...]}, 0-based integers.
inline std::vector<ResamplePlan> load_predefined_indices(const std::string& path,
                                                         const Dataset& ds) {
    std::ifstream in(path);
    require_data(in.good(), "load_predefined_indices: cannot open " + path);
    std::vector<ResamplePlan> plans;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty() || line.find_first_not_of(" \t\r") == std::string::npos) continue;
        nlohmann::json rec;
        try {
            rec = nlohmann::json::parse(line);
        } catch (const nlohmann::json::parse_error& e) {
            throw DataError(path + ":" + std::to_string(line_no) + ": bad JSON: " + e.what());
        }
        require_data(rec.contains("resample") && rec.contains("train") && rec.contains("test"),
                     path + ":" + std::to_string(line_no) +
                         ": record must contain resample, train, test");
        ResamplePlan plan;
        plan.resample_id = rec["resample"].get<int>();
        for (const auto& v : rec["train"]) {
            const long idx = v.get<long>();
            require_data(idx >= 0, path + ":" + std::to_string(line_no) + ": negative index");
            plan.train_indices.push_back(static_cast<std::size_t>(idx));
        }
        for (const auto& v : rec["test"]) {
            const long idx = v.get<long>();
            require_data(idx >= 0, path + ":" + std::to_string(line_no) + ": negative index");
            plan.test_indices.push_back(static_cast<std::size_t>(idx));
        }
        try {
            plan.validate(ds);
        } catch (const DataError& e) {
            throw DataError(path + ":" + std::to_string(line_no) + ": " + e.what());
        }
        plans.push_back(std::move(plan));
    }
    require_data(!plans.empty(), "load_predefined_indices: " + path + " contains no records");
    return plans;
}

// Synthetic two-class datasets for desk-scale experiments; deterministic
// under seed.
inline Dataset make_synthetic(const std::string& kind, int N, std::size_t L, uint64_t seed) {
    require(N >= 4 && N % 2 == 0, "make_synthetic: N must be even and >= 4");
    require(L >= 32, "make_synthetic: L must be >= 32");
    Dataset ds;
    ds.name = kind;
    ds.length = L;
    ds.num_classes = 2;
    Rng rng(seed);
    if (kind == "two_sines") {
        // class 0: sine at f1 cycles per window; class 1: sine at f2.
        const double f1 = 3.0, f2 = 7.0, sigma = 0.2;
        for (int i = 0; i < N; ++i) {
            Series s;
            s.label = i % 2;
            const double freq = s.label == 0 ? f1 : f2;
            const double phase = rng.uniform(0.0, 2.0 * M_PI);
            s.values.resize(L);
            for (std::size_t t = 0; t < L; ++t)
                s.values[t] = std::sin(2.0 * M_PI * freq * static_cast<double>(t) /
                                           static_cast<double>(L) +
                                       phase) +
                              sigma * rng.normal();
            ds.series.push_back(std::move(s));
        }
    } else if (kind == "noise_vs_trend") {
        // class 0: white noise; class 1: linear ramp plus noise.
        const double sigma = 0.5;
        for (int i = 0; i < N; ++i) {
            Series s;
            s.label = i % 2;
            s.values.resize(L);
            const double slope = s.label == 0 ? 0.0 : 3.0 / static_cast<double>(L);
            for (std::size_t t = 0; t < L; ++t)
                s.values[t] = slope * static_cast<double>(t) + sigma * rng.normal();
            ds.series.push_back(std::move(s));
        }
    } else {
        throw std::invalid_argument("make_synthetic: unknown kind '" + kind +
                                    "' (valid: two_sines, noise_vs_trend)");
    }
    ds.validate();
    return ds;
}

}  // namespace mrms
