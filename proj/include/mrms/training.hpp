#pragma once

#include <atomic>
#include <chrono>
#include <cmath>
#include <fstream>
#include <functional>
#include <memory>
#include <mutex>
#include <set>
#include <string>
#include <thread>
#include <vector>

#include <json.hpp>

#include "mrms/common.hpp"
#include "mrms/dataset.hpp"
#include "mrms/metrics.hpp"
#include "mrms/models.hpp"
#include "mrms/optim.hpp"
#include "mrms/representations.hpp"

namespace mrms {

// ---------------------------------------------------------------------------
// Stacked data: representation channels precomputed for a whole dataset.

struct StackedData {
    int channels = 0;
    std::size_t length = 0;
    int num_classes = 0;
    std::vector<std::vector<double>> stacks;  // each R x L, row-major
    std::vector<int> labels;

    std::size_t size() const { return stacks.size(); }
};

inline StackedData stack_dataset(const Dataset& ds, const std::vector<RepKind>& kinds) {
    StackedData out;
    out.channels = static_cast<int>(kinds.size());
    out.length = ds.length;
    out.num_classes = ds.num_classes;
    out.stacks.reserve(ds.size());
    out.labels.reserve(ds.size());
    for (const auto& s : ds.series) {
        RepStack stack = build_stack(s, kinds);
        out.stacks.push_back(std::move(stack.channels));
        out.labels.push_back(s.label);
    }
    return out;
}

inline Tensor make_batch(const StackedData& data, const std::vector<std::size_t>& indices) {
    require(!indices.empty(), "make_batch: empty index list");
    const int B = static_cast<int>(indices.size());
    const int R = data.channels;
    const int L = static_cast<int>(data.length);
    std::vector<double> buf(static_cast<std::size_t>(B) * R * L);
    for (int b = 0; b < B; ++b) {
        const auto& src = data.stacks[indices[b]];
        std::copy(src.begin(), src.end(), buf.begin() + static_cast<std::size_t>(b) * R * L);
    }
    return Tensor::from_data({B, R, L}, std::move(buf));
}

inline std::vector<int> gather_labels(const StackedData& data,
                                      const std::vector<std::size_t>& indices) {
    std::vector<int> labels(indices.size());
    for (std::size_t i = 0; i < indices.size(); ++i) labels[i] = data.labels[indices[i]];
    return labels;
}

// ---------------------------------------------------------------------------
// Training loop

struct TrainConfig {
    int max_epochs = 1500;
    int patience = 50;
    double min_delta = 1e-4;
    uint64_t seed = 0;
    int batch_size = 0;  // 0 = derive from workload
    double lr = 1e-3;
    // post-hoc early-head phase (models that have one) as a fraction of the
    // epochs the main phase actually ran
    double head_epoch_fraction = 0.1;

    void validate() const {
        require(max_epochs >= 1, "TrainConfig: max_epochs must be >= 1");
        require(patience >= 1, "TrainConfig: patience must be >= 1");
        require(min_delta >= 0.0, "TrainConfig: min_delta must be >= 0");
    }
};

struct TrainOutcome {
    int epochs_run = 0;
    double best_train_loss = 0.0;
    double train_seconds = 0.0;
    std::vector<double> loss_history;
};

// Batch size from the dataset workload W = N x L: 16 up to 1e5, 32 up to
// 1e6, 64 beyond; always clamped to N. Deterministic, no dynamic retry.
inline int auto_batch_size(std::size_t n_train, std::size_t length) {
    require(n_train >= 1 && length >= 1, "auto_batch_size: need N, L >= 1");
    const double w = static_cast<double>(n_train) * static_cast<double>(length);
    int batch = w <= 1e5 ? 16 : (w <= 1e6 ? 32 : 64);
    return static_cast<int>(std::min<std::size_t>(batch, n_train));
}

// Mean cross-entropy over the full index set in a frozen train-statistics
// pass (batch-norm batch statistics, no state mutation, dropout off).
inline double evaluate_train_loss(Network& model, const StackedData& data,
                                  const std::vector<std::size_t>& indices) {
    Rng unused(0);
    Tensor batch = make_batch(data, indices);
    Tensor logits = model.forward(batch, Mode::EvalFrozen, unused);
    Tensor loss = softmax_cross_entropy(logits, gather_labels(data, indices));
    return loss.item();
}

// Adam + cross-entropy with train-loss early stopping. Each epoch runs
// seeded shuffled mini-batches; the epoch loss is the mean of batch losses.
// A state snapshot is taken whenever an epoch achieves a new best loss; the
// snapshot captured is the state that entered that epoch (the state whose
// pass produced the loss), and it is restored at the end. Stops after
// `patience` consecutive epochs without a min_delta improvement.
inline TrainOutcome train(Network& model, const StackedData& data,
                          const std::vector<std::size_t>& train_indices, const TrainConfig& cfg) {
    cfg.validate();
    require(!train_indices.empty(), "train: empty training set");
    require(data.channels == model.input_channels(), "train: channel count mismatch");
    require(data.num_classes == model.num_classes(), "train: class count mismatch");

    const auto t0 = std::chrono::steady_clock::now();
    const int batch_size = cfg.batch_size > 0
                               ? static_cast<int>(std::min<std::size_t>(cfg.batch_size,
                                                                        train_indices.size()))
                               : auto_batch_size(train_indices.size(), data.length);

    Rng rng(cfg.seed);
    std::vector<Tensor> main_params;
    for (auto& p : model.main_parameters()) main_params.push_back(p.tensor);
    Adam opt(main_params, cfg.lr);

    TrainOutcome out;
    double best_loss = std::numeric_limits<double>::infinity();
    double patience_ref = std::numeric_limits<double>::infinity();
    int no_improve = 0;
    std::vector<std::vector<double>> best_state;

    std::vector<std::size_t> order = train_indices;
    for (int epoch = 0; epoch < cfg.max_epochs; ++epoch) {
        auto epoch_entry_state = model.snapshot_state();
        rng.shuffle(order);
        double loss_sum = 0.0;
        std::size_t n_batches = 0;
        for (std::size_t start = 0; start < order.size(); start += batch_size) {
            const std::size_t stop = std::min(order.size(), start + batch_size);
            std::vector<std::size_t> idx(order.begin() + start, order.begin() + stop);
            Tensor batch = make_batch(data, idx);
            Tensor logits = model.forward(batch, Mode::Train, rng);
            Tensor loss = softmax_cross_entropy(logits, gather_labels(data, idx));
            opt.zero_grad();
            backward(loss);
            opt.step();
            loss_sum += loss.item();
            ++n_batches;
        }
        const double epoch_loss = loss_sum / static_cast<double>(n_batches);
        if (!std::isfinite(epoch_loss))
            throw std::runtime_error("train: non-finite loss at epoch " + std::to_string(epoch));
        out.loss_history.push_back(epoch_loss);
        out.epochs_run = epoch + 1;

        if (epoch_loss < best_loss) {
            best_loss = epoch_loss;
            best_state = std::move(epoch_entry_state);
        }
        if (epoch_loss <= patience_ref - cfg.min_delta) {
            patience_ref = epoch_loss;
            no_improve = 0;
        } else {
            ++no_improve;
            if (no_improve >= cfg.patience) break;
        }
    }
    out.best_train_loss = best_loss;
    model.restore_state(best_state);

    // Post-hoc early-head phase: trunk frozen, cross-entropy on the head's
    // own logits, for a fixed fraction of the epochs the main phase ran.
    auto head_named = model.head_parameters();
    if (!head_named.empty() && cfg.head_epoch_fraction > 0.0) {
        std::vector<Tensor> head_params;
        for (auto& p : head_named) head_params.push_back(p.tensor);
        Adam head_opt(head_params, cfg.lr);
        const int head_epochs = std::max(
            1, static_cast<int>(std::ceil(cfg.head_epoch_fraction * out.epochs_run)));
        for (int epoch = 0; epoch < head_epochs; ++epoch) {
            rng.shuffle(order);
            for (std::size_t start = 0; start < order.size(); start += batch_size) {
                const std::size_t stop = std::min(order.size(), start + batch_size);
                std::vector<std::size_t> idx(order.begin() + start, order.begin() + stop);
                Tensor batch = make_batch(data, idx);
                Tensor loss = model.head_loss(batch, gather_labels(data, idx));
                head_opt.zero_grad();
                backward(loss);
                head_opt.step();
                if (!std::isfinite(loss.item()))
                    throw std::runtime_error("train: non-finite head loss at epoch " +
                                             std::to_string(epoch));
            }
        }
    }

    const auto t1 = std::chrono::steady_clock::now();
    out.train_seconds = std::max(std::chrono::duration<double>(t1 - t0).count(), 1e-9);
    return out;
}

// ---------------------------------------------------------------------------
// Test-set evaluation

struct EvalResult {
    std::vector<int> pred;
    std::vector<double> probs;  // B x C
    double acc = 0.0;
    double f1 = 0.0;
    std::optional<double> auc;
    double nll_value = 0.0;
    double test_seconds = 0.0;
};

inline EvalResult evaluate(Network& model, const StackedData& data,
                           const std::vector<std::size_t>& indices) {
    require(!indices.empty(), "evaluate: empty index list");
    const auto t0 = std::chrono::steady_clock::now();
    const int C = model.num_classes();
    EvalResult res;
    res.probs.reserve(indices.size() * C);

    // fixed-size chunks bound peak memory; per-sample independence in Infer
    // mode makes chunking observationally neutral
    constexpr std::size_t kChunk = 256;
    for (std::size_t start = 0; start < indices.size(); start += kChunk) {
        const std::size_t stop = std::min(indices.size(), start + kChunk);
        std::vector<std::size_t> idx(indices.begin() + start, indices.begin() + stop);
        InferenceOutcome outcome = model.infer(make_batch(data, idx));
        auto probs = softmax_rows(outcome.logits, outcome.batch, C);
        res.probs.insert(res.probs.end(), probs.begin(), probs.end());
    }

    res.pred.resize(indices.size());
    for (std::size_t b = 0; b < indices.size(); ++b) {
        int arg = 0;
        for (int c = 1; c < C; ++c)
            if (res.probs[b * C + c] > res.probs[b * C + arg]) arg = c;
        res.pred[b] = arg;
    }
    const std::vector<int> truth = gather_labels(data, indices);
    res.acc = accuracy(res.pred, truth);
    res.f1 = macro_f1(res.pred, truth, C);
    res.auc = auc(res.probs, truth, C);
    res.nll_value = nll(res.probs, truth, C);
    const auto t1 = std::chrono::steady_clock::now();
    res.test_seconds = std::max(std::chrono::duration<double>(t1 - t0).count(), 1e-9);
    return res;
}

// ---------------------------------------------------------------------------
// RunRecord journal: one JSON object per line, append-only, resumable.

namespace journal {

inline nlohmann::ordered_json to_json(const RunRecord& r) {
    nlohmann::ordered_json j;
    j["model"] = r.model;
    j["dataset"] = r.dataset;
    j["resample"] = r.resample;
    j["acc"] = r.acc;
    j["f1"] = r.f1;
    if (r.auc.has_value())
        j["auc"] = *r.auc;
    else
        j["auc"] = nullptr;
    j["nll"] = r.nll;
    j["train_s"] = r.train_s;
    j["test_s"] = r.test_s;
    j["epochs"] = r.epochs;
    j["params"] = r.params;
    return j;
}

struct LoadResult {
    std::vector<RunRecord> records;
    // keys of every line present, including failure records: these are
    // considered handled on resume
    std::set<std::tuple<std::string, std::string, int>> keys;
};

inline LoadResult load(const std::string& path) {
    LoadResult out;
    std::ifstream in(path);
    if (!in.good()) return out;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        nlohmann::json j;
        try {
            j = nlohmann::json::parse(line);
        } catch (const nlohmann::json::parse_error& e) {
            throw DataError(path + ":" + std::to_string(line_no) + ": bad journal line: " +
                            e.what());
        }
        require_data(j.contains("model") && j.contains("dataset") && j.contains("resample"),
                     path + ":" + std::to_string(line_no) + ": journal line missing key fields");
        const auto key = std::make_tuple(j["model"].get<std::string>(),
                                         j["dataset"].get<std::string>(), j["resample"].get<int>());
        out.keys.insert(key);
        if (j.contains("error")) continue;  // recorded failure
        RunRecord r;
        r.model = std::get<0>(key);
        r.dataset = std::get<1>(key);
        r.resample = std::get<2>(key);
        r.acc = j.at("acc").get<double>();
        r.f1 = j.at("f1").get<double>();
        if (!j.at("auc").is_null()) r.auc = j.at("auc").get<double>();
        r.nll = j.at("nll").get<double>();
        r.train_s = j.at("train_s").get<double>();
        r.test_s = j.at("test_s").get<double>();
        r.epochs = j.at("epochs").get<int>();
        r.params = j.at("params").get<int64_t>();
        out.records.push_back(std::move(r));
    }
    return out;
}

}  // namespace journal

// ---------------------------------------------------------------------------
// Benchmark sweep

struct BenchModelSpec {
    std::string name;
    std::function<std::unique_ptr<Network>(int in_channels, int num_classes, uint64_t seed)>
        factory;
};

struct BenchDataset {
    Dataset dataset;
    std::vector<ResamplePlan> plans;
};

struct BenchOptions {
    std::vector<RepKind> kinds;
    TrainConfig train;
    std::string journal_path;
    int jobs = 1;
    // called after each finished run with (model, dataset, resample, ok)
    std::function<void(const std::string&, const std::string&, int, bool)> on_progress;
};

// Runs every (model, dataset, resample) combination, appending one journal
// line per run. Pairs already present in the journal (including recorded
// failures) are skipped, so interrupted sweeps resume. Per-run failures are
// recorded and never abort the sweep. Returns all records, prior and new.
inline std::vector<RunRecord> run_benchmark(const std::vector<BenchModelSpec>& models,
                                            const std::vector<BenchDataset>& datasets,
                                            const BenchOptions& opts) {
    require(!models.empty(), "run_benchmark: no models");
    require(!datasets.empty(), "run_benchmark: no datasets");
    require(opts.jobs >= 1, "run_benchmark: jobs must be >= 1");

    journal::LoadResult prior = journal::load(opts.journal_path);

    struct Task {
        std::size_t model_idx;
        std::size_t dataset_idx;
        const ResamplePlan* plan;
    };
    std::vector<Task> pending;
    for (std::size_t d = 0; d < datasets.size(); ++d) {
        for (std::size_t m = 0; m < models.size(); ++m) {
            for (const auto& plan : datasets[d].plans) {
                const auto key = std::make_tuple(models[m].name, datasets[d].dataset.name,
                                                 plan.resample_id);
                if (!prior.keys.count(key)) pending.push_back({m, d, &plan});
            }
        }
    }

    // representation stacks are shared read-only across runs of one dataset
    std::vector<StackedData> stacked(datasets.size());
    std::vector<bool> stacked_needed(datasets.size(), false);
    for (const auto& t : pending) stacked_needed[t.dataset_idx] = true;
    for (std::size_t d = 0; d < datasets.size(); ++d)
        if (stacked_needed[d]) stacked[d] = stack_dataset(datasets[d].dataset, opts.kinds);

    std::ofstream out;
    std::mutex journal_mutex;
    if (!pending.empty()) {
        out.open(opts.journal_path, std::ios::app);
        require_data(out.good(), "run_benchmark: cannot open journal " + opts.journal_path);
    }

    std::vector<RunRecord> fresh;
    std::atomic<std::size_t> next{0};

    auto worker = [&]() {
        while (true) {
            const std::size_t i = next.fetch_add(1);
            if (i >= pending.size()) break;
            const Task& task = pending[i];
            const BenchModelSpec& spec = models[task.model_idx];
            const Dataset& ds = datasets[task.dataset_idx].dataset;
            const StackedData& data = stacked[task.dataset_idx];
            const int r = task.plan->resample_id;
            const uint64_t run_seed =
                fnv1a64(spec.name + "|" + ds.name + "|" + std::to_string(r)) ^
                (opts.train.seed * 0x9e3779b97f4a7c15ull);

            nlohmann::ordered_json line;
            RunRecord rec;
            bool ok = true;
            try {
                auto model = spec.factory(data.channels, data.num_classes, run_seed);
                TrainConfig cfg = opts.train;
                cfg.seed = run_seed + 1;
                TrainOutcome outcome = train(*model, data, task.plan->train_indices, cfg);
                EvalResult eval = evaluate(*model, data, task.plan->test_indices);
                rec.model = spec.name;
                rec.dataset = ds.name;
                rec.resample = r;
                rec.acc = eval.acc;
                rec.f1 = eval.f1;
                rec.auc = eval.auc;
                rec.nll = eval.nll_value;
                rec.train_s = outcome.train_seconds;
                rec.test_s = eval.test_seconds;
                rec.epochs = outcome.epochs_run;
                rec.params = static_cast<int64_t>(model->param_count());
                line = journal::to_json(rec);
            } catch (const std::exception& e) {
                ok = false;
                line = nlohmann::ordered_json{{"model", spec.name},
                                              {"dataset", ds.name},
                                              {"resample", r},
                                              {"error", std::string(e.what())}};
            }
            {
                std::lock_guard<std::mutex> lock(journal_mutex);
                out << line.dump() << '\n';
                out.flush();
                if (ok) fresh.push_back(rec);
                if (opts.on_progress) opts.on_progress(spec.name, ds.name, r, ok);
            }
        }
    };

    if (opts.jobs == 1) {
        worker();
    } else {
        std::vector<std::thread> threads;
        for (int t = 0; t < opts.jobs; ++t) threads.emplace_back(worker);
        for (auto& t : threads) t.join();
    }

    std::vector<RunRecord> all = prior.records;
    all.insert(all.end(), fresh.begin(), fresh.end());
    return all;
}

}  // namespace mrms
