#include <catch2/catch_amalgamated.hpp>

#include <fstream>

#include "helpers.hpp"
#include "mrms/training.hpp"

using namespace mrms;
using Catch::Approx;

namespace {

MrmsConfig tiny_mrms(int classes, double dropout = 0.3) {
    MrmsConfig cfg;
    cfg.num_classes = classes;
    cfg.branch_filters = 4;
    cfg.fusion_channels = {8, 8};
    cfg.dropout_rate = dropout;
    return cfg;
}

LmrmsConfig tiny_lmrms(int classes, double dropout = 0.3) {
    LmrmsConfig cfg;
    cfg.num_classes = classes;
    cfg.branch_filters = 4;
    cfg.hidden_units = 8;
    cfg.main_channels = {8, 8};
    cfg.dropout_rate = dropout;
    return cfg;
}

std::vector<std::size_t> all_indices(std::size_t n) {
    std::vector<std::size_t> idx(n);
    for (std::size_t i = 0; i < n; ++i) idx[i] = i;
    return idx;
}

std::vector<BenchModelSpec> tiny_specs() {
    return {{"mrms",
             [](int in_ch, int classes, uint64_t seed) -> std::unique_ptr<Network> {
                 return std::make_unique<MrmsNet>(in_ch, tiny_mrms(classes), seed);
             }},
            {"lmrms", [](int in_ch, int classes, uint64_t seed) -> std::unique_ptr<Network> {
                 return std::make_unique<LmrmsNet>(in_ch, tiny_lmrms(classes), seed);
             }}};
}

}  // namespace

TEST_CASE("auto_batch_size threshold table") {
    REQUIRE(auto_batch_size(100, 100) == 16);    // W = 1e4
    REQUIRE(auto_batch_size(1000, 100) == 16);   // W = 1e5, boundary inclusive
    REQUIRE(auto_batch_size(1001, 100) == 32);   // just past 1e5
    REQUIRE(auto_batch_size(2000, 500) == 32);   // W = 1e6, boundary inclusive
    REQUIRE(auto_batch_size(5000, 500) == 64);   // W = 2.5e6
    REQUIRE(auto_batch_size(8, 100) == 8);       // clamped to N
    REQUIRE_THROWS_AS(auto_batch_size(0, 10), std::invalid_argument);
}

TEST_CASE("train loop") {
    auto ds = make_synthetic("two_sines", 16, 32, 77);
    auto data = stack_dataset(ds, preset_kinds("minimal"));
    auto idx = all_indices(data.size());

    SECTION("same seed and config give an identical loss history") {
        TrainConfig cfg;
        cfg.max_epochs = 4;
        cfg.seed = 9;
        MrmsNet m1(3, tiny_mrms(2), 5);
        MrmsNet m2(3, tiny_mrms(2), 5);
        auto o1 = train(m1, data, idx, cfg);
        auto o2 = train(m2, data, idx, cfg);
        REQUIRE(o1.loss_history == o2.loss_history);
        REQUIRE(m1.snapshot_state() == m2.snapshot_state());
    }
    SECTION("best_train_loss is the minimum of the history, times positive") {
        TrainConfig cfg;
        cfg.max_epochs = 6;
        cfg.seed = 10;
        MrmsNet model(3, tiny_mrms(2), 7);
        auto out = train(model, data, idx, cfg);
        REQUIRE(out.best_train_loss == *std::min_element(out.loss_history.begin(),
                                                         out.loss_history.end()));
        REQUIRE(out.train_seconds > 0.0);
        REQUIRE(out.epochs_run == static_cast<int>(out.loss_history.size()));
    }
    SECTION("early stopping satisfies the patience bound") {
        TrainConfig cfg;
        cfg.max_epochs = 200;
        cfg.patience = 3;
        cfg.min_delta = 0.05;  // coarse threshold forces an early stop
        cfg.seed = 11;
        MrmsNet model(3, tiny_mrms(2), 13);
        auto out = train(model, data, idx, cfg);
        REQUIRE(out.epochs_run < cfg.max_epochs);
        const auto best_it =
            std::min_element(out.loss_history.begin(), out.loss_history.end());
        const int best_idx = static_cast<int>(best_it - out.loss_history.begin());
        REQUIRE(out.epochs_run <= best_idx + cfg.patience + 1);
    }
    SECTION("max_epochs = 1 restores the initial state bit-exactly") {
        TrainConfig cfg;
        cfg.max_epochs = 1;
        cfg.seed = 12;
        MrmsNet model(3, tiny_mrms(2), 17);
        auto before = model.snapshot_state();
        auto out = train(model, data, idx, cfg);
        REQUIRE(out.epochs_run == 1);
        REQUIRE(model.snapshot_state() == before);
    }
    SECTION("restored parameters reproduce best_train_loss under a frozen eval pass") {
        // full-batch, no dropout: the epoch loss is a pure function of the
        // state entering the epoch, which is exactly what gets snapshot
        TrainConfig cfg;
        cfg.max_epochs = 8;
        cfg.batch_size = static_cast<int>(data.size());
        cfg.seed = 13;
        MrmsNet model(3, tiny_mrms(2, 0.0), 19);
        auto out = train(model, data, idx, cfg);
        const double re_eval = evaluate_train_loss(model, data, idx);
        REQUIRE(re_eval == Approx(out.best_train_loss).margin(1e-12));
    }
    SECTION("LMRMS head phase leaves the restored main state untouched") {
        TrainConfig cfg;
        cfg.max_epochs = 8;
        cfg.batch_size = static_cast<int>(data.size());
        cfg.seed = 14;
        LmrmsNet model(3, tiny_lmrms(2, 0.0), 23);
        auto out = train(model, data, idx, cfg);
        const double re_eval = evaluate_train_loss(model, data, idx);
        REQUIRE(re_eval == Approx(out.best_train_loss).margin(1e-12));
    }
    SECTION("non-finite loss aborts naming the epoch") {
        TrainConfig cfg;
        cfg.max_epochs = 50;
        cfg.seed = 15;
        MrmsNet model(3, tiny_mrms(2), 29);
        // corrupt the classifier so the loss turns non-finite immediately
        for (auto& p : model.parameters())
            if (p.name == "head.weight") p.tensor.data()[0] = std::nan("");
        REQUIRE_THROWS_WITH(train(model, data, idx, cfg),
                            Catch::Matchers::ContainsSubstring("epoch"));
    }
}

TEST_CASE("evaluate") {
    auto ds = make_synthetic("two_sines", 12, 32, 3);
    auto data = stack_dataset(ds, preset_kinds("minimal"));
    MrmsNet model(3, tiny_mrms(2), 31);
    auto res = evaluate(model, data, all_indices(data.size()));
    REQUIRE(res.pred.size() == 12);
    REQUIRE(res.probs.size() == 24);
    REQUIRE(res.test_seconds > 0.0);
    REQUIRE(res.acc >= 0.0);
    REQUIRE(res.acc <= 1.0);
    for (std::size_t b = 0; b < 12; ++b) {
        double s = res.probs[b * 2] + res.probs[b * 2 + 1];
        REQUIRE(s == Approx(1.0).margin(1e-9));
    }
    SECTION("chunked evaluation equals one-shot evaluation") {
        // 300 samples crosses the internal chunk boundary
        auto big = make_synthetic("two_sines", 300, 32, 5);
        auto big_data = stack_dataset(big, preset_kinds("raw"));
        MrmsNet m2(1, tiny_mrms(2), 37);
        auto full = evaluate(m2, big_data, all_indices(big_data.size()));
        // reference: batch of one sample at a time
        for (std::size_t i : {0ul, 255ul, 256ul, 299ul}) {
            auto one = evaluate(m2, big_data, {i});
            REQUIRE(one.probs[0] == full.probs[i * 2]);
            REQUIRE(one.probs[1] == full.probs[i * 2 + 1]);
        }
    }
}

TEST_CASE("run_benchmark") {
    auto dir = oracle::make_temp_dir("bench");
    const std::string journal_path = (dir / "journal.jsonl").string();

    std::vector<BenchDataset> datasets;
    for (const auto& kind : {"two_sines", "noise_vs_trend"}) {
        BenchDataset bd;
        bd.dataset = make_synthetic(kind, 12, 32, fnv1a64(kind));
        bd.plans = monte_carlo_split(bd.dataset, 3, 42, 0.5);
        datasets.push_back(std::move(bd));
    }

    BenchOptions opts;
    opts.kinds = preset_kinds("minimal");
    opts.train.max_epochs = 2;
    opts.train.patience = 1;
    opts.train.seed = 1;
    opts.journal_path = journal_path;

    SECTION("cardinality, resume, and aggregation") {
        int runs = 0;
        opts.on_progress = [&](const std::string&, const std::string&, int, bool) { ++runs; };
        auto records = run_benchmark(tiny_specs(), datasets, opts);
        REQUIRE(runs == 12);  // 2 models x 2 datasets x 3 resamples
        REQUIRE(records.size() == 12);

        std::ifstream in(journal_path);
        std::string line;
        int lines = 0;
        while (std::getline(in, line))
            if (!line.empty()) ++lines;
        REQUIRE(lines == 12);

        for (const auto& r : records) {
            REQUIRE(r.train_s > 0.0);
            REQUIRE(r.test_s > 0.0);
            REQUIRE(r.epochs >= 1);
            REQUIRE(r.params > 0);
        }

        // rerun with nothing deleted: zero new training runs
        runs = 0;
        auto again = run_benchmark(tiny_specs(), datasets, opts);
        REQUIRE(runs == 0);
        REQUIRE(again.size() == 12);

        // aggregate matches a from-scratch recomputation
        auto table = aggregate(again);
        for (const auto& spec : tiny_specs()) {
            double want = 0.0;
            for (const auto& bd : datasets) {
                double per_ds = 0.0;
                int n = 0;
                for (const auto& r : again)
                    if (r.model == spec.name && r.dataset == bd.dataset.name) {
                        per_ds += r.acc;
                        ++n;
                    }
                REQUIRE(n == 3);
                want += per_ds / n;
            }
            want /= static_cast<double>(datasets.size());
            REQUIRE(table.overall.at(spec.name).acc == Approx(want).margin(1e-12));
        }
    }
    SECTION("failures are recorded, skipped on resume, and never abort the sweep") {
        auto specs = tiny_specs();
        specs.push_back({"broken", [](int, int, uint64_t) -> std::unique_ptr<Network> {
                             throw std::runtime_error("constructor exploded");
                         }});
        int failures = 0;
        opts.on_progress = [&](const std::string&, const std::string&, int, bool ok) {
            if (!ok) ++failures;
        };
        auto records = run_benchmark(specs, datasets, opts);
        REQUIRE(failures == 6);       // broken model on every (dataset, resample)
        REQUIRE(records.size() == 12);  // only real runs yield records

        failures = 0;
        int total = 0;
        opts.on_progress = [&](const std::string&, const std::string&, int, bool ok) {
            ++total;
            if (!ok) ++failures;
        };
        run_benchmark(specs, datasets, opts);
        REQUIRE(total == 0);  // failures also count as handled
    }
    SECTION("parallel execution yields the same record values") {
        opts.journal_path = (dir / "j1.jsonl").string();
        auto seq = run_benchmark(tiny_specs(), datasets, opts);
        opts.journal_path = (dir / "j2.jsonl").string();
        opts.jobs = 3;
        auto par = run_benchmark(tiny_specs(), datasets, opts);
        auto key = [](const RunRecord& r) {
            return r.model + "|" + r.dataset + "|" + std::to_string(r.resample);
        };
        auto sort_records = [&](std::vector<RunRecord> rs) {
            std::sort(rs.begin(), rs.end(),
                      [&](const RunRecord& a, const RunRecord& b) { return key(a) < key(b); });
            return rs;
        };
        auto a = sort_records(seq);
        auto b = sort_records(par);
        REQUIRE(a.size() == b.size());
        for (std::size_t i = 0; i < a.size(); ++i) {
            REQUIRE(key(a[i]) == key(b[i]));
            REQUIRE(a[i].acc == b[i].acc);
            REQUIRE(a[i].nll == b[i].nll);
            REQUIRE(a[i].epochs == b[i].epochs);
        }
    }
    std::filesystem::remove_all(dir);
}

TEST_CASE("journal round-trip") {
    auto dir = oracle::make_temp_dir("journal");
    const std::string path = (dir / "j.jsonl").string();
    RunRecord r;
    r.model = "mrms";
    r.dataset = "toy";
    r.resample = 2;
    r.acc = 0.9375;
    r.f1 = 0.93;
    r.auc = std::nullopt;
    r.nll = 0.21;
    r.train_s = 1.5;
    r.test_s = 0.01;
    r.epochs = 40;
    r.params = 12345;
    {
        std::ofstream out(path);
        out << journal::to_json(r).dump() << "\n";
        out << R"({"model":"mrms","dataset":"bad","resample":0,"error":"boom"})" << "\n";
    }
    auto loaded = journal::load(path);
    REQUIRE(loaded.records.size() == 1);
    REQUIRE(loaded.keys.size() == 2);
    const auto& back = loaded.records[0];
    REQUIRE(back.model == r.model);
    REQUIRE(back.acc == r.acc);
    REQUIRE(!back.auc.has_value());
    REQUIRE(back.params == r.params);
    REQUIRE(journal::load((dir / "missing.jsonl").string()).records.empty());
    std::filesystem::remove_all(dir);
}
