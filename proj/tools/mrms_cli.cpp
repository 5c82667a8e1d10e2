// mrms: multi-representation multi-scale time-series classification toolkit.
//
// Subcommands:
//   transform  compute representation stacks for a TSV dataset
//   bench      train/evaluate models over Monte-Carlo resamples (resumable)
//   compare    Friedman/Nemenyi ranking analysis + CD diagram from a journal
//   pareto     cost/score Pareto analysis from a journal
//
// Exit codes: 0 success, 2 usage/validation, 3 data integrity, 4 runtime.

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "mrms/common.hpp"
#include "mrms/dataset.hpp"
#include "mrms/metrics.hpp"
#include "mrms/models.hpp"
#include "mrms/representations.hpp"
#include "mrms/stats.hpp"
#include "mrms/svg.hpp"
#include "mrms/training.hpp"

namespace fs = std::filesystem;

namespace {

std::vector<mrms::RepKind> parse_reps(const std::string& spec) {
    if (spec == "raw" || spec == "minimal" || spec == "default") return mrms::preset_kinds(spec);
    std::vector<mrms::RepKind> kinds;
    std::stringstream ss(spec);
    std::string item;
    while (std::getline(ss, item, ',')) kinds.push_back(mrms::rep_kind_from_name(item));
    mrms::require(!kinds.empty(), "no representations given");
    return kinds;
}

std::string default_out_dir(const std::string& flag_value) {
    if (!flag_value.empty()) return flag_value;
    if (const char* env = std::getenv("MRMS_OUT_DIR"); env && *env) return env;
    return ".";
}

void write_file(const fs::path& path, const std::string& content) {
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary);
    mrms::require_data(out.good(), "cannot open " + path.string() + " for writing");
    out << content;
    mrms::require_data(out.good(), "write failed for " + path.string());
}

std::string reps_to_string(const std::vector<mrms::RepKind>& kinds) {
    std::string s;
    for (std::size_t i = 0; i < kinds.size(); ++i) {
        if (i) s += ",";
        s += mrms::rep_kind_name(kinds[i]);
    }
    return s;
}

// ---------------------------------------------------------------------------
// transform

struct TransformArgs {
    std::string input;
    std::string reps = "default";
    std::string out_dir;
};

int cmd_transform(const TransformArgs& args) {
    const auto kinds = parse_reps(args.reps);
    const mrms::Dataset ds = mrms::load_tsv(args.input);
    const fs::path out(default_out_dir(args.out_dir));

    std::string stacks;
    for (std::size_t i = 0; i < ds.size(); ++i) {
        const mrms::RepStack stack = mrms::build_stack(ds.series[i], kinds);
        for (std::size_t r = 0; r < stack.rows(); ++r) {
            stacks += std::to_string(i);
            stacks += '\t';
            stacks += mrms::rep_kind_name(stack.kinds[r]);
            const double* row = stack.row(r);
            for (std::size_t t = 0; t < stack.length; ++t) {
                stacks += '\t';
                stacks += mrms::format_double(row[t]);
            }
            stacks += '\n';
        }
    }
    write_file(out / "stacks.tsv", stacks);

    std::string manifest;
    manifest += "source=" + args.input + "\n";
    manifest += "series=" + std::to_string(ds.size()) + "\n";
    manifest += "length=" + std::to_string(ds.length) + "\n";
    manifest += "classes=" + std::to_string(ds.num_classes) + "\n";
    manifest += "kinds=" + reps_to_string(kinds) + "\n";
    write_file(out / "manifest.txt", manifest);

    std::cout << "wrote " << (out / "stacks.tsv").string() << " (" << ds.size() << " series x "
              << kinds.size() << " channels)\n";
    return 0;
}

// ---------------------------------------------------------------------------
// bench

struct BenchArgs {
    std::string data_dir;
    std::string models = "mrms,lmrms";
    std::string reps = "minimal";
    int resamples = 5;
    uint64_t seed = 0;
    std::string out_dir;
    int max_epochs = 1500;
    int patience = 50;
    double min_delta = 1e-4;
    int batch_size = 0;
    double lr = 1e-3;
    double tau = 0.8;
    double train_fraction = 0.0;  // 0 = mirror each dataset's original ratio
    int jobs = 1;
};

std::vector<mrms::BenchModelSpec> make_model_specs(const std::string& list, double tau) {
    std::vector<mrms::BenchModelSpec> specs;
    std::stringstream ss(list);
    std::string name;
    while (std::getline(ss, name, ',')) {
        if (name == "mrms") {
            specs.push_back({"mrms", [](int in_ch, int classes, uint64_t seed) {
                                 mrms::MrmsConfig cfg;
                                 cfg.num_classes = classes;
                                 return std::make_unique<mrms::MrmsNet>(in_ch, cfg, seed);
                             }});
        } else if (name == "lmrms") {
            specs.push_back({"lmrms", [tau](int in_ch, int classes, uint64_t seed) {
                                 mrms::LmrmsConfig cfg;
                                 cfg.num_classes = classes;
                                 cfg.tau = tau;
                                 return std::make_unique<mrms::LmrmsNet>(in_ch, cfg, seed);
                             }});
        } else {
            throw std::invalid_argument("unknown model '" + name + "' (valid: mrms, lmrms)");
        }
    }
    mrms::require(!specs.empty(), "no models given");
    return specs;
}

std::string aggregate_csv(const mrms::AggregateTable& table) {
    static const std::vector<std::string> metrics = {"acc", "f1", "auc", "nll", "train_s", "test_s"};
    std::string csv = "model,metric,value\n";
    for (const auto& m : table.models) {
        const mrms::AggregateCell& cell = table.overall.at(m);
        for (const auto& metric : metrics) {
            csv += m + "," + metric + ",";
            if (metric == "auc" && !cell.auc.has_value()) {
                csv += "\n";
                continue;
            }
            csv += mrms::format_double(mrms::cell_metric(cell, metric)) + "\n";
        }
    }
    return csv;
}

int cmd_bench(const BenchArgs& args) {
    mrms::require(args.resamples >= 1, "--resamples must be >= 1");
    const auto kinds = parse_reps(args.reps);
    const fs::path out(default_out_dir(args.out_dir));
    fs::create_directories(out);

    // discover *_TRAIN.tsv / *_TEST.tsv pairs, sorted by name
    std::vector<std::string> names;
    mrms::require_data(fs::is_directory(args.data_dir),
                       "data directory not found: " + args.data_dir);
    for (const auto& entry : fs::directory_iterator(args.data_dir)) {
        const std::string fname = entry.path().filename().string();
        const std::string suffix = "_TRAIN.tsv";
        if (fname.size() > suffix.size() &&
            fname.compare(fname.size() - suffix.size(), suffix.size(), suffix) == 0)
            names.push_back(fname.substr(0, fname.size() - suffix.size()));
    }
    std::sort(names.begin(), names.end());
    mrms::require_data(!names.empty(),
                       "no *_TRAIN.tsv datasets found in " + args.data_dir);

    std::vector<mrms::BenchDataset> datasets;
    for (const auto& name : names) {
        const fs::path train_path = fs::path(args.data_dir) / (name + "_TRAIN.tsv");
        const fs::path test_path = fs::path(args.data_dir) / (name + "_TEST.tsv");
        mrms::require_data(fs::exists(test_path), name + ": missing TEST file " +
                                                      test_path.string());
        mrms::BenchDataset bench;
        bench.dataset = mrms::load_tsv_pair(train_path.string(), test_path.string(), name);

        const fs::path idx_path = fs::path(args.data_dir) / (name + "_INDICES.json");
        if (fs::exists(idx_path)) {
            bench.plans = mrms::load_predefined_indices(idx_path.string(), bench.dataset);
        } else {
            double fraction = args.train_fraction;
            if (fraction <= 0.0)
                fraction = static_cast<double>(*bench.dataset.original_train_count) /
                           static_cast<double>(bench.dataset.size());
            const uint64_t split_seed = mrms::fnv1a64(name) ^ args.seed;
            bench.plans =
                mrms::monte_carlo_split(bench.dataset, args.resamples, split_seed, fraction);
        }
        datasets.push_back(std::move(bench));
    }

    mrms::BenchOptions opts;
    opts.kinds = kinds;
    opts.train.max_epochs = args.max_epochs;
    opts.train.patience = args.patience;
    opts.train.min_delta = args.min_delta;
    opts.train.batch_size = args.batch_size;
    opts.train.lr = args.lr;
    opts.train.seed = args.seed;
    opts.journal_path = (out / "journal.jsonl").string();
    opts.jobs = args.jobs;
    int failures = 0;
    opts.on_progress = [&](const std::string& model, const std::string& dataset, int resample,
                           bool ok) {
        std::cerr << (ok ? "done " : "FAIL ") << model << " / " << dataset << " / r" << resample
                  << "\n";
        if (!ok) ++failures;
    };

    const auto records =
        mrms::run_benchmark(make_model_specs(args.models, args.tau), datasets, opts);
    if (records.empty()) {
        std::cerr << "error: no run succeeded\n";
        return 4;
    }
    try {
        write_file(out / "aggregate.csv", aggregate_csv(mrms::aggregate(records)));
    } catch (const mrms::DataError& e) {
        std::cerr << "warning: aggregate not written: " << e.what() << "\n";
    }
    std::cout << "journal: " << opts.journal_path << " (" << records.size() << " records, "
              << failures << " failures this run)\n";
    return 0;
}

// ---------------------------------------------------------------------------
// compare

struct CompareArgs {
    std::string journal;
    std::string metric = "acc";
    double alpha = 0.05;
    std::string out_dir;
    std::string models;  // optional comma subset
    bool iman_davenport = false;
};

mrms::AggregateTable load_journal_aggregate(const std::string& journal_path,
                                            const std::string& model_filter) {
    auto loaded = mrms::journal::load(journal_path);
    mrms::require_data(!loaded.records.empty(),
                       "journal " + journal_path + " has no successful records");
    std::vector<mrms::RunRecord> records;
    if (model_filter.empty()) {
        records = std::move(loaded.records);
    } else {
        std::set<std::string> keep;
        std::stringstream ss(model_filter);
        std::string name;
        while (std::getline(ss, name, ',')) keep.insert(name);
        for (auto& r : loaded.records)
            if (keep.count(r.model)) records.push_back(std::move(r));
        mrms::require_data(!records.empty(), "no journal records match --models " + model_filter);
    }
    return mrms::aggregate(records);
}

// Per-(model, dataset) means of one metric, oriented so higher is better.
mrms::ScoreMatrix score_matrix(const mrms::AggregateTable& table, const std::string& metric) {
    mrms::ScoreMatrix m;
    m.models = table.models;
    m.datasets = table.datasets;
    const double sign = mrms::metric_lower_is_better(metric) ? -1.0 : 1.0;
    m.scores.reserve(m.models.size() * m.datasets.size());
    for (const auto& d : m.datasets)
        for (const auto& model : m.models)
            m.scores.push_back(sign *
                               mrms::cell_metric(table.per_dataset.at({model, d}), metric));
    return m;
}

int cmd_compare(const CompareArgs& args) {
    mrms::require(args.alpha == 0.05 || args.alpha == 0.10, "--alpha must be 0.05 or 0.10");
    const auto table = load_journal_aggregate(args.journal, args.models);
    const auto matrix = score_matrix(table, args.metric);
    const auto report = mrms::ranking_report(matrix, args.alpha);
    const fs::path out(default_out_dir(args.out_dir));

    // ranks, sorted ascending (best first), ties broken by name
    std::vector<std::size_t> order(report.models.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        if (report.avg_ranks[a] != report.avg_ranks[b])
            return report.avg_ranks[a] < report.avg_ranks[b];
        return report.models[a] < report.models[b];
    });
    std::string ranks_csv = "model,avg_rank\n";
    for (std::size_t i : order)
        ranks_csv += report.models[i] + "," + mrms::format_double(report.avg_ranks[i]) + "\n";
    write_file(out / "ranks.csv", ranks_csv);

    std::string report_csv = "key,value\n";
    report_csv += "metric," + args.metric + "\n";
    report_csv += "n_models," + std::to_string(report.models.size()) + "\n";
    report_csv += "n_datasets," + std::to_string(report.n_datasets) + "\n";
    report_csv += "alpha," + mrms::format_double(report.alpha) + "\n";
    report_csv += "chi2_f," + mrms::format_double(report.friedman.chi2) + "\n";
    report_csv += "p_value," + mrms::format_double(report.friedman.p_value) + "\n";
    if (args.iman_davenport) {
        report_csv += "iman_davenport_f," + mrms::format_double(report.friedman.f_stat) + "\n";
        report_csv += "iman_davenport_p," + mrms::format_double(report.friedman.f_p_value) + "\n";
    }
    report_csv += "cd," + mrms::format_double(report.cd) + "\n";
    write_file(out / "report.csv", report_csv);

    std::string mcm_csv = "model_i,model_j,wins,ties,losses,mean_diff\n";
    const auto cells = mrms::multi_comparison_matrix(matrix);
    const std::size_t k = matrix.models.size();
    for (std::size_t i = 0; i < k; ++i)
        for (std::size_t j = 0; j < k; ++j) {
            if (i == j) continue;
            const auto& c = cells[i * k + j];
            mcm_csv += matrix.models[i] + "," + matrix.models[j] + "," + std::to_string(c.wins) +
                       "," + std::to_string(c.ties) + "," + std::to_string(c.losses) + "," +
                       mrms::format_double(c.mean_diff) + "\n";
        }
    write_file(out / "mcm.csv", mcm_csv);

    write_file(out / "cd_diagram.svg",
               mrms::svg::cd_diagram(report, "Average ranks (" + args.metric + ")"));

    std::cout << "compare: chi2_F=" << mrms::format_double(report.friedman.chi2)
              << " p=" << mrms::format_double(report.friedman.p_value)
              << " CD=" << mrms::format_double(report.cd) << " -> " << out.string() << "\n";
    return 0;
}

// ---------------------------------------------------------------------------
// pareto

struct ParetoArgs {
    std::string journal;
    std::string cost = "train_s";
    std::string score = "acc";
    std::string out_dir;
    std::string models;
};

int cmd_pareto(const ParetoArgs& args) {
    const auto table = load_journal_aggregate(args.journal, args.models);
    const fs::path out(default_out_dir(args.out_dir));

    std::vector<mrms::svg::ParetoPlotPoint> plot_points;
    std::vector<mrms::ParetoPoint> oriented;
    for (const auto& m : table.models) {
        const auto& cell = table.overall.at(m);
        mrms::svg::ParetoPlotPoint p;
        p.label = m;
        p.cost = mrms::cell_metric(cell, args.cost);
        p.score = mrms::cell_metric(cell, args.score);
        p.size = cell.auc.value_or(0.5);
        p.color = cell.nll;
        plot_points.push_back(p);
        oriented.push_back({mrms::metric_lower_is_better(args.cost) ? p.cost : -p.cost,
                            mrms::metric_lower_is_better(args.score) ? -p.score : p.score});
    }
    const auto frontier = mrms::pareto_frontier(oriented);
    std::vector<bool> on_frontier(plot_points.size(), false);
    for (std::size_t i : frontier) on_frontier[i] = true;

    // rows sorted by ascending raw cost, ties by model name
    std::vector<std::size_t> row_order(plot_points.size());
    for (std::size_t i = 0; i < row_order.size(); ++i) row_order[i] = i;
    std::sort(row_order.begin(), row_order.end(), [&](std::size_t a, std::size_t b) {
        if (plot_points[a].cost != plot_points[b].cost)
            return plot_points[a].cost < plot_points[b].cost;
        return plot_points[a].label < plot_points[b].label;
    });
    std::string csv = "model," + args.cost + "," + args.score + ",auc,nll,on_frontier\n";
    for (std::size_t i : row_order) {
        const auto& p = plot_points[i];
        csv += p.label + "," + mrms::format_double(p.cost) + "," + mrms::format_double(p.score) +
               "," + mrms::format_double(p.size) + "," + mrms::format_double(p.color) + "," +
               (on_frontier[i] ? "1" : "0") + "\n";
    }
    write_file(out / "pareto.csv", csv);
    write_file(out / "pareto.svg",
               mrms::svg::pareto_plot(plot_points, frontier, args.cost, args.score));

    std::cout << "pareto: " << frontier.size() << " of " << plot_points.size()
              << " models on the frontier -> " << out.string() << "\n";
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"multi-representation multi-scale time-series classification toolkit"};
    app.require_subcommand(1);

    TransformArgs targs;
    auto* transform = app.add_subcommand("transform", "compute representation stacks for a TSV");
    transform->add_option("--in", targs.input, "input TSV dataset")->required();
    transform->add_option("--reps", targs.reps,
                          "preset (raw|minimal|default) or comma list of representation names");
    transform->add_option("--out", targs.out_dir, "output directory (default $MRMS_OUT_DIR or .)");

    BenchArgs bargs;
    auto* bench = app.add_subcommand("bench", "run the benchmark sweep (resumable)");
    bench->add_option("--data", bargs.data_dir, "directory of *_TRAIN.tsv/*_TEST.tsv pairs")
        ->required();
    bench->add_option("--models", bargs.models, "comma list of models (mrms,lmrms)");
    bench->add_option("--reps", bargs.reps, "representation preset or comma list");
    bench->add_option("--resamples", bargs.resamples, "Monte-Carlo resamples per dataset");
    bench->add_option("--seed", bargs.seed, "base RNG seed");
    bench->add_option("--out", bargs.out_dir, "output directory (default $MRMS_OUT_DIR or .)");
    bench->add_option("--epochs", bargs.max_epochs, "maximum training epochs");
    bench->add_option("--patience", bargs.patience, "early-stopping patience");
    bench->add_option("--min-delta", bargs.min_delta, "early-stopping minimum improvement");
    bench->add_option("--batch", bargs.batch_size, "batch size (0 = auto from workload)");
    bench->add_option("--lr", bargs.lr, "Adam learning rate");
    bench->add_option("--tau", bargs.tau, "LMRMS early-exit confidence threshold");
    bench->add_option("--train-fraction", bargs.train_fraction,
                      "stratified train fraction (default: dataset's original ratio)");
    bench->add_option("--jobs", bargs.jobs, "parallel runs (default 1 for reproducibility)");

    CompareArgs cargs;
    auto* compare = app.add_subcommand("compare", "Friedman/Nemenyi analysis + CD diagram");
    compare->add_option("--journal", cargs.journal, "journal.jsonl from bench")->required();
    compare->add_option("--metric", cargs.metric, "ranking metric (acc,f1,auc,nll,...)");
    compare->add_option("--alpha", cargs.alpha, "significance level (0.05 or 0.10)");
    compare->add_option("--out", cargs.out_dir, "output directory (default $MRMS_OUT_DIR or .)");
    compare->add_option("--models", cargs.models, "optional comma subset of models");
    compare->add_flag("--iman-davenport", cargs.iman_davenport,
                      "also report the Iman-Davenport corrected statistic");

    ParetoArgs pargs;
    auto* pareto = app.add_subcommand("pareto", "Pareto cost/score analysis");
    pareto->add_option("--journal", pargs.journal, "journal.jsonl from bench")->required();
    pareto->add_option("--cost", pargs.cost, "cost metric (default train_s)");
    pareto->add_option("--score", pargs.score, "score metric (default acc)");
    pareto->add_option("--out", pargs.out_dir, "output directory (default $MRMS_OUT_DIR or .)");
    pareto->add_option("--models", pargs.models, "optional comma subset of models");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForVersion& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2;
    }

    try {
        if (transform->parsed()) return cmd_transform(targs);
        if (bench->parsed()) return cmd_bench(bargs);
        if (compare->parsed()) return cmd_compare(cargs);
        if (pareto->parsed()) return cmd_pareto(pargs);
        std::cerr << "error: no subcommand\n";
        return 2;
    } catch (const std::invalid_argument& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const mrms::DataError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 3;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 4;
    }
}
