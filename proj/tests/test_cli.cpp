#include <catch2/catch_amalgamated.hpp>

#include <cstdlib>
#include <fstream>

#include "helpers.hpp"
#include "mrms/dataset.hpp"

using namespace mrms;

namespace {

#ifndef MRMS_CLI_PATH
#error "MRMS_CLI_PATH must be defined"
#endif

struct CmdResult {
    int exit_code = -1;
    std::string out;
    std::string err;
};

CmdResult run_cli(const std::string& args, const std::string& env = "") {
    auto dir = oracle::make_temp_dir("cli_io");
    const std::string out_path = (dir / "out").string();
    const std::string err_path = (dir / "err").string();
    std::string cmd = env.empty() ? "" : env + " ";
    cmd += std::string(MRMS_CLI_PATH) + " " + args + " > " + out_path + " 2> " + err_path;
    const int status = std::system(cmd.c_str());
    CmdResult res;
    res.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    res.out = oracle::read_file(out_path);
    res.err = oracle::read_file(err_path);
    std::filesystem::remove_all(dir);
    return res;
}

// Writes a TRAIN/TEST pair by splitting a synthetic dataset.
void write_pair(const std::filesystem::path& dir, const std::string& name, const Dataset& ds,
                std::size_t n_train) {
    Dataset train, test;
    train.name = test.name = name;
    train.length = test.length = ds.length;
    train.num_classes = test.num_classes = ds.num_classes;
    for (std::size_t i = 0; i < ds.size(); ++i)
        (i < n_train ? train : test).series.push_back(ds.series[i]);
    save_tsv((dir / (name + "_TRAIN.tsv")).string(), train);
    save_tsv((dir / (name + "_TEST.tsv")).string(), test);
}

std::filesystem::path make_toy_data(const std::string& tag) {
    auto dir = oracle::make_temp_dir(tag);
    write_pair(dir, "sines", make_synthetic("two_sines", 12, 32, 101), 8);
    write_pair(dir, "trend", make_synthetic("noise_vs_trend", 12, 32, 202), 8);
    return dir;
}

int count_lines(const std::string& text) {
    int n = 0;
    for (char c : text) n += c == '\n';
    return n;
}

const std::string kFastFlags = " --epochs 2 --patience 1 --resamples 3 --seed 7";

}  // namespace

TEST_CASE("cli transform") {
    auto data = make_toy_data("cli_tr");
    auto out1 = oracle::make_temp_dir("cli_tr_o1");
    auto out2 = oracle::make_temp_dir("cli_tr_o2");
    const std::string in = (data / "sines_TRAIN.tsv").string();

    SECTION("produces the requested channels, deterministically") {
        auto r1 = run_cli("transform --in " + in + " --reps TIME,DT1 --out " + out1.string());
        REQUIRE(r1.exit_code == 0);
        const std::string stacks = oracle::read_file(out1 / "stacks.tsv");
        REQUIRE(count_lines(stacks) == 8 * 2);  // 8 series x 2 channels
        const std::string manifest = oracle::read_file(out1 / "manifest.txt");
        REQUIRE(manifest.find("kinds=TIME,DT1") != std::string::npos);

        auto r2 = run_cli("transform --in " + in + " --reps TIME,DT1 --out " + out2.string());
        REQUIRE(r2.exit_code == 0);
        REQUIRE(oracle::read_file(out2 / "stacks.tsv") == stacks);
        REQUIRE(oracle::read_file(out2 / "manifest.txt") == manifest);
    }
    SECTION("unknown representation exits 2 listing valid names") {
        auto r = run_cli("transform --in " + in + " --reps TIME,WAVELETS --out " + out1.string());
        REQUIRE(r.exit_code == 2);
        REQUIRE(r.err.find("FFT_MAG") != std::string::npos);
    }
    SECTION("missing input exits 3 with a diagnostic") {
        auto r = run_cli("transform --in /nonexistent.tsv --out " + out1.string());
        REQUIRE(r.exit_code == 3);
        REQUIRE(!r.err.empty());
    }
    SECTION("bad flag exits 2") {
        auto r = run_cli("transform --in " + in + " --bogus x");
        REQUIRE(r.exit_code == 2);
    }
    SECTION("env var provides the default output directory") {
        auto r = run_cli("transform --in " + in + " --reps TIME",
                         "MRMS_OUT_DIR=" + out1.string());
        REQUIRE(r.exit_code == 0);
        REQUIRE(std::filesystem::exists(out1 / "stacks.tsv"));
    }
    std::filesystem::remove_all(data);
    std::filesystem::remove_all(out1);
    std::filesystem::remove_all(out2);
}

TEST_CASE("cli bench + compare + pareto pipeline") {
    auto data = make_toy_data("cli_bench");
    auto out = oracle::make_temp_dir("cli_bench_out");

    auto bench = run_cli("bench --data " + data.string() + " --out " + out.string() + kFastFlags);
    CAPTURE(bench.err);
    REQUIRE(bench.exit_code == 0);

    const std::string journal = oracle::read_file(out / "journal.jsonl");
    REQUIRE(count_lines(journal) == 12);  // 2 models x 2 datasets x 3 resamples

    const std::string agg = oracle::read_file(out / "aggregate.csv");
    REQUIRE(count_lines(agg) == 1 + 2 * 6);  // header + models x metrics

    SECTION("rerun resumes: journal is byte-identical") {
        auto again =
            run_cli("bench --data " + data.string() + " --out " + out.string() + kFastFlags);
        REQUIRE(again.exit_code == 0);
        REQUIRE(oracle::read_file(out / "journal.jsonl") == journal);
        REQUIRE(oracle::read_file(out / "aggregate.csv") == agg);
    }
    SECTION("compare emits ranks, report, matrix, and a deterministic SVG") {
        auto c1 = oracle::make_temp_dir("cli_cmp1");
        auto c2 = oracle::make_temp_dir("cli_cmp2");
        auto r1 = run_cli("compare --journal " + (out / "journal.jsonl").string() + " --out " +
                          c1.string());
        CAPTURE(r1.err);
        REQUIRE(r1.exit_code == 0);
        for (const char* f : {"ranks.csv", "report.csv", "mcm.csv", "cd_diagram.svg"})
            REQUIRE(std::filesystem::exists(c1 / f));
        REQUIRE(count_lines(oracle::read_file(c1 / "ranks.csv")) == 3);  // header + 2 models

        auto r2 = run_cli("compare --journal " + (out / "journal.jsonl").string() + " --out " +
                          c2.string());
        REQUIRE(r2.exit_code == 0);
        for (const char* f : {"ranks.csv", "report.csv", "mcm.csv", "cd_diagram.svg"})
            REQUIRE(oracle::read_file(c1 / f) == oracle::read_file(c2 / f));

        // lower-is-better metric works via negated ranking
        auto rn = run_cli("compare --journal " + (out / "journal.jsonl").string() +
                          " --metric nll --out " + c1.string());
        REQUIRE(rn.exit_code == 0);
        std::filesystem::remove_all(c1);
        std::filesystem::remove_all(c2);
    }
    SECTION("pareto emits sorted CSV and SVG") {
        auto p1 = oracle::make_temp_dir("cli_par1");
        auto r = run_cli("pareto --journal " + (out / "journal.jsonl").string() + " --out " +
                         p1.string());
        CAPTURE(r.err);
        REQUIRE(r.exit_code == 0);
        const std::string csv = oracle::read_file(p1 / "pareto.csv");
        REQUIRE(count_lines(csv) == 3);  // header + 2 models
        // rows sorted by ascending cost
        std::stringstream ss(csv);
        std::string line;
        std::getline(ss, line);  // header
        double prev = -1.0;
        while (std::getline(ss, line)) {
            auto c1 = line.find(',');
            auto c2 = line.find(',', c1 + 1);
            const double cost = std::stod(line.substr(c1 + 1, c2 - c1 - 1));
            REQUIRE(cost >= prev);
            prev = cost;
        }
        REQUIRE(std::filesystem::exists(p1 / "pareto.svg"));
        std::filesystem::remove_all(p1);
    }
    SECTION("incomplete grid exits 3 listing missing keys") {
        // split journal: drop one line
        auto broken = oracle::make_temp_dir("cli_broken");
        std::stringstream ss(journal);
        std::string line;
        std::vector<std::string> lines;
        while (std::getline(ss, line)) lines.push_back(line);
        std::ofstream outj(broken / "journal.jsonl");
        for (std::size_t i = 0; i + 1 < lines.size(); ++i) outj << lines[i] << "\n";
        outj.close();
        auto r = run_cli("compare --journal " + (broken / "journal.jsonl").string() + " --out " +
                         broken.string());
        REQUIRE(r.exit_code == 3);
        REQUIRE(r.err.find("missing") != std::string::npos);
        std::filesystem::remove_all(broken);
    }
    std::filesystem::remove_all(data);
    std::filesystem::remove_all(out);
}

TEST_CASE("cli bench honors predefined index files") {
    auto dir = oracle::make_temp_dir("cli_idx");
    write_pair(dir, "sines", make_synthetic("two_sines", 12, 32, 303), 8);
    {
        std::ofstream idx(dir / "sines_INDICES.json");
        idx << R"({"resample": 0, "train": [0,1,2,3,4,5], "test": [6,7,8,9,10,11]})" << "\n";
        idx << R"({"resample": 1, "train": [6,7,8,9,10,11], "test": [0,1,2,3,4,5]})" << "\n";
    }
    auto out = oracle::make_temp_dir("cli_idx_out");
    // --resamples 5 must be ignored in favor of the file's 2 records
    auto r = run_cli("bench --data " + dir.string() + " --models lmrms --out " + out.string() +
                     " --epochs 2 --patience 1 --resamples 5 --seed 1");
    CAPTURE(r.err);
    REQUIRE(r.exit_code == 0);
    REQUIRE(count_lines(oracle::read_file(out / "journal.jsonl")) == 2);
    std::filesystem::remove_all(dir);
    std::filesystem::remove_all(out);
}
