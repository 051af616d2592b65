// End-to-end checks of the command line binary: exit codes, artifact layout,
// and byte-level reproducibility of the emitted files.
#include "doctest.h"
#include "oracles.hpp"

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <sys/wait.h>
#include <vector>

namespace fs = std::filesystem;

namespace {

int run_cli(const std::string& args) {
    const std::string cmd = std::string(OVMIX_CLI_BIN) + " " + args + " > /dev/null 2>&1";
    const int status = std::system(cmd.c_str());
    REQUIRE(status != -1);
    REQUIRE(WIFEXITED(status));
    return WEXITSTATUS(status);
}

int run_cli_capture(const std::string& args, const fs::path& log) {
    const std::string cmd = std::string(OVMIX_CLI_BIN) + " " + args + " > " +
                            log.string() + " 2>&1";
    const int status = std::system(cmd.c_str());
    REQUIRE(status != -1);
    REQUIRE(WIFEXITED(status));
    return WEXITSTATUS(status);
}

void write_file(const fs::path& path, const std::string& body) {
    std::ofstream out(path, std::ios::binary);
    REQUIRE(out.good());
    out << body;
}

// Small benchmark so the pipeline tests stay fast.
const char* kTinyConfig = R"({
  "name": "tiny",
  "seed": 7,
  "data.embedding_dim": 8,
  "data.feature_dim": 12,
  "data.n_base": 4,
  "data.n_novel": 2,
  "data.samples_per_class": 8,
  "train.epochs": 3,
  "train.batch_size": 16
})";

std::vector<std::string> split_csv_row(const std::string& line) {
    std::vector<std::string> cells;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) cells.push_back(cell);
    return cells;
}

std::vector<std::string> read_lines(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    REQUIRE(in.good());
    std::vector<std::string> lines;
    std::string line;
    while (std::getline(in, line)) lines.push_back(line);
    return lines;
}

}  // namespace

TEST_CASE("cli usage errors exit with code 2") {
    oracles::TempDir tmp("cli_usage");
    CHECK(run_cli("gen") == 2);                       // missing required --out
    CHECK(run_cli("definitely-not-a-command") == 2);  // unknown subcommand
    CHECK(run_cli("gen --out " + tmp.path.string() + " --no-such-flag") == 2);
    CHECK(run_cli("--help") == 0);
    CHECK(run_cli("gen --help") == 0);
}

TEST_CASE("cli domain errors exit with code 1 and report to stderr") {
    oracles::TempDir tmp("cli_domain");
    const fs::path cfg = tmp.path / "bad.json";
    write_file(cfg, R"({"data.n_base": 1})");
    const fs::path log = tmp.path / "log.txt";
    const std::string out = (tmp.path / "run").string();
    CHECK(run_cli_capture("gen --config " + cfg.string() + " --out " + out, log) == 1);
    CHECK(oracles::read_file(log).find("error:") != std::string::npos);

    // eval in a directory with no artifacts: file-not-found is a domain error
    CHECK(run_cli("eval --out " + (tmp.path / "empty").string()) == 1);

    // unknown config key
    const fs::path cfg2 = tmp.path / "unknown.json";
    write_file(cfg2, R"({"make_it_fast": true})");
    CHECK(run_cli("gen --config " + cfg2.string() + " --out " + out) == 1);
}

TEST_CASE("cli full pipeline produces the documented artifacts") {
    oracles::TempDir tmp("cli_pipeline");
    const fs::path cfg = tmp.path / "tiny.json";
    write_file(cfg, kTinyConfig);
    const std::string base = "--config " + cfg.string() + " --out " +
                             (tmp.path / "run").string();

    REQUIRE(run_cli("gen " + base) == 0);
    REQUIRE(run_cli("train " + base) == 0);
    REQUIRE(run_cli("eval " + base) == 0);
    REQUIRE(run_cli("fuse-sweep " + base + " --alphas 0,0.5,1 --betas 0,0.5,1") == 0);
    REQUIRE(run_cli("mix " + base + " --dump-prototypes") == 0);
    REQUIRE(run_cli("analyze " + base) == 0);

    const fs::path run = tmp.path / "run";
    for (const char* name : {"registry.json", "train.json", "eval.json", "config.json",
                             "bce_head.json", "proxy_head.json", "train_log.csv",
                             "eval.csv", "sweep.csv", "mix.csv", "prototypes.json",
                             "similarity_base.csv", "similarity_proxy.csv", "hull.csv",
                             "analysis.csv"}) {
        CAPTURE(name);
        CHECK(fs::exists(run / name));
    }

    // train_log.csv: hash header, column header, one row per epoch
    const auto log_lines = read_lines(run / "train_log.csv");
    REQUIRE(log_lines.size() == 2 + 3);
    CHECK(log_lines[0].rfind("# config=", 0) == 0);
    CHECK(log_lines[0].find("proxy_variant=l1") != std::string::npos);
    CHECK(log_lines[1] == "epoch,bce_loss,proxy_loss");
    CHECK(split_csv_row(log_lines[2])[0] == "1");

    // eval.csv: 3 aggregate rows + one row per class
    const auto eval_lines = read_lines(run / "eval.csv");
    REQUIRE(eval_lines.size() == 2 + 3 + 6);
    CHECK(eval_lines[1] == "scope,id,name,total,correct,top1");

    // sweep.csv: 3x3 grid rows, alpha-major
    const auto sweep_lines = read_lines(run / "sweep.csv");
    REQUIRE(sweep_lines.size() == 2 + 9);
    CHECK(sweep_lines[1] == "alpha,beta,base_top1,novel_top1,overall_top1");
    CHECK(split_csv_row(sweep_lines[2])[0] == "0");
    CHECK(split_csv_row(sweep_lines[2])[1] == "0");
    CHECK(split_csv_row(sweep_lines.back())[0] == "1");

    // mix.csv carries the sampler/strategy in its header plus pair rows
    const auto mix_lines = read_lines(run / "mix.csv");
    REQUIRE(mix_lines.size() > 2);
    CHECK(mix_lines[0].find("sampler=beta:1") != std::string::npos);
    CHECK(mix_lines[0].find("pair_strategy=random") != std::string::npos);
    CHECK(mix_lines[1] == "index,class_i,class_j,lambda,nearest_novel_id,nearest_novel_sim");

    // analysis.csv: single data row, novel column strictly above base column
    const auto ana_lines = read_lines(run / "analysis.csv");
    REQUIRE(ana_lines.size() == 3);
    const auto cols = split_csv_row(ana_lines[1]);
    const auto vals = split_csv_row(ana_lines[2]);
    REQUIRE(cols.size() == vals.size());
    double base_sim = -1.0, proxy_sim = -1.0;
    for (std::size_t i = 0; i < cols.size(); ++i) {
        if (cols[i] == "base_mean_max_sim") base_sim = std::stod(vals[i]);
        if (cols[i] == "proxy_mean_max_sim") proxy_sim = std::stod(vals[i]);
    }
    REQUIRE(base_sim >= 0.0);
    REQUIRE(proxy_sim >= 0.0);
    CHECK(proxy_sim > base_sim);

    // prototypes.json parses as a registry-shaped document with base rows
    const auto proto = oracles::read_file(run / "prototypes.json");
    CHECK(proto.find("\"group\":\"base\"") != std::string::npos);
}

TEST_CASE("cli generation and training are byte reproducible") {
    oracles::TempDir tmp("cli_repro");
    const fs::path cfg = tmp.path / "tiny.json";
    write_file(cfg, kTinyConfig);
    const std::string out_a = (tmp.path / "a").string();
    const std::string out_b = (tmp.path / "b").string();
    const std::string cfg_arg = "--config " + cfg.string();

    for (const std::string& out : {out_a, out_b}) {
        REQUIRE(run_cli("gen " + cfg_arg + " --out " + out) == 0);
        REQUIRE(run_cli("train " + cfg_arg + " --out " + out) == 0);
        REQUIRE(run_cli("eval " + cfg_arg + " --out " + out) == 0);
    }
    for (const char* name : {"registry.json", "train.json", "eval.json", "config.json",
                             "bce_head.json", "proxy_head.json", "train_log.csv",
                             "eval.csv"}) {
        CAPTURE(name);
        CHECK(oracles::read_file(fs::path(out_a) / name) ==
              oracles::read_file(fs::path(out_b) / name));
    }
}

TEST_CASE("cli flag overrides reach the artifacts") {
    oracles::TempDir tmp("cli_flags");
    const fs::path cfg = tmp.path / "tiny.json";
    write_file(cfg, kTinyConfig);
    const std::string out = (tmp.path / "run").string();
    const std::string base = "--config " + cfg.string() + " --out " + out;

    REQUIRE(run_cli("gen " + base) == 0);
    REQUIRE(run_cli("train " + base + " --proxy-variant cosine") == 0);
    const auto log_lines = read_lines(fs::path(out) / "train_log.csv");
    CHECK(log_lines[0].find("proxy_variant=cosine") != std::string::npos);

    // --seed changes the generated data
    const std::string out2 = (tmp.path / "run2").string();
    REQUIRE(run_cli("gen " + base) == 0);
    REQUIRE(run_cli("gen --config " + cfg.string() + " --out " + out2 + " --seed 9") == 0);
    CHECK(oracles::read_file(fs::path(out) / "registry.json") !=
          oracles::read_file(fs::path(out2) / "registry.json"));

    // --preset long-tail is shorthand for alpha 0.15 / beta 0.35
    REQUIRE(run_cli("train " + base) == 0);
    REQUIRE(run_cli("eval " + base + " --preset long-tail") == 0);
    const std::string preset_eval = oracles::read_file(fs::path(out) / "eval.csv");
    REQUIRE(run_cli("eval " + base + " --alpha 0.15 --beta 0.35") == 0);
    const std::string manual_eval = oracles::read_file(fs::path(out) / "eval.csv");
    CHECK(preset_eval == manual_eval);
}

TEST_CASE("cli eval with zero exponents ignores the proxy head bitwise") {
    oracles::TempDir tmp("cli_zero_exp");
    const fs::path cfg = tmp.path / "tiny.json";
    write_file(cfg, kTinyConfig);
    const std::string out_a = (tmp.path / "a").string();
    const std::string out_b = (tmp.path / "b").string();
    const std::string cfg_arg = "--config " + cfg.string();

    REQUIRE(run_cli("gen " + cfg_arg + " --out " + out_a) == 0);
    REQUIRE(run_cli("train " + cfg_arg + " --out " + out_a) == 0);
    // second run with a different training seed: same shapes, different weights
    REQUIRE(run_cli("gen " + cfg_arg + " --out " + out_b) == 0);
    REQUIRE(run_cli("train " + cfg_arg + " --out " + out_b + " --seed 21") == 0);
    REQUIRE(oracles::read_file(fs::path(out_a) / "proxy_head.json") !=
            oracles::read_file(fs::path(out_b) / "proxy_head.json"));

    const std::string eval_args = "eval " + cfg_arg + " --out " + out_a +
                                  " --alpha 0 --beta 0";
    REQUIRE(run_cli(eval_args) == 0);
    const std::string before = oracles::read_file(fs::path(out_a) / "eval.csv");

    fs::copy_file(fs::path(out_b) / "proxy_head.json",
                  fs::path(out_a) / "proxy_head.json",
                  fs::copy_options::overwrite_existing);
    REQUIRE(run_cli(eval_args) == 0);
    const std::string after = oracles::read_file(fs::path(out_a) / "eval.csv");
    CHECK(before == after);
}
