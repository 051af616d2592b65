#pragma once

#include <cstddef>
#include <filesystem>
#include <span>
#include <vector>

#include "ovmix/config.hpp"
#include "ovmix/eval.hpp"

namespace ovmix {

// Fixed artifact layout inside a run directory.
struct RunPaths {
    std::filesystem::path out_dir;

    std::filesystem::path registry() const { return out_dir / "registry.json"; }
    std::filesystem::path train_samples() const { return out_dir / "train.json"; }
    std::filesystem::path eval_samples() const { return out_dir / "eval.json"; }
    std::filesystem::path config() const { return out_dir / "config.json"; }
    std::filesystem::path bce_head() const { return out_dir / "bce_head.json"; }
    std::filesystem::path proxy_head() const { return out_dir / "proxy_head.json"; }
    std::filesystem::path train_log() const { return out_dir / "train_log.csv"; }
    std::filesystem::path eval_report() const { return out_dir / "eval.csv"; }
    std::filesystem::path sweep() const { return out_dir / "sweep.csv"; }
    std::filesystem::path mix_report() const { return out_dir / "mix.csv"; }
    std::filesystem::path prototypes() const { return out_dir / "prototypes.json"; }
    std::filesystem::path similarity_base() const { return out_dir / "similarity_base.csv"; }
    std::filesystem::path similarity_proxy() const { return out_dir / "similarity_proxy.csv"; }
    std::filesystem::path hull() const { return out_dir / "hull.csv"; }
    std::filesystem::path analysis() const { return out_dir / "analysis.csv"; }
};

RunPaths run_paths(const RunConfig& cfg);

// Every run_* function validates the config, reads its inputs from the run
// directory, and writes byte-reproducible artifacts: JSON per the module
// interchange formats, CSV with a "# config=<hash> seed=<seed>" header line.

struct GenSummary {
    std::size_t n_base = 0;
    std::size_t n_novel = 0;
    std::size_t train_count = 0;
    std::size_t eval_count = 0;
};

// registry.json, train.json, eval.json, config.json.
GenSummary run_gen(const RunConfig& cfg);

struct TrainSummary {
    double final_bce = 0.0;
    double final_proxy = 0.0;
    int epochs = 0;
};

// bce_head.json, proxy_head.json, train_log.csv.
TrainSummary run_train(const RunConfig& cfg);

// eval.csv; returns the report.
EvalReport run_eval(const RunConfig& cfg);

// sweep.csv over the alpha x beta grid; returns the rows.
std::vector<SweepRow> run_sweep(const RunConfig& cfg, std::span<const double> alphas,
                                std::span<const double> betas);

struct MixRow {
    int index = 0;
    int class_i = 0;
    int class_j = 0;
    double lambda = 0.0;
    int nearest_novel_id = -1;    // -1 when the registry has no novel classes
    double nearest_novel_sim = 0.0;
};

// mix.csv: pairs drawn per the configured strategy from the registry's base
// classes (rng stage "mix"), with each textual mix's nearest novel class.
// When dump_prototypes is set, additionally embeds train.json through
// proxy_head.json and writes per-class prototypes to prototypes.json in
// registry format.
std::vector<MixRow> run_mix(const RunConfig& cfg, bool dump_prototypes);

struct AnalyzeSummary {
    double base_mean_max_sim = 0.0;   // mean over novels of max cosine to a base class
    double proxy_mean_max_sim = 0.0;  // same against the sampled proxy set
    double max_sim_gap = 0.0;         // proxy_mean_max_sim - base_mean_max_sim
    double base_mean_sim = 0.0;
    double proxy_mean_sim = 0.0;
    double mean_hull_residual = 0.0;
    double max_hull_residual = 0.0;
};

// similarity_base.csv, similarity_proxy.csv, hull.csv, analysis.csv. The
// proxy set is n_proxies textual mixes of uniformly drawn base pairs with the
// configured lambda sampler (rng stage "analyze").
AnalyzeSummary run_analyze(const RunConfig& cfg, std::size_t n_proxies, std::size_t bins);

}  // namespace ovmix
