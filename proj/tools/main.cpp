#include <cstdint>
#include <cstdio>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "ovmix/config.hpp"
#include "ovmix/error.hpp"
#include "ovmix/experiment.hpp"

namespace {

struct Flags {
    std::string config_path;
    std::string out;
    std::string name;
    std::uint64_t seed = 0;
    double alpha = 0.0;
    double beta = 0.0;
    std::string positivity;
    std::string preset;
    std::string sampler;
    std::string pair_strategy;
    std::string granularity;
    std::string weighting;
    std::string variant;
    std::string alphas;
    std::string betas;
    bool dump_prototypes = false;
    std::size_t proxies = 500;
    std::size_t bins = 40;
};

void add_common(CLI::App* sub, Flags& f) {
    sub->add_option("--config", f.config_path, "Flat dotted-key JSON config file");
    sub->add_option("--out", f.out, "Run directory for all artifacts")->required();
    sub->add_option("--seed", f.seed, "Experiment seed (overrides the config file)");
    sub->add_option("--name", f.name, "Experiment name");
    sub->add_option("--proxy-variant", f.variant, "Proxy loss variant: l1, l2, cosine");
    sub->add_option("--weighting", f.weighting,
                    "Prototype weighting: centroid, softmax_iou, softmax_objectness");
    sub->add_option("--sampler", f.sampler, "Lambda sampler: beta:G, bernoulli:P, fixed:L");
    sub->add_option("--pair-strategy", f.pair_strategy,
                    "Pair selection: random, novel-nearest");
    sub->add_option("--granularity", f.granularity, "Mixup granularity: class, instance");
}

void add_fusion(CLI::App* sub, Flags& f) {
    sub->add_option("--alpha", f.alpha, "Fusion exponent on base classes, in [0, 1]");
    sub->add_option("--beta", f.beta, "Fusion exponent on novel classes, in [0, 1]");
    sub->add_option("--positivity", f.positivity,
                    "Score transform: logistic:SCALE or shift_clamp:EPS");
    sub->add_option("--preset", f.preset,
                    "Fusion operating point: default (0.45/0.65) or long-tail (0.15/0.35)");
}

std::vector<double> parse_grid(const std::string& text, const char* what) {
    std::vector<double> out;
    std::size_t pos = 0;
    while (pos <= text.size()) {
        const std::size_t comma = std::min(text.find(',', pos), text.size());
        const std::string tok = text.substr(pos, comma - pos);
        char* end = nullptr;
        const double v = std::strtod(tok.c_str(), &end);
        if (tok.empty() || end == tok.c_str() || *end != '\0') {
            throw ovmix::ConfigError(std::string(what) + ": bad grid entry \"" + tok + "\"");
        }
        out.push_back(v);
        pos = comma + 1;
    }
    return out;
}

std::vector<double> default_grid() {
    std::vector<double> g;
    for (int i = 0; i <= 10; ++i) g.push_back(static_cast<double>(i) / 10.0);
    return g;
}

bool supplied(const CLI::App* sub, const std::string& name) {
    const CLI::Option* opt = sub->get_option_no_throw(name);
    return opt != nullptr && opt->count() > 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Open-vocabulary class mixing workbench: synthetic benchmarks, two-head "
                 "training with proxy classes, score fusion, and embedding-space analyses"};
    app.require_subcommand(1);
    Flags f;

    CLI::App* gen = app.add_subcommand("gen", "Generate a seeded synthetic benchmark");
    CLI::App* train = app.add_subcommand("train", "Train the bce and proxy heads");
    CLI::App* eval_cmd = app.add_subcommand("eval", "Evaluate fused scores on the eval split");
    CLI::App* sweep = app.add_subcommand("fuse-sweep", "Grid-sweep the fusion exponents");
    CLI::App* mix = app.add_subcommand("mix", "Report sampled proxy pairs on the text side");
    CLI::App* analyze =
        app.add_subcommand("analyze", "Similarity histograms and hull proximity of novels");

    for (CLI::App* sub : {gen, train, eval_cmd, sweep, mix, analyze}) add_common(sub, f);
    add_fusion(eval_cmd, f);
    add_fusion(sweep, f);
    sweep->add_option("--alphas", f.alphas, "Comma-separated alpha grid (default 0,0.1,...,1)");
    sweep->add_option("--betas", f.betas, "Comma-separated beta grid (default 0,0.1,...,1)");
    mix->add_flag("--dump-prototypes", f.dump_prototypes,
                  "Also embed train samples through the proxy head and write prototypes.json");
    analyze->add_option("--proxies", f.proxies, "Number of sampled proxy embeddings");
    analyze->add_option("--bins", f.bins, "Histogram bins over [-1, 1]");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        if (e.get_exit_code() == 0) return app.exit(e);  // --help / --version
        app.exit(e);
        return 2;  // usage error
    }

    CLI::App* sub = app.get_subcommands().front();
    try {
        ovmix::RunConfig cfg;
        if (supplied(sub, "--config")) cfg = ovmix::load_run_config(f.config_path);
        if (supplied(sub, "--preset")) {
            if (f.preset == "default") {
                cfg.fusion = ovmix::FusionParams{};
            } else if (f.preset == "long-tail" || f.preset == "long_tail") {
                cfg.fusion = ovmix::long_tail_preset();
            } else {
                throw ovmix::ConfigError("unknown preset \"" + f.preset + "\"");
            }
        }
        if (supplied(sub, "--seed")) {
            ovmix::set_config_entry(cfg, "seed", std::to_string(f.seed));
        }
        if (supplied(sub, "--name")) ovmix::set_config_entry(cfg, "name", f.name);
        if (supplied(sub, "--sampler")) ovmix::set_config_entry(cfg, "mix.sampler", f.sampler);
        if (supplied(sub, "--pair-strategy")) {
            ovmix::set_config_entry(cfg, "mix.pair_strategy", f.pair_strategy);
        }
        if (supplied(sub, "--granularity")) {
            ovmix::set_config_entry(cfg, "mix.granularity", f.granularity);
        }
        if (supplied(sub, "--weighting")) ovmix::set_config_entry(cfg, "weighting.mode", f.weighting);
        if (supplied(sub, "--proxy-variant")) {
            ovmix::set_config_entry(cfg, "loss.proxy_variant", f.variant);
        }
        if (supplied(sub, "--alpha")) cfg.fusion.alpha = f.alpha;
        if (supplied(sub, "--beta")) cfg.fusion.beta = f.beta;
        if (supplied(sub, "--positivity")) {
            cfg.fusion.positivity = ovmix::positivity_from_string(f.positivity);
        }
        cfg.out_dir = f.out;

        const ovmix::RunPaths paths = ovmix::run_paths(cfg);
        if (sub == gen) {
            const ovmix::GenSummary s = ovmix::run_gen(cfg);
            std::printf("benchmark: %zu base + %zu novel classes, %zu train / %zu eval samples\n",
                        s.n_base, s.n_novel, s.train_count, s.eval_count);
            std::printf("wrote %s\n", paths.registry().string().c_str());
            std::printf("wrote %s\n", paths.train_samples().string().c_str());
            std::printf("wrote %s\n", paths.eval_samples().string().c_str());
            std::printf("wrote %s\n", paths.config().string().c_str());
        } else if (sub == train) {
            const ovmix::TrainSummary s = ovmix::run_train(cfg);
            std::printf("trained %d epochs: bce_loss=%.6f proxy_loss=%.6f\n", s.epochs,
                        s.final_bce, s.final_proxy);
            std::printf("wrote %s\n", paths.bce_head().string().c_str());
            std::printf("wrote %s\n", paths.proxy_head().string().c_str());
            std::printf("wrote %s\n", paths.train_log().string().c_str());
        } else if (sub == eval_cmd) {
            const ovmix::EvalReport r = ovmix::run_eval(cfg);
            std::printf("alpha=%.4f beta=%.4f positivity=%s\n", r.alpha, r.beta,
                        r.positivity.c_str());
            std::printf("base_top1=%.6f novel_top1=%.6f overall_top1=%.6f\n", r.base_top1,
                        r.novel_top1, r.overall_top1);
            std::printf("wrote %s\n", paths.eval_report().string().c_str());
        } else if (sub == sweep) {
            const std::vector<double> alphas =
                supplied(sub, "--alphas") ? parse_grid(f.alphas, "--alphas") : default_grid();
            const std::vector<double> betas =
                supplied(sub, "--betas") ? parse_grid(f.betas, "--betas") : default_grid();
            const std::vector<ovmix::SweepRow> rows = ovmix::run_sweep(cfg, alphas, betas);
            const ovmix::SweepRow* best = &rows.front();
            for (const ovmix::SweepRow& r : rows) {
                if (r.novel_top1 > best->novel_top1) best = &r;
            }
            std::printf("%zu grid points; best novel_top1=%.6f at alpha=%.2f beta=%.2f\n",
                        rows.size(), best->novel_top1, best->alpha, best->beta);
            std::printf("wrote %s\n", paths.sweep().string().c_str());
        } else if (sub == mix) {
            const std::vector<ovmix::MixRow> rows = ovmix::run_mix(cfg, f.dump_prototypes);
            std::printf("sampled %zu proxy pairs\n", rows.size());
            std::printf("wrote %s\n", paths.mix_report().string().c_str());
            if (f.dump_prototypes) {
                std::printf("wrote %s\n", paths.prototypes().string().c_str());
            }
        } else if (sub == analyze) {
            const ovmix::AnalyzeSummary s = ovmix::run_analyze(cfg, f.proxies, f.bins);
            std::printf("mean max similarity to novels: base=%.6f proxy=%.6f gap=%.6f\n",
                        s.base_mean_max_sim, s.proxy_mean_max_sim, s.max_sim_gap);
            std::printf("hull residual: mean=%.6f max=%.6f\n", s.mean_hull_residual,
                        s.max_hull_residual);
            std::printf("wrote %s\n", paths.similarity_base().string().c_str());
            std::printf("wrote %s\n", paths.similarity_proxy().string().c_str());
            std::printf("wrote %s\n", paths.hull().string().c_str());
            std::printf("wrote %s\n", paths.analysis().string().c_str());
        }
    } catch (const ovmix::Error& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
    return 0;
}
