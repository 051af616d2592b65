#include "ovmix/experiment.hpp"

#include <cmath>
#include <limits>
#include <map>
#include <system_error>
#include <utility>

#include "jsonfmt.hpp"
#include "ovmix/error.hpp"
#include "ovmix/mixer.hpp"
#include "ovmix/prototype.hpp"
#include "ovmix/rng.hpp"

namespace ovmix {

namespace {

std::string csv_header(const RunConfig& cfg) {
    return "# config=" + config_hash_hex(cfg) + " seed=" + std::to_string(cfg.seed);
}

void ensure_out_dir(const RunConfig& cfg) {
    std::error_code ec;
    std::filesystem::create_directories(cfg.out_dir, ec);
    if (ec) {
        throw IoError("cannot create output directory " + cfg.out_dir.string() + ": " +
                      ec.message());
    }
}

ClassRegistry load_run_registry(const RunPaths& p) {
    return load_registry(p.registry()).registry;
}

}  // namespace

RunPaths run_paths(const RunConfig& cfg) {
    return RunPaths{cfg.out_dir};
}

GenSummary run_gen(const RunConfig& cfg) {
    validate(cfg);
    ensure_out_dir(cfg);
    const RunPaths p = run_paths(cfg);
    const Benchmark bench = gen_benchmark(cfg.data);
    save_registry(bench.registry, p.registry());
    save_samples(bench.train, p.train_samples());
    save_samples(bench.eval, p.eval_samples());
    detail::write_text_file(p.config(), canonical_dump(cfg));
    return GenSummary{bench.registry.count_of(ClassGroup::base),
                      bench.registry.count_of(ClassGroup::novel), bench.train.size(),
                      bench.eval.size()};
}

TrainSummary run_train(const RunConfig& cfg) {
    validate(cfg);
    ensure_out_dir(cfg);
    const RunPaths p = run_paths(cfg);
    const ClassRegistry registry = load_run_registry(p);
    const std::vector<RegionSample> train_samples = load_samples(p.train_samples());
    const FitResult fr = fit(cfg.train, registry, train_samples);
    save_head(fr.bce_head, p.bce_head());
    save_head(fr.proxy_head, p.proxy_head());

    std::string csv = csv_header(cfg) +
                      " proxy_variant=" + to_string(cfg.train.loss.proxy_variant) + "\n";
    csv += "epoch,bce_loss,proxy_loss\n";
    for (const EpochLog& row : fr.log) {
        csv += std::to_string(row.epoch) + ',' + detail::fmt_double(row.bce_loss) + ',' +
               detail::fmt_double(row.proxy_loss) + '\n';
    }
    detail::write_text_file(p.train_log(), csv);
    return TrainSummary{fr.log.back().bce_loss, fr.log.back().proxy_loss,
                        static_cast<int>(fr.log.size())};
}

EvalReport run_eval(const RunConfig& cfg) {
    validate(cfg);
    ensure_out_dir(cfg);
    const RunPaths p = run_paths(cfg);
    const ClassRegistry registry = load_run_registry(p);
    const std::vector<RegionSample> eval_samples = load_samples(p.eval_samples());
    const HeadParams proxy_head = load_head(p.proxy_head());
    const HeadParams bce_head = load_head(p.bce_head());
    const EvalReport rep = evaluate(proxy_head, bce_head, eval_samples, registry, cfg.fusion);

    std::string csv = csv_header(cfg) + " alpha=" + detail::fmt_double(rep.alpha) +
                      " beta=" + detail::fmt_double(rep.beta) + " positivity=" + rep.positivity +
                      "\n";
    csv += "scope,id,name,total,correct,top1\n";
    const auto group_row = [&](const char* name, std::size_t total, std::size_t correct,
                               double top1) {
        csv += std::string("group,-1,") + name + ',' + std::to_string(total) + ',' +
               std::to_string(correct) + ',' + detail::fmt_double(top1) + '\n';
    };
    group_row("base", rep.base_total, rep.base_correct, rep.base_top1);
    group_row("novel", rep.novel_total, rep.novel_correct, rep.novel_top1);
    group_row("overall", rep.base_total + rep.novel_total,
              rep.base_correct + rep.novel_correct, rep.overall_top1);
    for (const ClassStats& st : rep.per_class) {
        const double top1 =
            st.total == 0 ? 0.0 : static_cast<double>(st.correct) / static_cast<double>(st.total);
        csv += "class," + std::to_string(st.class_id) + ',' +
               registry.by_id(st.class_id).name + ',' + std::to_string(st.total) + ',' +
               std::to_string(st.correct) + ',' + detail::fmt_double(top1) + '\n';
    }
    detail::write_text_file(p.eval_report(), csv);
    return rep;
}

std::vector<SweepRow> run_sweep(const RunConfig& cfg, std::span<const double> alphas,
                                std::span<const double> betas) {
    validate(cfg);
    ensure_out_dir(cfg);
    const RunPaths p = run_paths(cfg);
    const ClassRegistry registry = load_run_registry(p);
    const std::vector<RegionSample> eval_samples = load_samples(p.eval_samples());
    const HeadParams proxy_head = load_head(p.proxy_head());
    const HeadParams bce_head = load_head(p.bce_head());
    const std::vector<SweepRow> rows = sweep_fusion(proxy_head, bce_head, eval_samples,
                                                    registry, alphas, betas,
                                                    cfg.fusion.positivity);

    std::string csv = csv_header(cfg) + " positivity=" + to_string(cfg.fusion.positivity) + "\n";
    csv += "alpha,beta,base_top1,novel_top1,overall_top1\n";
    for (const SweepRow& r : rows) {
        csv += detail::fmt_double(r.alpha) + ',' + detail::fmt_double(r.beta) + ',' +
               detail::fmt_double(r.base_top1) + ',' + detail::fmt_double(r.novel_top1) + ',' +
               detail::fmt_double(r.overall_top1) + '\n';
    }
    detail::write_text_file(p.sweep(), csv);
    return rows;
}

std::vector<MixRow> run_mix(const RunConfig& cfg, bool dump_prototypes) {
    validate(cfg);
    ensure_out_dir(cfg);
    const RunPaths p = run_paths(cfg);
    const ClassRegistry registry = load_run_registry(p);
    const std::vector<int> base_ids = registry.ids_of(ClassGroup::base);
    const std::vector<int> novel_ids = registry.ids_of(ClassGroup::novel);
    std::vector<Embedding> targets;
    targets.reserve(novel_ids.size());
    for (int id : novel_ids) targets.push_back(registry.by_id(id).text_embedding);

    Rng rng(derive_seed(cfg.seed, "mix"));
    const std::vector<PairChoice> pairs =
        select_pairs(base_ids, registry, cfg.train.mix, targets, rng);

    std::vector<MixRow> rows;
    rows.reserve(pairs.size());
    for (std::size_t k = 0; k < pairs.size(); ++k) {
        const PairChoice& pc = pairs[k];
        const Embedding mixed = mix_embeddings(registry.by_id(pc.class_i).text_embedding,
                                               registry.by_id(pc.class_j).text_embedding,
                                               pc.lambda);
        MixRow row;
        row.index = static_cast<int>(k);
        row.class_i = pc.class_i;
        row.class_j = pc.class_j;
        row.lambda = pc.lambda;
        row.nearest_novel_sim = std::numeric_limits<double>::quiet_NaN();
        for (std::size_t t = 0; t < targets.size(); ++t) {
            const double s = cosine_sim(mixed, targets[t]);
            if (row.nearest_novel_id < 0 || s > row.nearest_novel_sim) {
                row.nearest_novel_id = novel_ids[t];
                row.nearest_novel_sim = s;
            }
        }
        rows.push_back(row);
    }

    std::string csv = csv_header(cfg) + " sampler=" + to_string(cfg.train.mix.sampler) +
                      " pair_strategy=" + to_string(cfg.train.mix.pair_strategy) + "\n";
    csv += "index,class_i,class_j,lambda,nearest_novel_id,nearest_novel_sim\n";
    for (const MixRow& r : rows) {
        csv += std::to_string(r.index) + ',' + std::to_string(r.class_i) + ',' +
               std::to_string(r.class_j) + ',' + detail::fmt_double(r.lambda) + ',' +
               std::to_string(r.nearest_novel_id) + ',' +
               detail::fmt_double(r.nearest_novel_sim) + '\n';
    }
    detail::write_text_file(p.mix_report(), csv);

    if (dump_prototypes) {
        const std::vector<RegionSample> train_samples = load_samples(p.train_samples());
        const HeadParams proxy_head = load_head(p.proxy_head());
        std::map<int, std::vector<RegionObs>> by_class;
        for (const RegionSample& s : train_samples) {
            by_class[s.class_id].push_back(
                RegionObs{forward(proxy_head, s.feature), s.iou, s.objectness});
        }
        const std::map<int, Prototype> protos = batch_prototypes(by_class, cfg.train.weighting);
        std::vector<ClassRecord> records;
        records.reserve(protos.size());
        for (const auto& [id, proto] : protos) {
            records.push_back(
                ClassRecord{id, registry.by_id(id).name, ClassGroup::base, proto.embedding});
        }
        save_registry(ClassRegistry(registry.dimension(), std::move(records)), p.prototypes());
    }
    return rows;
}

namespace {

void write_histogram_csv(const std::filesystem::path& path, const std::string& header,
                         const SimilarityHistogram& h) {
    std::string csv = header + "\n";
    csv += "bin_left,bin_right,count\n";
    for (std::size_t k = 0; k < h.counts.size(); ++k) {
        const double left = -1.0 + static_cast<double>(k) * h.bin_width;
        const double right = k + 1 == h.counts.size() ? 1.0 : left + h.bin_width;
        csv += detail::fmt_double(left) + ',' + detail::fmt_double(right) + ',' +
               std::to_string(h.counts[k]) + '\n';
    }
    detail::write_text_file(path, csv);
}

}  // namespace

AnalyzeSummary run_analyze(const RunConfig& cfg, std::size_t n_proxies, std::size_t bins) {
    validate(cfg);
    if (n_proxies == 0) throw ConfigError("analyze: need at least one sampled proxy");
    ensure_out_dir(cfg);
    const RunPaths p = run_paths(cfg);
    const ClassRegistry registry = load_run_registry(p);

    std::vector<Embedding> base_texts;
    std::vector<Embedding> novel_texts;
    std::vector<int> novel_ids;
    for (const ClassRecord& rec : registry.records()) {
        if (rec.group == ClassGroup::base) {
            base_texts.push_back(rec.text_embedding);
        } else if (rec.group == ClassGroup::novel) {
            novel_texts.push_back(rec.text_embedding);
            novel_ids.push_back(rec.id);
        }
    }
    if (base_texts.size() < 2) {
        throw InsufficientClasses("analyze: need at least 2 base classes");
    }
    if (novel_texts.empty()) {
        throw EmptyGroup("analyze: registry has no novel classes");
    }

    // Proxy set: uniform base pairs, lambda from the configured sampler.
    Rng rng(derive_seed(cfg.seed, "analyze"));
    std::vector<Embedding> proxies;
    proxies.reserve(n_proxies);
    for (std::size_t k = 0; k < n_proxies; ++k) {
        const std::size_t a = rng.index(base_texts.size());
        std::size_t b = rng.index(base_texts.size() - 1);
        if (b >= a) ++b;
        proxies.push_back(
            mix_embeddings(base_texts[a], base_texts[b], sample_lambda(cfg.train.mix, rng)));
    }

    const SimilarityHistogram hist_base = similarity_histogram(base_texts, novel_texts, bins);
    const SimilarityHistogram hist_proxy = similarity_histogram(proxies, novel_texts, bins);

    const std::string header = csv_header(cfg);
    write_histogram_csv(p.similarity_base(), header + " group=base", hist_base);
    write_histogram_csv(p.similarity_proxy(),
                        header + " group=proxy proxies=" + std::to_string(n_proxies),
                        hist_proxy);

    AnalyzeSummary sum;
    sum.base_mean_max_sim = hist_base.mean_per_novel_max;
    sum.proxy_mean_max_sim = hist_proxy.mean_per_novel_max;
    sum.max_sim_gap = sum.proxy_mean_max_sim - sum.base_mean_max_sim;
    sum.base_mean_sim = hist_base.mean_similarity;
    sum.proxy_mean_sim = hist_proxy.mean_similarity;

    std::string hull_csv = header + "\n";
    hull_csv += "id,name,nearest_single_sim,best_pair_mix_sim,residual,best_class_i,"
                "best_class_j,best_lambda\n";
    double res_sum = 0.0;
    for (std::size_t k = 0; k < novel_texts.size(); ++k) {
        const HullProximity hp = hull_proximity(novel_texts[k], registry);
        res_sum += hp.residual;
        sum.max_hull_residual = std::max(sum.max_hull_residual, hp.residual);
        hull_csv += std::to_string(novel_ids[k]) + ',' + registry.by_id(novel_ids[k]).name +
                    ',' + detail::fmt_double(hp.nearest_single_sim) + ',' +
                    detail::fmt_double(hp.best_pair_mix_sim) + ',' +
                    detail::fmt_double(hp.residual) + ',' + std::to_string(hp.best.class_i) +
                    ',' + std::to_string(hp.best.class_j) + ',' +
                    detail::fmt_double(hp.best.lambda) + '\n';
    }
    sum.mean_hull_residual = res_sum / static_cast<double>(novel_texts.size());
    detail::write_text_file(p.hull(), hull_csv);

    std::string csv = header + "\n";
    csv += "base_mean_max_sim,proxy_mean_max_sim,max_sim_gap,base_mean_sim,proxy_mean_sim,"
           "mean_hull_residual,max_hull_residual\n";
    csv += detail::fmt_double(sum.base_mean_max_sim) + ',' +
           detail::fmt_double(sum.proxy_mean_max_sim) + ',' +
           detail::fmt_double(sum.max_sim_gap) + ',' + detail::fmt_double(sum.base_mean_sim) +
           ',' + detail::fmt_double(sum.proxy_mean_sim) + ',' +
           detail::fmt_double(sum.mean_hull_residual) + ',' +
           detail::fmt_double(sum.max_hull_residual) + '\n';
    detail::write_text_file(p.analysis(), csv);
    return sum;
}

}  // namespace ovmix
