#include "ovmix/eval.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>

#include "ovmix/error.hpp"

namespace ovmix {

namespace {

double sigmoid(double x) {
    return x >= 0.0 ? 1.0 / (1.0 + std::exp(-x)) : std::exp(x) / (1.0 + std::exp(x));
}

// pow with exact endpoints, so exponent 0 and 1 keep the other head's scores
// bitwise intact instead of round-tripping through libm.
double pow_mix(double x, double e) {
    if (e == 0.0) return 1.0;
    if (e == 1.0) return x;
    return std::pow(x, e);
}

Eigen::Index argmax_index(const Eigen::VectorXd& v) {
    Eigen::Index best = 0;
    for (Eigen::Index i = 1; i < v.size(); ++i) {
        if (v[i] > v[best]) best = i;
    }
    return best;
}

}  // namespace

std::string to_string(const Positivity& p) {
    char buf[48];
    std::snprintf(buf, sizeof(buf), "%s:%.17g",
                  p.kind == PositivityKind::logistic ? "logistic" : "shift_clamp", p.param);
    return buf;
}

Positivity positivity_from_string(const std::string& s) {
    const auto colon = s.find(':');
    const std::string name = s.substr(0, colon == std::string::npos ? s.size() : colon);
    double param = 0.0;
    bool has_param = colon != std::string::npos;
    if (has_param) {
        const std::string num = s.substr(colon + 1);
        char* end = nullptr;
        param = std::strtod(num.c_str(), &end);
        if (end == num.c_str() || *end != '\0') {
            throw ConfigError("bad positivity parameter in \"" + s + "\"");
        }
    }
    if (name == "logistic") return has_param ? Positivity::logistic(param) : Positivity::logistic();
    if (name == "shift_clamp") {
        return has_param ? Positivity::shift_clamp(param) : Positivity::shift_clamp();
    }
    throw ConfigError("unknown positivity transform \"" + s + "\"");
}

void validate(const FusionParams& p) {
    if (!(p.alpha >= 0.0 && p.alpha <= 1.0)) throw ConfigError("alpha must lie in [0, 1]");
    if (!(p.beta >= 0.0 && p.beta <= 1.0)) throw ConfigError("beta must lie in [0, 1]");
    if (!(p.positivity.param > 0.0) || !std::isfinite(p.positivity.param)) {
        throw ConfigError("positivity parameter must be finite and > 0");
    }
}

FusionParams long_tail_preset() {
    return FusionParams{0.15, 0.35, Positivity::logistic()};
}

Eigen::VectorXd head_scores(const Embedding& region, const ClassRegistry& registry,
                            const Positivity& positivity) {
    const Eigen::VectorXd& v = region.values();
    if (v.size() != registry.dimension()) {
        throw DimensionMismatch("head_scores: region dim " + std::to_string(v.size()) +
                                " != registry dim " + std::to_string(registry.dimension()));
    }
    const double nr = v.norm();
    if (nr <= kNormZeroEps) {
        throw NearZeroNorm("head_scores: zero-norm region");
    }
    Eigen::VectorXd out = registry.classifier_matrix() * v;  // rows are unit norm
    for (Eigen::Index i = 0; i < out.size(); ++i) {
        const double cos = std::clamp(out[i] / nr, -1.0, 1.0);
        out[i] = positivity.kind == PositivityKind::logistic
                     ? sigmoid(positivity.param * cos)
                     : std::max(cos + 1.0, positivity.param) / 2.0;
    }
    return out;
}

Eigen::VectorXd fuse_from_scores(const Eigen::VectorXd& proxy_scores,
                                 const Eigen::VectorXd& bce_scores,
                                 const ClassRegistry& registry, const FusionParams& params) {
    const Eigen::Index n = static_cast<Eigen::Index>(registry.size());
    if (proxy_scores.size() != n || bce_scores.size() != n) {
        throw DimensionMismatch("fuse_from_scores: score vectors must have one entry per class");
    }
    Eigen::VectorXd out(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        const ClassGroup g = registry.records()[static_cast<std::size_t>(i)].group;
        double e = 0.0;
        switch (g) {
            case ClassGroup::base: e = params.alpha; break;
            case ClassGroup::novel: e = params.beta; break;
            case ClassGroup::proxy:
                throw UnknownGroup("fuse_from_scores: proxy classes cannot be scored");
        }
        out[i] = pow_mix(proxy_scores[i], e) * pow_mix(bce_scores[i], 1.0 - e);
    }
    return out;
}

Eigen::VectorXd fuse_scores(const Embedding& r_proxy, const Embedding& r_bce,
                            const ClassRegistry& registry, const FusionParams& params) {
    return fuse_from_scores(head_scores(r_proxy, registry, params.positivity),
                            head_scores(r_bce, registry, params.positivity), registry, params);
}

EvalReport evaluate(const HeadParams& proxy_head, const HeadParams& bce_head,
                    std::span<const RegionSample> samples, const ClassRegistry& registry,
                    const FusionParams& params) {
    validate(params);
    if (samples.empty()) throw ConfigError("evaluate: no eval samples");

    const Eigen::Index n = static_cast<Eigen::Index>(registry.size());
    EvalReport rep;
    rep.alpha = params.alpha;
    rep.beta = params.beta;
    rep.positivity = to_string(params.positivity);
    rep.confusion = Eigen::MatrixXi::Zero(n, n);
    rep.per_class.reserve(registry.size());
    for (const auto& rec : registry.records()) {
        rep.per_class.push_back(ClassStats{rec.id, rec.group, 0, 0});
    }

    for (const auto& s : samples) {
        const Embedding r_p = forward(proxy_head, s.feature);
        const Embedding r_b = forward(bce_head, s.feature);
        const Eigen::VectorXd scores = fuse_scores(r_p, r_b, registry, params);
        const Eigen::Index pred = argmax_index(scores);
        const Eigen::Index truth = static_cast<Eigen::Index>(registry.index_of(s.class_id));
        rep.confusion(truth, pred) += 1;
        ClassStats& st = rep.per_class[static_cast<std::size_t>(truth)];
        st.total += 1;
        const bool hit = pred == truth;
        if (hit) st.correct += 1;
        if (st.group == ClassGroup::novel) {
            rep.novel_total += 1;
            if (hit) rep.novel_correct += 1;
        } else {
            rep.base_total += 1;
            if (hit) rep.base_correct += 1;
        }
    }

    const auto ratio = [](std::size_t c, std::size_t t) {
        return t == 0 ? 0.0 : static_cast<double>(c) / static_cast<double>(t);
    };
    rep.base_top1 = ratio(rep.base_correct, rep.base_total);
    rep.novel_top1 = ratio(rep.novel_correct, rep.novel_total);
    rep.overall_top1 = ratio(rep.base_correct + rep.novel_correct, samples.size());
    return rep;
}

std::vector<SweepRow> sweep_fusion(const HeadParams& proxy_head, const HeadParams& bce_head,
                                   std::span<const RegionSample> samples,
                                   const ClassRegistry& registry,
                                   std::span<const double> alpha_grid,
                                   std::span<const double> beta_grid,
                                   const Positivity& positivity) {
    if (alpha_grid.empty() || beta_grid.empty()) {
        throw ConfigError("sweep_fusion: grids must be nonempty");
    }
    if (samples.empty()) throw ConfigError("sweep_fusion: no eval samples");
    for (double a : alpha_grid) {
        validate(FusionParams{a, 0.0, positivity});
    }
    for (double b : beta_grid) {
        validate(FusionParams{0.0, b, positivity});
    }

    // One forward pass per sample per head, shared across the whole grid.
    struct Cached {
        Eigen::VectorXd proxy_scores;
        Eigen::VectorXd bce_scores;
        Eigen::Index truth;
        bool novel;
    };
    std::vector<Cached> cache;
    cache.reserve(samples.size());
    for (const auto& s : samples) {
        Cached c;
        c.proxy_scores = head_scores(forward(proxy_head, s.feature), registry, positivity);
        c.bce_scores = head_scores(forward(bce_head, s.feature), registry, positivity);
        c.truth = static_cast<Eigen::Index>(registry.index_of(s.class_id));
        c.novel =
            registry.records()[static_cast<std::size_t>(c.truth)].group == ClassGroup::novel;
        cache.push_back(std::move(c));
    }

    std::vector<SweepRow> rows;
    rows.reserve(alpha_grid.size() * beta_grid.size());
    for (double a : alpha_grid) {
        for (double b : beta_grid) {
            const FusionParams params{a, b, positivity};
            std::size_t base_total = 0, base_correct = 0, novel_total = 0, novel_correct = 0;
            for (const Cached& c : cache) {
                const Eigen::VectorXd scores =
                    fuse_from_scores(c.proxy_scores, c.bce_scores, registry, params);
                const bool hit = argmax_index(scores) == c.truth;
                if (c.novel) {
                    ++novel_total;
                    novel_correct += hit ? 1 : 0;
                } else {
                    ++base_total;
                    base_correct += hit ? 1 : 0;
                }
            }
            const auto ratio = [](std::size_t cnt, std::size_t tot) {
                return tot == 0 ? 0.0 : static_cast<double>(cnt) / static_cast<double>(tot);
            };
            rows.push_back(SweepRow{a, b, ratio(base_correct, base_total),
                                    ratio(novel_correct, novel_total),
                                    ratio(base_correct + novel_correct, cache.size())});
        }
    }
    return rows;
}

SimilarityHistogram similarity_histogram(std::span<const Embedding> group_a,
                                         std::span<const Embedding> novels, std::size_t bins) {
    if (bins == 0) throw ConfigError("similarity_histogram: bins must be >= 1");
    if (group_a.empty()) throw EmptyGroup("similarity_histogram: group A is empty");
    if (novels.empty()) throw EmptyGroup("similarity_histogram: novel group is empty");

    SimilarityHistogram h;
    h.counts.assign(bins, 0);
    h.bin_width = 2.0 / static_cast<double>(bins);
    h.per_novel_max.reserve(novels.size());

    double sum = 0.0;
    for (const Embedding& n : novels) {
        double best = -1.0;
        for (const Embedding& a : group_a) {
            const double s = cosine_sim(a, n);
            best = std::max(best, s);
            sum += s;
            auto idx = static_cast<std::ptrdiff_t>((s + 1.0) / h.bin_width);
            idx = std::clamp<std::ptrdiff_t>(idx, 0, static_cast<std::ptrdiff_t>(bins) - 1);
            h.counts[static_cast<std::size_t>(idx)] += 1;
        }
        h.per_novel_max.push_back(best);
    }
    const double pairs = static_cast<double>(group_a.size() * novels.size());
    h.mean_similarity = sum / pairs;
    double mx = 0.0;
    for (double v : h.per_novel_max) mx += v;
    h.mean_per_novel_max = mx / static_cast<double>(h.per_novel_max.size());
    return h;
}

HullProximity hull_proximity(const Embedding& novel, const ClassRegistry& registry) {
    const std::vector<int> base_ids = registry.ids_of(ClassGroup::base);
    if (base_ids.size() < 2) {
        throw InsufficientClasses("hull_proximity: need at least 2 base classes, have " +
                                  std::to_string(base_ids.size()));
    }
    HullProximity out;
    // Computed through the same normalize-then-cosine path as the grid's
    // lambda-endpoint rows, so best_pair_mix_sim >= nearest_single_sim holds
    // exactly, not just up to rounding.
    out.nearest_single_sim = -1.0;
    for (int id : base_ids) {
        const double s = cosine_sim(l2_normalize(registry.by_id(id).text_embedding), novel);
        out.nearest_single_sim = std::max(out.nearest_single_sim, s);
    }
    out.best = best_pair_mix(base_ids, registry, novel);
    out.best_pair_mix_sim = out.best.similarity;
    out.residual = 1.0 - out.best_pair_mix_sim;
    return out;
}

}  // namespace ovmix
