#include "ovmix/mixer.hpp"

#include <cmath>
#include <cstdio>

#include "ovmix/error.hpp"

namespace ovmix {

std::string to_string(const LambdaSampler& s) {
    char buf[48];
    const char* name = s.kind == LambdaSampler::Kind::beta      ? "beta"
                       : s.kind == LambdaSampler::Kind::bernoulli ? "bernoulli"
                                                                  : "fixed";
    std::snprintf(buf, sizeof(buf), "%s:%.17g", name, s.param);
    return buf;
}

LambdaSampler lambda_sampler_from_string(const std::string& s) {
    const auto colon = s.find(':');
    if (colon == std::string::npos) {
        throw ConfigError("sampler must look like beta:G, bernoulli:P or fixed:L, got \"" + s +
                          "\"");
    }
    const std::string name = s.substr(0, colon);
    char* end = nullptr;
    const std::string num = s.substr(colon + 1);
    const double v = std::strtod(num.c_str(), &end);
    if (end == num.c_str() || *end != '\0') {
        throw ConfigError("bad sampler parameter in \"" + s + "\"");
    }
    if (name == "beta") return LambdaSampler::beta(v);
    if (name == "bernoulli") return LambdaSampler::bernoulli(v);
    if (name == "fixed") return LambdaSampler::fixed(v);
    throw ConfigError("unknown sampler \"" + name + "\"");
}

std::string to_string(PairStrategy s) {
    return s == PairStrategy::random ? "random" : "novel_nearest";
}

PairStrategy pair_strategy_from_string(const std::string& s) {
    if (s == "random") return PairStrategy::random;
    if (s == "novel_nearest" || s == "novel-nearest") return PairStrategy::novel_nearest;
    throw ConfigError("unknown pair strategy \"" + s + "\"");
}

std::string to_string(Granularity g) {
    return g == Granularity::class_wise ? "class" : "instance";
}

Granularity granularity_from_string(const std::string& s) {
    if (s == "class" || s == "class_wise") return Granularity::class_wise;
    if (s == "instance" || s == "instance_wise") return Granularity::instance_wise;
    throw ConfigError("unknown granularity \"" + s + "\"");
}

void validate(const MixSpec& spec) {
    switch (spec.sampler.kind) {
        case LambdaSampler::Kind::beta:
            if (!(spec.sampler.param > 0.0)) throw ConfigError("beta gamma must be > 0");
            break;
        case LambdaSampler::Kind::bernoulli:
            if (!(spec.sampler.param >= 0.0 && spec.sampler.param <= 1.0)) {
                throw ConfigError("bernoulli p must lie in [0, 1]");
            }
            break;
        case LambdaSampler::Kind::fixed:
            if (!(spec.sampler.param >= 0.0 && spec.sampler.param <= 1.0)) {
                throw ConfigError("fixed lambda must lie in [0, 1]");
            }
            break;
    }
    if (spec.pairs_per_batch < 1) throw ConfigError("pairs_per_batch must be >= 1");
}

double sample_lambda(const MixSpec& spec, Rng& rng) {
    switch (spec.sampler.kind) {
        case LambdaSampler::Kind::beta:
            return rng.beta_symmetric(spec.sampler.param);
        case LambdaSampler::Kind::bernoulli:
            return rng.bernoulli(spec.sampler.param) ? 1.0 : 0.0;
        case LambdaSampler::Kind::fixed:
            return spec.sampler.param;
    }
    return 0.5;
}

namespace {

void check_lambda(double lambda) {
    if (!(lambda >= 0.0 && lambda <= 1.0)) {
        throw Error("lambda must lie in [0, 1], got " + std::to_string(lambda));
    }
}

}  // namespace

Embedding mix_embeddings(const Embedding& a, const Embedding& b, double lambda) {
    check_lambda(lambda);
    if (a.dim() != b.dim()) {
        throw DimensionMismatch("mix: dimensions differ");
    }
    // Endpoints return the input verbatim so lambda in {0, 1} is exact.
    if (lambda == 0.0) return b;
    if (lambda == 1.0) return a;
    return l2_normalize(lambda * a.values() + (1.0 - lambda) * b.values());
}

ProxyPair mix_pair(const Prototype& proto_i, const Prototype& proto_j,
                   const Embedding& text_i, const Embedding& text_j, double lambda) {
    if (proto_i.class_id == proto_j.class_id) {
        throw Error("mix_pair: the two classes must differ");
    }
    return ProxyPair{mix_embeddings(proto_i.embedding, proto_j.embedding, lambda),
                     mix_embeddings(text_i, text_j, lambda), proto_i.class_id,
                     proto_j.class_id, lambda};
}

ProxyPair instance_mixup(const Embedding& region_i, int class_i, const Embedding& region_j,
                         int class_j, const Embedding& text_i, const Embedding& text_j,
                         double lambda) {
    if (class_i == class_j) {
        throw Error("instance_mixup: the two classes must differ");
    }
    return ProxyPair{mix_embeddings(region_i, region_j, lambda),
                     mix_embeddings(text_i, text_j, lambda), class_i, class_j, lambda};
}

BestMix best_pair_mix(std::span<const int> base_ids, const ClassRegistry& registry,
                      const Embedding& target) {
    if (base_ids.size() < 2) {
        throw InsufficientClasses("best_pair_mix: need at least 2 base classes, have " +
                                  std::to_string(base_ids.size()));
    }
    BestMix best;
    int best_tuple[3] = {0, 0, 0};
    for (int i : base_ids) {
        const Embedding& ti = registry.by_id(i).text_embedding;
        for (int j : base_ids) {
            if (j == i) continue;
            const Embedding& tj = registry.by_id(j).text_embedding;
            for (int k = 0; k < kLambdaGridPoints; ++k) {
                const double lambda = static_cast<double>(k) / 100.0;
                const Eigen::VectorXd mix =
                    lambda * ti.values() + (1.0 - lambda) * tj.values();
                if (mix.norm() <= kNormZeroEps) continue;  // cancelled combination
                const double sim = cosine_sim(l2_normalize(mix), target);
                // Ties break toward the smallest (i, j, lambda-index).
                const int tuple[3] = {i, j, k};
                const bool tie_smaller =
                    sim == best.similarity &&
                    std::lexicographical_compare(tuple, tuple + 3, best_tuple, best_tuple + 3);
                if (sim > best.similarity || tie_smaller) {
                    best = BestMix{i, j, lambda, sim};
                    best_tuple[0] = i;
                    best_tuple[1] = j;
                    best_tuple[2] = k;
                }
            }
        }
    }
    return best;
}

std::vector<PairChoice> select_pairs(std::span<const int> present_base_ids,
                                     const ClassRegistry& registry, const MixSpec& spec,
                                     std::span<const Embedding> novel_targets, Rng& rng) {
    validate(spec);
    if (present_base_ids.size() < 2) {
        throw InsufficientClasses("select_pairs: need at least 2 base classes, have " +
                                  std::to_string(present_base_ids.size()));
    }
    std::vector<PairChoice> out;
    out.reserve(static_cast<std::size_t>(spec.pairs_per_batch));
    if (spec.pair_strategy == PairStrategy::random) {
        const std::size_t n = present_base_ids.size();
        for (int p = 0; p < spec.pairs_per_batch; ++p) {
            const std::size_t a = rng.index(n);
            std::size_t b = rng.index(n - 1);
            if (b >= a) ++b;
            out.push_back(PairChoice{present_base_ids[a], present_base_ids[b],
                                     sample_lambda(spec, rng)});
        }
        return out;
    }
    if (novel_targets.empty()) {
        throw MissingTargets("novel_nearest pair selection requires novel target embeddings");
    }
    for (int p = 0; p < spec.pairs_per_batch; ++p) {
        const Embedding& target = novel_targets[rng.index(novel_targets.size())];
        const BestMix best = best_pair_mix(present_base_ids, registry, target);
        out.push_back(PairChoice{best.class_i, best.class_j, best.lambda});
    }
    return out;
}

}  // namespace ovmix
