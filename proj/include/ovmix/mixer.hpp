#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "ovmix/embedding.hpp"
#include "ovmix/prototype.hpp"
#include "ovmix/registry.hpp"
#include "ovmix/rng.hpp"

namespace ovmix {

// Mixing-coefficient sampler: symmetric Beta(g, g), Bernoulli(p) over {0, 1},
// or a fixed value.
struct LambdaSampler {
    enum class Kind { beta, bernoulli, fixed };
    Kind kind = Kind::beta;
    double param = 1.0;  // gamma, p, or the fixed lambda

    static LambdaSampler beta(double gamma) { return {Kind::beta, gamma}; }
    static LambdaSampler bernoulli(double p) { return {Kind::bernoulli, p}; }
    static LambdaSampler fixed(double lambda) { return {Kind::fixed, lambda}; }
};

std::string to_string(const LambdaSampler& s);
LambdaSampler lambda_sampler_from_string(const std::string& s);  // "beta:G" etc.; ConfigError

enum class PairStrategy { random, novel_nearest };
enum class Granularity { class_wise, instance_wise };

std::string to_string(PairStrategy s);
PairStrategy pair_strategy_from_string(const std::string& s);  // ConfigError
std::string to_string(Granularity g);
Granularity granularity_from_string(const std::string& s);  // ConfigError

struct MixSpec {
    LambdaSampler sampler = LambdaSampler::beta(1.0);
    PairStrategy pair_strategy = PairStrategy::random;
    int pairs_per_batch = 4;
    Granularity granularity = Granularity::class_wise;
};

void validate(const MixSpec& spec);  // ConfigError

// Synthetic class made from two base classes: both embeddings are normalized
// convex combinations at the same lambda.
struct ProxyPair {
    Embedding visual;
    Embedding textual;
    int class_i = 0;
    int class_j = 0;
    double lambda = 0.0;
};

struct PairChoice {
    int class_i = 0;
    int class_j = 0;
    double lambda = 0.0;
};

// One draw in [0, 1] according to the spec's sampler.
double sample_lambda(const MixSpec& spec, Rng& rng);

// V(lambda * a + (1 - lambda) * b). lambda in {0, 1} returns the
// corresponding input verbatim; lambda outside [0, 1] is an Error. Throws
// NearZeroNorm when the combination cancels.
Embedding mix_embeddings(const Embedding& a, const Embedding& b, double lambda);

// V(lambda * a + (1 - lambda) * b) on both the visual and textual sides.
// lambda in {0, 1} returns the corresponding input verbatim. Throws
// NearZeroNorm when the combination cancels (antipodal inputs, lambda 0.5).
ProxyPair mix_pair(const Prototype& proto_i, const Prototype& proto_j,
                   const Embedding& text_i, const Embedding& text_j, double lambda);

// Ablation baseline: same mix on two raw region embeddings instead of
// prototypes.
ProxyPair instance_mixup(const Embedding& region_i, int class_i,
                         const Embedding& region_j, int class_j,
                         const Embedding& text_i, const Embedding& text_j, double lambda);

// Resolution of the lambda grid used by the novel-nearest search: {0.00,
// 0.01, ..., 1.00}.
inline constexpr int kLambdaGridPoints = 101;

// Picks pairs_per_batch (i, j, lambda) triples from the present base classes.
//   random:        both classes drawn uniformly, i != j, lambda from the
//                  sampler; (i, j) carries no orientation.
//   novel_nearest: per draw, one target is sampled from `targets` and the
//                  search returns the ordered pair and grid lambda whose text
//                  mix has maximal cosine to the target; ties break toward the
//                  smallest (i, j, lambda-index).
// Throws InsufficientClasses (< 2 present), MissingTargets.
std::vector<PairChoice> select_pairs(std::span<const int> present_base_ids,
                                     const ClassRegistry& registry, const MixSpec& spec,
                                     std::span<const Embedding> novel_targets, Rng& rng);

// Exhaustive best-mix search used by select_pairs(novel_nearest) and the hull
// analyses: argmax over ordered pairs and the lambda grid of
// cosine(V(lambda T_i + (1 - lambda) T_j), target).
struct BestMix {
    int class_i = 0;
    int class_j = 0;
    double lambda = 0.0;
    double similarity = -1.0;
};
BestMix best_pair_mix(std::span<const int> base_ids, const ClassRegistry& registry,
                      const Embedding& target);

}  // namespace ovmix
