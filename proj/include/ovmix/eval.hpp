#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "ovmix/datagen.hpp"
#include "ovmix/mixer.hpp"
#include "ovmix/registry.hpp"
#include "ovmix/trainer.hpp"

namespace ovmix {

// Geometric-mean fusion needs positive operands; raw cosines can be negative.
//   logistic:    sigmoid(scale * cos)
//   shift_clamp: max(cos + 1, eps) / 2
enum class PositivityKind { logistic, shift_clamp };

struct Positivity {
    PositivityKind kind = PositivityKind::logistic;
    double param = 50.0;  // logistic scale or shift_clamp epsilon

    static Positivity logistic(double scale = 50.0) { return {PositivityKind::logistic, scale}; }
    static Positivity shift_clamp(double eps = 1e-6) {
        return {PositivityKind::shift_clamp, eps};
    }
};

std::string to_string(const Positivity& p);
// "kind" or "kind:param", e.g. "logistic:50"; ConfigError on anything else.
Positivity positivity_from_string(const std::string& s);

struct FusionParams {
    double alpha = 0.45;  // exponent pair (alpha, 1 - alpha) on base classes
    double beta = 0.65;   // exponent pair (beta, 1 - beta) on novel classes
    Positivity positivity;
};

void validate(const FusionParams& p);  // ConfigError

// Operating point for long-tailed splits with many rare classes; leans the
// fusion further toward the bce head on both groups.
FusionParams long_tail_preset();

// Transformed per-class scores of one head: positivity(cos(region, T(c))) in
// registry record order. Entries lie in (0, 1).
Eigen::VectorXd head_scores(const Embedding& region, const ClassRegistry& registry,
                            const Positivity& positivity);

// Per-class geometric-mean fusion of already-transformed score vectors:
//   base class  i: proxy[i]^alpha * bce[i]^(1-alpha)
//   novel class i: proxy[i]^beta  * bce[i]^(1-beta)
// Exponents 0 and 1 are special-cased so alpha = beta = 0 reproduces the bce
// scores bitwise (and 1 the proxy scores). Throws UnknownGroup on a proxy
// record, DimensionMismatch on wrong lengths.
Eigen::VectorXd fuse_from_scores(const Eigen::VectorXd& proxy_scores,
                                 const Eigen::VectorXd& bce_scores,
                                 const ClassRegistry& registry, const FusionParams& params);

Eigen::VectorXd fuse_scores(const Embedding& r_proxy, const Embedding& r_bce,
                            const ClassRegistry& registry, const FusionParams& params);

struct ClassStats {
    int class_id = 0;
    ClassGroup group = ClassGroup::base;
    std::size_t total = 0;
    std::size_t correct = 0;
};

struct EvalReport {
    double base_top1 = 0.0;   // 0 when the group is empty
    double novel_top1 = 0.0;
    double overall_top1 = 0.0;
    std::size_t base_total = 0;
    std::size_t base_correct = 0;
    std::size_t novel_total = 0;
    std::size_t novel_correct = 0;
    std::vector<ClassStats> per_class;  // registry record order
    // confusion(t, p): samples of true record index t predicted as record
    // index p.
    Eigen::MatrixXi confusion;
    // Operating point, recorded for the report writers.
    double alpha = 0.0;
    double beta = 0.0;
    std::string positivity;
};

// Top-1 classification over fused scores; prediction is the argmax, ties
// toward the smallest record index. Samples must carry registry class ids.
EvalReport evaluate(const HeadParams& proxy_head, const HeadParams& bce_head,
                    std::span<const RegionSample> samples, const ClassRegistry& registry,
                    const FusionParams& params);

struct SweepRow {
    double alpha = 0.0;
    double beta = 0.0;
    double base_top1 = 0.0;
    double novel_top1 = 0.0;
    double overall_top1 = 0.0;
};

// Exhaustive alpha x beta grid, alpha-major order. Head embeddings and
// transformed scores are computed once and shared across the grid, so the
// (0, 0) row matches evaluate() with alpha = beta = 0 bitwise.
std::vector<SweepRow> sweep_fusion(const HeadParams& proxy_head, const HeadParams& bce_head,
                                   std::span<const RegionSample> samples,
                                   const ClassRegistry& registry,
                                   std::span<const double> alpha_grid,
                                   std::span<const double> beta_grid,
                                   const Positivity& positivity);

struct SimilarityHistogram {
    // counts[k] covers [-1 + k * bin_width, -1 + (k + 1) * bin_width); the
    // last bin is closed on the right.
    std::vector<std::size_t> counts;
    double bin_width = 0.0;
    std::vector<double> per_novel_max;  // one per novel input, input order
    double mean_per_novel_max = 0.0;
    double mean_similarity = 0.0;  // over all (a, novel) pairs
};

// All pairwise cosines between group_a and novels, binned over [-1, 1].
// Throws EmptyGroup when either side is empty, ConfigError on bins = 0.
SimilarityHistogram similarity_histogram(std::span<const Embedding> group_a,
                                         std::span<const Embedding> novels, std::size_t bins);

struct HullProximity {
    double nearest_single_sim = 0.0;   // best single base embedding
    double best_pair_mix_sim = 0.0;    // best normalized pair mix on the lambda grid
    double residual = 0.0;             // 1 - best_pair_mix_sim
    BestMix best;                      // pair and lambda achieving the best mix
};

// How close a target embedding sits to the mixing hull of the base classes.
// best_pair_mix_sim >= nearest_single_sim always: the single-class scores are
// computed exactly as the grid's endpoint rows. Throws InsufficientClasses.
HullProximity hull_proximity(const Embedding& novel, const ClassRegistry& registry);

}  // namespace ovmix
