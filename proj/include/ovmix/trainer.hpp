#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "ovmix/datagen.hpp"
#include "ovmix/losses.hpp"
#include "ovmix/mixer.hpp"
#include "ovmix/prototype.hpp"
#include "ovmix/registry.hpp"
#include "ovmix/rng.hpp"

namespace ovmix {

// Linear region-embedding head: feature x -> V(matrix * x), matrix is M x F.
struct HeadParams {
    Eigen::MatrixXd matrix;
};

// Throws NearZeroNorm when matrix * feature is degenerate.
Embedding forward(const HeadParams& head, const Eigen::VectorXd& feature);

// d(grad_out . V(matrix * x)) / d(matrix): the vector-Jacobian product through
// the normalization, as used by the training loop.
Eigen::MatrixXd forward_vjp(const HeadParams& head, const Eigen::VectorXd& feature,
                            const Eigen::VectorXd& grad_out);

struct TrainConfig {
    std::uint64_t seed = 7;
    int epochs = 30;
    int batch_size = 64;
    double learning_rate = 0.05;
    double weight_decay = 1e-4;
    double grad_clip = 5.0;
    MixSpec mix;
    WeightingSpec weighting;
    LossSpec loss;
    // Train the proxy head on the proxy term alone instead of BCE + proxy.
    bool proxy_only = false;
    // Noise scale of the distillation teachers (only used when
    // loss.distill_weight > 0).
    double teacher_sigma = 0.1;
};

void validate(const TrainConfig& config);  // ConfigError

// Frozen per-batch mixing choices, so the assembled objective is a
// deterministic function of the head matrix (finite differences need this).
struct MixPlan {
    std::vector<PairChoice> pairs;
    // Batch indices of the two donor regions per pair; instance granularity only.
    std::vector<std::pair<std::size_t, std::size_t>> instance_donors;
    // Mixing was requested but the batch had < 2 distinct base classes.
    bool skipped_insufficient = false;
};

// Draws pairs (and donors, for instance granularity) from the rng stream.
// Returns an empty plan when proxy_weight is 0 or the batch cannot be mixed.
MixPlan make_mix_plan(std::span<const RegionSample> batch, const ClassRegistry& registry,
                      const TrainConfig& config, Rng& rng);

enum class HeadRole { bce, proxy };

struct HeadObjective {
    double value = 0.0;         // what the gradient differentiates
    double bce_term = 0.0;      // mean BCE over the batch
    double proxy_term = 0.0;    // mean proxy distance over pairs (unweighted)
    double distill_term = 0.0;  // mean distill distance (unweighted)
    Eigen::MatrixXd grad;       // d value / d matrix
};

// Objective and gradient for one head on one batch.
//   bce   role: mean BCE.
//   proxy role: [mean BCE +] proxy_weight * mean proxy loss over the plan's
//               pairs + distill_weight * mean distill loss.
// Proxy pairs are built from the plan through this head's region embeddings:
// per-class prototypes (weighting per config) for class granularity, donor
// regions for instance granularity.
HeadObjective compute_head_objective(const HeadParams& head,
                                     std::span<const RegionSample> batch,
                                     const ClassRegistry& registry, const TrainConfig& config,
                                     const MixPlan& plan, std::span<const Embedding> teachers,
                                     HeadRole role);

struct StepReport {
    double bce_loss = 0.0;    // bce head's mean BCE
    double proxy_loss = 0.0;  // proxy head's mean proxy distance
    int proxy_pairs = 0;
    bool proxy_skipped = false;
};

// One SGD step on both heads: gradient + weight decay, clipped to grad_clip
// in Frobenius norm, then W -= lr * g.
StepReport train_step(HeadParams& bce_head, HeadParams& proxy_head,
                      std::span<const RegionSample> batch, const ClassRegistry& registry,
                      const TrainConfig& config, Rng& rng,
                      std::span<const Embedding> teachers = {});

struct EpochLog {
    int epoch = 0;          // 1-based
    double bce_loss = 0.0;  // step means
    double proxy_loss = 0.0;
};

struct FitResult {
    HeadParams bce_head;
    HeadParams proxy_head;
    std::vector<EpochLog> log;
};

// Full training run. Deterministic given config.seed: head init, teacher
// draws, and the train stream (per epoch: shuffle, then per batch: pair
// selection then instance donors) all derive from it. Both heads start from
// the same initial matrix.
FitResult fit(const TrainConfig& config, const ClassRegistry& registry,
              const std::vector<RegionSample>& train_samples);

// Head checkpoint JSON:
//   {"feature_dim": F, "embedding_dim": M, "matrix": [[row 0], ...]}
void save_head(const HeadParams& head, const std::filesystem::path& path);
HeadParams load_head(const std::filesystem::path& path);

}  // namespace ovmix
