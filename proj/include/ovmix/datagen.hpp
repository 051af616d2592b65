#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

#include <Eigen/Dense>

#include "ovmix/registry.hpp"
#include "ovmix/rng.hpp"

namespace ovmix {

// One labeled region with its proposal-quality scalars. Training samples are
// restricted to base classes; eval samples may carry novel class ids.
struct RegionSample {
    Eigen::VectorXd feature;
    int class_id = 0;
    double iou = 0.0;         // in [0, 1]
    double objectness = 0.0;  // in [0, 1]
};

enum class NovelMode { in_hull, off_hull, mixed };

std::string to_string(NovelMode m);
NovelMode novel_mode_from_string(const std::string& s);  // SpecError

// Seeded synthetic benchmark layout. Identical specs produce byte-identical
// benchmarks.
struct SyntheticSpec {
    std::uint64_t seed = 7;
    Eigen::Index embedding_dim = 32;  // M
    Eigen::Index feature_dim = 48;    // F
    int n_base = 12;
    int n_novel = 16;
    NovelMode novel_mode = NovelMode::in_hull;
    int samples_per_class = 64;
    // Feature noise scale: per-sample stddev is coupling * (1 - iou),
    // so low-quality proposals are genuinely noisier.
    double quality_noise_coupling = 1.0;
    // stddev of the Gaussian nudge applied to in-hull novel embeddings before
    // renormalization; 0 pins each novel exactly onto a base-pair mix segment.
    double hull_sigma = 0.05;
};

void validate(const SyntheticSpec& spec);  // SpecError

struct Benchmark {
    ClassRegistry registry;
    std::vector<RegionSample> train;  // base classes only
    std::vector<RegionSample> eval;   // base and novel classes
};

// Draws the benchmark: base text embeddings are independent random unit
// vectors; novel embeddings follow novel_mode; region features are
// A * t_c + noise with one fixed seeded F x M map A shared by all classes.
// iou ~ U[0.25, 1], objectness = clamp(iou + U(-0.1, 0.1), 0, 1).
Benchmark gen_benchmark(const SyntheticSpec& spec);

// Noisy true-class directions used by the distillation baseline:
// teacher_k = V(T(c_k) + sigma * g). One teacher per sample, rng-ordered.
std::vector<Embedding> make_teachers(const std::vector<RegionSample>& samples,
                                     const ClassRegistry& registry, double sigma, Rng& rng);

// Samples interchange format:
//   {"feature_dim": int, "samples": [{"feature", "class_id", "iou", "objectness"}, ...]}
// Same 17-significant-digit float contract as the registry writer.
void save_samples(const std::vector<RegionSample>& samples,
                  const std::filesystem::path& path);
std::vector<RegionSample> load_samples(const std::filesystem::path& path);

}  // namespace ovmix
