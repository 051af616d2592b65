#pragma once

#include <map>
#include <span>
#include <string>
#include <vector>

#include "ovmix/embedding.hpp"

namespace ovmix {

enum class WeightingMode { centroid, softmax_iou, softmax_objectness };

std::string to_string(WeightingMode m);
WeightingMode weighting_mode_from_string(const std::string& s);  // ConfigError

struct WeightingSpec {
    WeightingMode mode = WeightingMode::softmax_objectness;
    // Softmax sharpness over the quality scalar; 1.0 is the plain
    // exp(phi) / sum exp(phi) form. IoU and objectness live in [0, 1], so the
    // knob mostly matters below 1.
    double temperature = 1.0;
};

// One region's embedding plus its proposal-quality scalars.
struct RegionObs {
    Embedding embedding;  // unit norm
    double iou = 0.0;
    double objectness = 0.0;
};

// Per-class aggregate representing a class's visual signature.
struct Prototype {
    int class_id = 0;
    Embedding embedding;  // unit norm
    std::size_t support = 0;
};

// Contribution of each region to its class prototype. Nonnegative, sums to 1.
// centroid: uniform 1/n. softmax modes: exp(phi/T) normalized with phi = iou
// or objectness. Throws EmptyClass on an empty list.
std::vector<double> weights(std::span<const RegionObs> regions, const WeightingSpec& spec);

// Normalized weighted sum of the region embeddings, summed in input order.
Prototype build_prototype(int class_id, std::span<const RegionObs> regions,
                          const WeightingSpec& spec);

// One prototype per class present in the batch; absent classes are omitted.
std::map<int, Prototype> batch_prototypes(const std::map<int, std::vector<RegionObs>>& by_class,
                                          const WeightingSpec& spec);

}  // namespace ovmix
