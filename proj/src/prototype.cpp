#include "ovmix/prototype.hpp"

#include <cmath>

#include "ovmix/error.hpp"

namespace ovmix {

std::string to_string(WeightingMode m) {
    switch (m) {
        case WeightingMode::centroid: return "centroid";
        case WeightingMode::softmax_iou: return "softmax_iou";
        case WeightingMode::softmax_objectness: return "softmax_objectness";
    }
    return "?";
}

WeightingMode weighting_mode_from_string(const std::string& s) {
    if (s == "centroid") return WeightingMode::centroid;
    if (s == "softmax_iou") return WeightingMode::softmax_iou;
    if (s == "softmax_objectness") return WeightingMode::softmax_objectness;
    throw ConfigError("unknown weighting mode \"" + s + "\"");
}

std::vector<double> weights(std::span<const RegionObs> regions, const WeightingSpec& spec) {
    if (regions.empty()) {
        throw EmptyClass("weights: no regions");
    }
    if (!(spec.temperature > 0.0)) {
        throw ConfigError("weighting temperature must be > 0");
    }
    const std::size_t n = regions.size();
    std::vector<double> w(n);
    if (spec.mode == WeightingMode::centroid) {
        const double u = 1.0 / static_cast<double>(n);
        for (auto& x : w) x = u;
        return w;
    }
    // Max-shifted softmax over the quality scalar.
    double max_phi = -std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < n; ++i) {
        const auto& r = regions[i];
        w[i] = (spec.mode == WeightingMode::softmax_iou ? r.iou : r.objectness) /
               spec.temperature;
        max_phi = std::max(max_phi, w[i]);
    }
    double total = 0.0;
    for (auto& x : w) {
        x = std::exp(x - max_phi);
        total += x;
    }
    for (auto& x : w) x /= total;
    return w;
}

Prototype build_prototype(int class_id, std::span<const RegionObs> regions,
                          const WeightingSpec& spec) {
    const std::vector<double> w = weights(regions, spec);
    Eigen::VectorXd sum = Eigen::VectorXd::Zero(regions.front().embedding.dim());
    for (std::size_t i = 0; i < regions.size(); ++i) {
        if (regions[i].embedding.dim() != sum.size()) {
            throw DimensionMismatch("build_prototype: inconsistent region dimensions");
        }
        sum += w[i] * regions[i].embedding.values();
    }
    return Prototype{class_id, l2_normalize(sum), regions.size()};
}

std::map<int, Prototype> batch_prototypes(const std::map<int, std::vector<RegionObs>>& by_class,
                                          const WeightingSpec& spec) {
    std::map<int, Prototype> out;
    for (const auto& [class_id, regions] : by_class) {
        out.emplace(class_id, build_prototype(class_id, regions, spec));
    }
    return out;
}

}  // namespace ovmix
