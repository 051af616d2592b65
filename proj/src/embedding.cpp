#include "ovmix/embedding.hpp"

#include <algorithm>
#include <cmath>

#include "ovmix/error.hpp"

namespace ovmix {

namespace {

void require_finite(const Eigen::VectorXd& v) {
    if (!v.allFinite()) {
        throw Error("embedding contains a non-finite entry");
    }
}

}  // namespace

Embedding Embedding::raw(Eigen::VectorXd v) {
    require_finite(v);
    return Embedding(std::move(v), false);
}

Embedding Embedding::unit(Eigen::VectorXd v) {
    require_finite(v);
    const double n = v.norm();
    if (std::abs(n - 1.0) > kUnitNormTol) {
        throw Error("embedding flagged normalized but ||v|| deviates from 1 by more than 1e-6");
    }
    return Embedding(std::move(v), true);
}

Embedding l2_normalize(const Eigen::VectorXd& v) {
    require_finite(v);
    const double n = v.norm();
    if (n <= kNormZeroEps) {
        throw NearZeroNorm("l2_normalize: norm is " + std::to_string(n));
    }
    return Embedding::unit(v / n);
}

Embedding l2_normalize(const Embedding& e) {
    return l2_normalize(e.values());
}

double cosine_sim(const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
    if (a.size() != b.size()) {
        throw DimensionMismatch("cosine_sim: dimensions " + std::to_string(a.size()) +
                                " vs " + std::to_string(b.size()));
    }
    const double na = a.norm();
    const double nb = b.norm();
    if (na <= kNormZeroEps || nb <= kNormZeroEps) {
        throw NearZeroNorm("cosine_sim: zero-norm operand");
    }
    const double c = a.dot(b) / (na * nb);
    return std::clamp(c, -1.0, 1.0);
}

double cosine_sim(const Embedding& a, const Embedding& b) {
    return cosine_sim(a.values(), b.values());
}

}  // namespace ovmix
