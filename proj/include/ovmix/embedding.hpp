#pragma once

#include <Eigen/Dense>

namespace ovmix {

inline constexpr double kNormZeroEps = 1e-12;   // below this a norm is degenerate
inline constexpr double kUnitNormTol = 1e-6;    // slack on the normalized flag

// Fixed-dimension real vector with an explicit unit-norm flag. Entries are
// always finite; when the flag is set, | ||v||_2 - 1 | <= 1e-6.
class Embedding {
public:
    Embedding() = default;

    // Wraps a vector without normalizing. Throws Error on non-finite entries.
    static Embedding raw(Eigen::VectorXd v);

    // Wraps a vector that is already unit-norm (within tolerance).
    static Embedding unit(Eigen::VectorXd v);

    const Eigen::VectorXd& values() const { return values_; }
    Eigen::Index dim() const { return values_.size(); }
    bool normalized() const { return normalized_; }

    bool operator==(const Embedding& other) const {
        return normalized_ == other.normalized_ && values_ == other.values_;
    }

private:
    Embedding(Eigen::VectorXd v, bool normalized)
        : values_(std::move(v)), normalized_(normalized) {}

    Eigen::VectorXd values_;
    bool normalized_ = false;
};

// x / ||x||_2. Throws NearZeroNorm when ||x||_2 <= 1e-12, which signals a
// degenerate mixup or an empty prototype upstream.
Embedding l2_normalize(const Eigen::VectorXd& v);
Embedding l2_normalize(const Embedding& e);

// a.b / (||a|| ||b||), clamped into [-1, 1] to guard downstream transforms.
// Throws DimensionMismatch / NearZeroNorm.
double cosine_sim(const Embedding& a, const Embedding& b);
double cosine_sim(const Eigen::VectorXd& a, const Eigen::VectorXd& b);

}  // namespace ovmix
