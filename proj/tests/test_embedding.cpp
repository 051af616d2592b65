#include <cmath>

#include <Eigen/Dense>

#include "doctest.h"
#include "ovmix/embedding.hpp"
#include "ovmix/error.hpp"
#include "ovmix/rng.hpp"

using namespace ovmix;

namespace {

Eigen::VectorXd vec2(double a, double b) {
    Eigen::VectorXd v(2);
    v << a, b;
    return v;
}

Eigen::VectorXd random_vec(Rng& rng, int dim) {
    Eigen::VectorXd v(dim);
    for (int k = 0; k < dim; ++k) v[k] = rng.normal();
    return v;
}

}  // namespace

TEST_CASE("l2_normalize hits the hand-computed values") {
    const Embedding a = l2_normalize(vec2(3.0, 4.0));
    CHECK(a.values()[0] == doctest::Approx(0.6).epsilon(1e-12));
    CHECK(a.values()[1] == doctest::Approx(0.8).epsilon(1e-12));
    CHECK(a.normalized());

    // A unit input passes through exactly: the norm is exactly 1.0.
    const Embedding e1 = l2_normalize(vec2(1.0, 0.0));
    CHECK(e1.values()[0] == 1.0);
    CHECK(e1.values()[1] == 0.0);

    CHECK_THROWS_AS((void)l2_normalize(vec2(0.0, 0.0)), NearZeroNorm);
}

TEST_CASE("l2_normalize is scale invariant") {
    Rng rng(101);
    for (int trial = 0; trial < 200; ++trial) {
        const Eigen::VectorXd v = random_vec(rng, 16);
        if (v.norm() <= 1e-6) continue;
        const double s = std::exp(rng.uniform(-3.0, 3.0));
        const Eigen::VectorXd a = l2_normalize(v).values();
        const Eigen::VectorXd b = l2_normalize((s * v).eval()).values();
        CHECK((a - b).cwiseAbs().maxCoeff() <= 1e-12);
    }
}

TEST_CASE("cosine_sim hits the hand-computed values") {
    const Embedding e1 = Embedding::unit(vec2(1.0, 0.0));
    const Embedding e2 = Embedding::unit(vec2(0.0, 1.0));
    const Embedding diag = l2_normalize(vec2(1.0, 1.0));
    CHECK(cosine_sim(e1, e1) == 1.0);
    CHECK(cosine_sim(e1, e2) == 0.0);
    CHECK(cosine_sim(diag, e1) == doctest::Approx(0.70710678).epsilon(1e-8));
}

TEST_CASE("cosine_sim is symmetric, clamped, and validates dimensions") {
    Rng rng(103);
    for (int trial = 0; trial < 500; ++trial) {
        const Eigen::VectorXd a = random_vec(rng, 8);
        const Eigen::VectorXd b = random_vec(rng, 8);
        if (a.norm() <= 1e-6 || b.norm() <= 1e-6) continue;
        const double ab = cosine_sim(a, b);
        CHECK(ab == cosine_sim(b, a));
        CHECK(ab >= -1.0);
        CHECK(ab <= 1.0);
    }

    Eigen::VectorXd three(3);
    three << 1.0, 0.0, 0.0;
    CHECK_THROWS_AS((void)cosine_sim(vec2(1.0, 0.0), three), DimensionMismatch);
    CHECK_THROWS_AS((void)cosine_sim(vec2(0.0, 0.0), vec2(1.0, 0.0)), NearZeroNorm);
}

TEST_CASE("for unit vectors, zero l1 distance and cosine 1 coincide") {
    Rng rng(107);
    for (int trial = 0; trial < 200; ++trial) {
        const Embedding a = l2_normalize(random_vec(rng, 12));
        const Embedding b = l2_normalize(random_vec(rng, 12));
        const double l1 = (a.values() - b.values()).lpNorm<1>();
        const double cos_ab = cosine_sim(a, b);
        if (l1 == 0.0) CHECK(std::abs(cos_ab - 1.0) <= 1e-9);
        if (std::abs(cos_ab - 1.0) <= 1e-12) CHECK(l1 <= 1e-5);
        // Same vector, both directions of the equivalence.
        CHECK(std::abs(cosine_sim(a, a) - 1.0) <= 1e-9);
        CHECK((a.values() - a.values()).lpNorm<1>() == 0.0);
    }
}

TEST_CASE("Embedding constructors enforce their contracts") {
    // The unit factory accepts only vectors within 1e-6 of unit norm.
    CHECK_NOTHROW((void)Embedding::unit(vec2(1.0, 0.0)));
    CHECK_THROWS_AS((void)Embedding::unit(vec2(1.5, 0.0)), Error);

    // Non-finite entries are rejected by both factories.
    CHECK_THROWS_AS((void)Embedding::raw(vec2(std::nan(""), 0.0)), Error);
    CHECK_THROWS_AS((void)Embedding::unit(vec2(1.0, std::numeric_limits<double>::infinity())),
                    Error);

    const Embedding raw = Embedding::raw(vec2(3.0, 4.0));
    CHECK_FALSE(raw.normalized());
    CHECK(raw.dim() == 2);
}
