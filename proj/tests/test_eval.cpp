#include <cmath>
#include <vector>

#include <Eigen/Dense>

#include "doctest.h"
#include "oracles.hpp"
#include "ovmix/datagen.hpp"
#include "ovmix/error.hpp"
#include "ovmix/eval.hpp"
#include "ovmix/rng.hpp"

using namespace ovmix;

namespace {

Embedding unit_axis(int dim, int k) {
    Eigen::VectorXd v = Eigen::VectorXd::Zero(dim);
    v[k] = 1.0;
    return Embedding::unit(v);
}

Embedding random_unit(Rng& rng, int dim) {
    Eigen::VectorXd v(dim);
    for (int k = 0; k < dim; ++k) v[k] = rng.normal();
    return l2_normalize(v);
}

Eigen::VectorXd random_scores(Rng& rng, int n) {
    Eigen::VectorXd v(n);
    for (int k = 0; k < n; ++k) v[k] = rng.uniform(0.05, 0.95);
    return v;
}

// Two base classes on axes 0/1 plus one novel on the diagonal.
ClassRegistry small_registry() {
    std::vector<ClassRecord> recs;
    recs.push_back(ClassRecord{0, "b0", ClassGroup::base, unit_axis(3, 0)});
    recs.push_back(ClassRecord{1, "b1", ClassGroup::base, unit_axis(3, 1)});
    Eigen::VectorXd diag(3);
    diag << 1.0, 1.0, 0.0;
    recs.push_back(ClassRecord{2, "n0", ClassGroup::novel, l2_normalize(diag)});
    return ClassRegistry(3, std::move(recs));
}

Eigen::Index argmax_of(const Eigen::VectorXd& v) {
    Eigen::Index best = 0;
    for (Eigen::Index i = 1; i < v.size(); ++i) {
        if (v[i] > v[best]) best = i;
    }
    return best;
}

}  // namespace

TEST_CASE("positivity transforms: hand values, parsing, validation") {
    const ClassRegistry reg = small_registry();
    const Embedding on_axis = unit_axis(3, 0);

    // cos = (1, 0, 1/sqrt 2) against the three records.
    const Eigen::VectorXd logi = head_scores(on_axis, reg, Positivity::logistic(50.0));
    CHECK(logi[0] == doctest::Approx(1.0 / (1.0 + std::exp(-50.0))).epsilon(1e-12));
    CHECK(logi[1] == 0.5);
    CHECK(logi[2] ==
          doctest::Approx(1.0 / (1.0 + std::exp(-50.0 / std::sqrt(2.0)))).epsilon(1e-12));

    const Eigen::VectorXd shift = head_scores(on_axis, reg, Positivity::shift_clamp(1e-6));
    CHECK(shift[0] == 1.0);
    CHECK(shift[1] == 0.5);
    CHECK(shift[2] == doctest::Approx((1.0 + 1.0 / std::sqrt(2.0)) / 2.0).epsilon(1e-12));

    // The clamp floor catches anti-parallel cosines.
    Eigen::VectorXd neg(3);
    neg << -1.0, 0.0, 0.0;
    const Eigen::VectorXd floored =
        head_scores(Embedding::unit(neg), reg, Positivity::shift_clamp(1e-6));
    CHECK(floored[0] == 0.5e-6);

    for (int k = 0; k < 3; ++k) {
        CHECK(logi[k] > 0.0);
        // the steep default logistic saturates to 1.0 in double precision
        CHECK(logi[k] <= 1.0);
        CHECK(shift[k] > 0.0);
        CHECK(shift[k] <= 1.0);
    }

    const Positivity p1 = positivity_from_string("logistic");
    CHECK(p1.kind == PositivityKind::logistic);
    CHECK(p1.param == 50.0);
    const Positivity p2 = positivity_from_string("logistic:10");
    CHECK(p2.param == 10.0);
    const Positivity p3 = positivity_from_string("shift_clamp:1e-8");
    CHECK(p3.kind == PositivityKind::shift_clamp);
    CHECK(p3.param == 1e-8);
    CHECK(positivity_from_string(to_string(p2)).param == 10.0);
    CHECK_THROWS_AS((void)positivity_from_string("relu"), ConfigError);
    CHECK_THROWS_AS((void)positivity_from_string("logistic:x"), ConfigError);

    CHECK_NOTHROW(validate(FusionParams{}));
    CHECK_THROWS_AS(validate(FusionParams{-0.1, 0.5, Positivity::logistic()}), ConfigError);
    CHECK_THROWS_AS(validate(FusionParams{0.5, 1.2, Positivity::logistic()}), ConfigError);
    CHECK_THROWS_AS(validate(FusionParams{0.5, 0.5, Positivity::logistic(0.0)}), ConfigError);

    const FusionParams lt = long_tail_preset();
    CHECK(lt.alpha == 0.15);
    CHECK(lt.beta == 0.35);
}

TEST_CASE("fusion endpoints reproduce a single head bitwise") {
    Rng rng(701);
    const ClassRegistry reg = small_registry();
    for (int trial = 0; trial < 100; ++trial) {
        const Eigen::VectorXd proxy = random_scores(rng, 3);
        const Eigen::VectorXd bce = random_scores(rng, 3);

        const Eigen::VectorXd only_bce =
            fuse_from_scores(proxy, bce, reg, FusionParams{0.0, 0.0, Positivity::logistic()});
        CHECK(only_bce == bce);  // bitwise: no pow round trip
        const Eigen::VectorXd only_proxy =
            fuse_from_scores(proxy, bce, reg, FusionParams{1.0, 1.0, Positivity::logistic()});
        CHECK(only_proxy == proxy);

        // alpha governs base rows, beta novel rows, independently.
        const Eigen::VectorXd split =
            fuse_from_scores(proxy, bce, reg, FusionParams{0.0, 1.0, Positivity::logistic()});
        CHECK(split[0] == bce[0]);
        CHECK(split[1] == bce[1]);
        CHECK(split[2] == proxy[2]);
    }
}

TEST_CASE("fusing a head with itself is the identity, up to pow rounding") {
    Rng rng(703);
    const ClassRegistry reg = small_registry();
    for (double a : {0.0, 0.25, 0.45, 0.65, 1.0}) {
        for (double b : {0.0, 0.35, 0.5, 1.0}) {
            const Eigen::VectorXd s = random_scores(rng, 3);
            const Eigen::VectorXd fused =
                fuse_from_scores(s, s, reg, FusionParams{a, b, Positivity::logistic()});
            for (int k = 0; k < 3; ++k) {
                CHECK(fused[k] == doctest::Approx(s[k]).epsilon(1e-12));
            }
        }
    }
}

TEST_CASE("fused argmax is invariant to a shared positive rescaling") {
    Rng rng(705);
    const ClassRegistry reg = small_registry();
    const FusionParams params{0.45, 0.65, Positivity::logistic()};
    for (int trial = 0; trial < 200; ++trial) {
        const Eigen::VectorXd proxy = random_scores(rng, 3);
        const Eigen::VectorXd bce = random_scores(rng, 3);
        const double c = std::exp(rng.uniform(-2.0, 2.0));
        const Eigen::Index before =
            argmax_of(fuse_from_scores(proxy, bce, reg, params));
        const Eigen::Index after = argmax_of(
            fuse_from_scores((c * proxy).eval(), (c * bce).eval(), reg, params));
        CHECK(before == after);
    }
}

TEST_CASE("fuse_from_scores validates groups and lengths") {
    Eigen::VectorXd e1(2);
    e1 << 1.0, 0.0;
    const ClassRegistry proxy_reg(
        2, {ClassRecord{0, "p", ClassGroup::proxy, Embedding::unit(e1)}});
    Eigen::VectorXd s(1);
    s << 0.5;
    CHECK_THROWS_AS(
        (void)fuse_from_scores(s, s, proxy_reg, FusionParams{0.5, 0.5, Positivity::logistic()}),
        UnknownGroup);

    const ClassRegistry reg = small_registry();
    Eigen::VectorXd wrong(2);
    wrong << 0.5, 0.5;
    Eigen::VectorXd right(3);
    right << 0.5, 0.5, 0.5;
    CHECK_THROWS_AS((void)fuse_from_scores(wrong, right, reg,
                                           FusionParams{0.5, 0.5, Positivity::logistic()}),
                    DimensionMismatch);
}

TEST_CASE("evaluate recovers every label on a noiseless benchmark with the exact head") {
    SyntheticSpec spec;
    spec.seed = 11;
    spec.embedding_dim = 4;
    spec.feature_dim = 6;
    spec.n_base = 12;
    spec.n_novel = 4;
    spec.samples_per_class = 3;
    spec.quality_noise_coupling = 0.0;  // features are exactly A * t_c
    const Benchmark bm = gen_benchmark(spec);

    // Recover the generator's linear map from the noiseless base features,
    // then use its pseudo-inverse as the head: W * (A * t) = t.
    Eigen::MatrixXd T(4, 12), F(6, 12);
    for (int c = 0; c < 12; ++c) {
        T.col(c) = bm.registry.by_id(c).text_embedding.values();
        for (const auto& s : bm.train) {
            if (s.class_id == c) {
                F.col(c) = s.feature;
                break;
            }
        }
    }
    const Eigen::MatrixXd A_hat = F * T.completeOrthogonalDecomposition().pseudoInverse();
    HeadParams exact;
    exact.matrix = A_hat.completeOrthogonalDecomposition().pseudoInverse();

    // The steep logistic rounds every cosine above ~0.73 to a score of
    // exactly 1.0, which turns distinct classes into argmax ties; the affine
    // transform keeps the cosine ordering intact, so recovery is exact.
    const FusionParams fp{0.0, 0.0, Positivity::shift_clamp()};
    const EvalReport rep = evaluate(exact, exact, bm.eval, bm.registry, fp);
    CHECK(rep.base_top1 == 1.0);
    CHECK(rep.novel_top1 == 1.0);
    CHECK(rep.overall_top1 == 1.0);

    // Count invariants hold as well.
    CHECK(rep.base_total == 36);
    CHECK(rep.novel_total == 12);
    std::size_t per_class_total = 0, per_class_correct = 0;
    for (const auto& st : rep.per_class) {
        per_class_total += st.total;
        per_class_correct += st.correct;
    }
    CHECK(per_class_total == bm.eval.size());
    CHECK(per_class_correct == rep.base_correct + rep.novel_correct);
    CHECK(rep.confusion.sum() == static_cast<int>(bm.eval.size()));
    CHECK(rep.confusion.diagonal().sum() == static_cast<int>(bm.eval.size()));
}

TEST_CASE("evaluate handles a base-only registry with the empty-group convention") {
    Eigen::VectorXd e1(2), e2(2);
    e1 << 1.0, 0.0;
    e2 << 0.0, 1.0;
    const ClassRegistry reg(2, {ClassRecord{0, "only", ClassGroup::base, Embedding::unit(e1)}});

    HeadParams head;
    head.matrix = Eigen::MatrixXd::Identity(2, 2);
    std::vector<RegionSample> samples;
    for (int k = 0; k < 4; ++k) {
        samples.push_back(RegionSample{e1, 0, 1.0, 1.0});
    }
    const EvalReport rep = evaluate(head, head, samples, reg, FusionParams{});
    CHECK(rep.overall_top1 == 1.0);  // a single class cannot be mispredicted
    CHECK(rep.base_top1 == 1.0);
    CHECK(rep.novel_top1 == 0.0);  // empty group reports 0
    CHECK(rep.novel_total == 0);

    CHECK_THROWS_AS((void)evaluate(head, head, {}, reg, FusionParams{}), ConfigError);
    std::vector<RegionSample> unknown = samples;
    unknown.front().class_id = 9;
    CHECK_THROWS_AS((void)evaluate(head, head, unknown, reg, FusionParams{}), UnknownClass);
}

TEST_CASE("sweep_fusion covers the grid alpha-major and matches evaluate row by row") {
    SyntheticSpec spec;
    spec.embedding_dim = 4;
    spec.feature_dim = 6;
    spec.n_base = 3;
    spec.n_novel = 2;
    spec.samples_per_class = 8;
    const Benchmark bm = gen_benchmark(spec);
    Rng rng(707);
    HeadParams hp, hb;
    hp.matrix.resize(4, 6);
    hb.matrix.resize(4, 6);
    for (int r = 0; r < 4; ++r) {
        for (int c = 0; c < 6; ++c) {
            hp.matrix(r, c) = rng.normal();
            hb.matrix(r, c) = rng.normal();
        }
    }

    const std::vector<double> alphas = {0.0, 0.5, 1.0};
    const std::vector<double> betas = {0.0, 0.65};
    const auto rows =
        sweep_fusion(hp, hb, bm.eval, bm.registry, alphas, betas, Positivity::logistic());
    REQUIRE(rows.size() == 6);
    std::size_t k = 0;
    for (double a : alphas) {
        for (double b : betas) {
            CHECK(rows[k].alpha == a);
            CHECK(rows[k].beta == b);
            const EvalReport rep = evaluate(hp, hb, bm.eval, bm.registry,
                                            FusionParams{a, b, Positivity::logistic()});
            // Same forward pass, same transforms: results agree bitwise.
            CHECK(rows[k].base_top1 == rep.base_top1);
            CHECK(rows[k].novel_top1 == rep.novel_top1);
            CHECK(rows[k].overall_top1 == rep.overall_top1);
            ++k;
        }
    }

    CHECK_THROWS_AS((void)sweep_fusion(hp, hb, bm.eval, bm.registry, {}, betas,
                                       Positivity::logistic()),
                    ConfigError);
    const std::vector<double> bad = {1.5};
    CHECK_THROWS_AS((void)sweep_fusion(hp, hb, bm.eval, bm.registry, bad, betas,
                                       Positivity::logistic()),
                    ConfigError);
}

TEST_CASE("similarity_histogram: degenerate and orthogonal inputs") {
    std::vector<Embedding> axes = {unit_axis(4, 0), unit_axis(4, 1)};
    std::vector<Embedding> same = axes;

    const SimilarityHistogram self = similarity_histogram(axes, same, 8);
    CHECK(self.bin_width == 0.25);
    CHECK(self.per_novel_max == std::vector<double>{1.0, 1.0});
    CHECK(self.mean_per_novel_max == 1.0);
    CHECK(self.mean_similarity == doctest::Approx(0.5).epsilon(1e-12));
    std::size_t total = 0;
    for (auto c : self.counts) total += c;
    CHECK(total == 4);
    CHECK(self.counts.back() == 2);  // the two cosines of exactly 1.0, right-closed
    CHECK(self.counts[4] == 2);      // the two zeros land in [0, 0.25)

    std::vector<Embedding> far = {unit_axis(4, 2), unit_axis(4, 3)};
    const SimilarityHistogram ortho = similarity_histogram(axes, far, 4);
    CHECK(ortho.mean_per_novel_max == 0.0);
    CHECK(ortho.mean_similarity == 0.0);
    CHECK(ortho.counts[2] == 4);  // all cosines 0 fall into [0, 0.5)

    CHECK_THROWS_AS((void)similarity_histogram({}, far, 4), EmptyGroup);
    CHECK_THROWS_AS((void)similarity_histogram(axes, {}, 4), EmptyGroup);
    CHECK_THROWS_AS((void)similarity_histogram(axes, far, 0), ConfigError);
}

TEST_CASE("hull_proximity hand cases and the single-vs-pair dominance") {
    const ClassRegistry reg = small_registry();  // bases on axes 0 and 1

    // A base class itself: everything is 1, residual 0.
    const HullProximity at_base = hull_proximity(unit_axis(3, 0), reg);
    CHECK(at_base.nearest_single_sim == 1.0);
    CHECK(at_base.best_pair_mix_sim == 1.0);
    CHECK(at_base.residual == 0.0);

    // The diagonal between the two bases: a single class reaches 1/sqrt 2,
    // the lambda 0.5 mix reaches it exactly.
    Eigen::VectorXd diag(3);
    diag << 1.0, 1.0, 0.0;
    const HullProximity mid = hull_proximity(l2_normalize(diag), reg);
    CHECK(mid.nearest_single_sim == doctest::Approx(1.0 / std::sqrt(2.0)).epsilon(1e-12));
    CHECK(mid.best_pair_mix_sim >= 1.0 - 1e-12);
    CHECK(mid.best.lambda == 0.5);
    CHECK(mid.residual <= 1e-12);

    // Orthogonal to the whole base plane: no mix gets any closer.
    const HullProximity off = hull_proximity(unit_axis(3, 2), reg);
    CHECK(off.nearest_single_sim == 0.0);
    CHECK(off.best_pair_mix_sim == 0.0);
    CHECK(off.residual == 1.0);

    Eigen::VectorXd e1(2);
    e1 << 1.0, 0.0;
    const ClassRegistry lone(2, {ClassRecord{0, "b", ClassGroup::base, Embedding::unit(e1)}});
    CHECK_THROWS_AS((void)hull_proximity(unit_axis(2, 1), lone), InsufficientClasses);
}

TEST_CASE("pair mixes never score below the best single class") {
    Rng rng(709);
    for (int trial = 0; trial < 25; ++trial) {
        std::vector<ClassRecord> recs;
        const int n = 3 + static_cast<int>(rng.index(5));
        for (int k = 0; k < n; ++k) {
            recs.push_back(ClassRecord{k, "b" + std::to_string(k), ClassGroup::base,
                                       random_unit(rng, 8)});
        }
        const ClassRegistry reg(8, std::move(recs));
        const HullProximity hp = hull_proximity(random_unit(rng, 8), reg);
        CHECK(hp.best_pair_mix_sim >= hp.nearest_single_sim);
        CHECK(hp.residual == 1.0 - hp.best_pair_mix_sim);
        CHECK(hp.best.class_i != hp.best.class_j);
    }
}
