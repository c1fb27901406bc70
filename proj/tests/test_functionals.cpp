#include "dualmv/errors.hpp"
#include "dualmv/functionals.hpp"
#include "dualmv/numeric.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <random>

using namespace dualmv;

namespace {

std::shared_ptr<const SphereGrid> circle(std::size_t m) { return make_grid(GridSpec::circle(m)); }
std::shared_ptr<const SphereGrid> sphere(std::size_t b, std::size_t s) { return make_grid(GridSpec::sphere(b, s)); }

double ball_volume(int n) { return std::pow(kPi, n / 2.0) / std::tgamma(n / 2.0 + 1.0); }

KernelFunctional random_kernel(const std::shared_ptr<const SphereGrid>& g, int n, std::size_t entries,
                               std::mt19937_64& rng, bool allow_negative = false) {
    std::uniform_int_distribution<std::size_t> cell(0, g->size() - 1);
    std::uniform_real_distribution<double> w(allow_negative ? -2.0 : 0.1, 2.0);
    std::map<MultiIndex, double> weights;
    for (std::size_t e = 0; e < entries; ++e) {
        MultiIndex k(static_cast<std::size_t>(n));
        for (auto& x : k) x = cell(rng);
        weights[k] = w(rng);
    }
    return allow_negative ? KernelFunctional::signed_kernel(g, n, weights) : KernelFunctional(g, n, weights);
}

std::vector<std::vector<double>> signed_tuple(const SphereGrid& g, int n, std::mt19937_64& rng) {
    std::vector<std::vector<double>> f;
    for (int i = 0; i < n; ++i) f.push_back(random_signed_values(g, rng));
    return f;
}

std::vector<double> abs_values(std::vector<double> v) {
    for (auto& x : v) x = std::abs(x);
    return v;
}

// Re-evaluating F on the witness reproduces the recorded values.
void expect_reevaluable(const BlackBoxFunctional& f, const PropertyReport& r) {
    ASSERT_EQ(r.verdict, Verdict::Fail) << r.property;
    ASSERT_TRUE(r.witness.has_value());
    ASSERT_EQ(r.witness->tuples.size(), r.witness->values.size());
    for (std::size_t i = 0; i < r.witness->tuples.size(); ++i)
        EXPECT_EQ(f(r.witness->tuples[i]), r.witness->values[i]);
}

}  // namespace

TEST(Evaluate, OriginInAnySlotGivesZero) {
    const auto g = sphere(4, 8);
    std::mt19937_64 rng(1);
    const KernelFunctional k = random_kernel(g, 3, 40, rng);
    const DiagonalFunctional d = DiagonalFunctional::dmv_multiple(g);
    for (int slot = 0; slot < 3; ++slot) {
        Tuple t{random_grid_polycone(g, rng), random_grid_polycone(g, rng), random_grid_polycone(g, rng)};
        t[static_cast<std::size_t>(slot)] = StarSet::origin(3);
        EXPECT_EQ(k.evaluate(t), 0.0);
        EXPECT_EQ(d.evaluate(t), 0.0);
    }
}

TEST(Evaluate, DiagonalSigmaOverNIsTheDualMixedVolume) {
    std::mt19937_64 rng(2);
    for (const auto& g : {circle(16), sphere(4, 8)}) {
        const DiagonalFunctional d = DiagonalFunctional::dmv_multiple(g);
        for (int trial = 0; trial < 20; ++trial) {
            const Tuple t = random_trial_tuple(g, g->dim(), static_cast<std::size_t>(trial), rng);
            const double v = dual_mixed_volume(t).value;
            EXPECT_NEAR(d.evaluate(t), v, 1e-12 * std::max(1.0, v));
        }
    }
}

TEST(Evaluate, SingleKernelWeight) {
    const auto g = circle(2);
    const KernelFunctional k(g, 2, {{{0, 1}, 5.0}});
    const Tuple t{cell_cone(g, 0), cell_cone(g, 1)};
    EXPECT_EQ(k.evaluate(t), 5.0);
    const Tuple swapped{cell_cone(g, 1), cell_cone(g, 0)};
    EXPECT_EQ(k.evaluate(swapped), 0.0);
    EXPECT_EQ(k.weight({0, 1}), 5.0);
    EXPECT_EQ(k.weight({1, 1}), 0.0);
}

TEST(Evaluate, ConstructionErrors) {
    const auto g = circle(4);
    EXPECT_THROW(KernelFunctional(g, 2, {{{0, 1}, -1.0}}), InvalidParameter);
    EXPECT_THROW(KernelFunctional(g, 2, {{{0, 9}, 1.0}}), InvalidParameter);
    EXPECT_THROW(KernelFunctional(g, 2, {{{0, 1}, std::nan("")}}), InvalidParameter);
    EXPECT_THROW(DiagonalFunctional(g, 2, {1.0, 1.0}), InvalidParameter);
    const KernelFunctional k(g, 2, {{{0, 1}, 1.0}});
    const Tuple wrong{cell_cone(circle(8), 0), cell_cone(circle(8), 1)};
    EXPECT_THROW((void)k.evaluate(wrong), GridMismatch);
    const Tuple short_tuple{cell_cone(g, 0)};
    EXPECT_THROW(k.to_black_box()(short_tuple), ArityError);
}

TEST(SignedExtension, AgreesWithEvaluateOnNonnegativeInputs) {
    const auto g = sphere(4, 8);
    std::mt19937_64 rng(3);
    const KernelFunctional k = random_kernel(g, 3, 60, rng);
    for (int trial = 0; trial < 20; ++trial) {
        const Tuple t{random_grid_polycone(g, rng), random_grid_polycone(g, rng), random_grid_polycone(g, rng)};
        std::vector<std::vector<double>> f;
        for (const auto& b : t) f.push_back(values_on_grid(b, g));
        EXPECT_NEAR(extend_signed(k, f), k.evaluate(t), 1e-12 * std::max(1.0, k.evaluate(t)));
    }
}

TEST(SignedExtension, ExpansionMatchesContractionAndFlipsSign) {
    std::mt19937_64 rng(4);
    for (const auto& g : {circle(8), sphere(3, 6)}) {
        const int n = g->dim();
        const KernelFunctional k = random_kernel(g, n, 50, rng);
        for (int trial = 0; trial < 30; ++trial) {
            auto f = signed_tuple(*g, n, rng);
            const double direct = extend_signed(k, f);
            EXPECT_NEAR(extend_signed_expansion(k, f), direct, 1e-12 * std::max(1.0, std::abs(direct)));
            // Independent contraction loop.
            double oracle = 0.0;
            for (const auto& [idx, w] : k.weights()) {
                double p = w;
                for (int i = 0; i < n; ++i) p *= f[static_cast<std::size_t>(i)][idx[static_cast<std::size_t>(i)]];
                oracle += p;
            }
            EXPECT_NEAR(direct, oracle, 1e-12 * std::max(1.0, std::abs(oracle)));
            for (auto& x : f[0]) x = -x;
            EXPECT_NEAR(extend_signed(k, f), -direct, 1e-12 * std::max(1.0, std::abs(direct)));
        }
    }
}

TEST(SignedExtension, TelescopingIdentity) {
    const auto g = sphere(3, 6);
    std::mt19937_64 rng(5);
    const KernelFunctional k = random_kernel(g, 3, 50, rng);
    for (int trial = 0; trial < 30; ++trial) {
        const auto v = signed_tuple(*g, 3, rng);
        const auto w = signed_tuple(*g, 3, rng);
        double sum = 0.0;
        for (std::size_t i = 0; i < 3; ++i) {
            std::vector<std::vector<double>> mixed;
            for (std::size_t j = 0; j < i; ++j) mixed.push_back(w[j]);
            std::vector<double> diff(v[i].size());
            for (std::size_t c = 0; c < diff.size(); ++c) diff[c] = v[i][c] - w[i][c];
            mixed.push_back(diff);
            for (std::size_t j = i + 1; j < 3; ++j) mixed.push_back(v[j]);
            sum += extend_signed(k, mixed);
        }
        const double lhs = extend_signed(k, v) - extend_signed(k, w);
        EXPECT_NEAR(lhs, sum, 1e-12 * std::max(1.0, std::abs(lhs)));
    }
}

TEST(SignedExtension, AbsoluteValueDominationAndBoundedness) {
    std::mt19937_64 rng(6);
    for (const auto& g : {circle(8), sphere(3, 6)}) {
        const int n = g->dim();
        const KernelFunctional k = random_kernel(g, n, 50, rng);
        for (int trial = 0; trial < 30; ++trial) {
            const auto f = signed_tuple(*g, n, rng);
            const double value = std::abs(extend_signed(k, f));
            std::vector<std::vector<double>> all_abs;
            double norms = 1.0;
            for (const auto& v : f) {
                all_abs.push_back(abs_values(v));
                double m = 0.0;
                for (double x : v) m = std::max(m, std::abs(x));
                norms *= m;
            }
            EXPECT_LE(value, extend_signed(k, all_abs) * (1 + 1e-12));
            // Signed values in slot i only.
            for (std::size_t i = 0; i < f.size(); ++i) {
                auto one = all_abs;
                one[i] = f[i];
                const double signed_value = std::abs(extend_signed(k, one));
                one[i] = all_abs[i];
                EXPECT_LE(signed_value, extend_signed(k, one) * (1 + 1e-12));
            }
            EXPECT_LE(value, operator_norm_bound(k) * norms * (1 + 1e-12));
        }
    }
}

TEST(OperatorNormBound, Examples) {
    const auto g = sphere(4, 8);
    EXPECT_EQ(operator_norm_bound(KernelFunctional(g, 3, {})), 0.0);
    EXPECT_NEAR(operator_norm_bound(DiagonalFunctional::dmv_multiple(g).as_kernel()), 4 * kPi / 3, 1e-13);
    EXPECT_EQ(operator_norm_bound(KernelFunctional(g, 3, {{{1, 2, 3}, 5.0}})), 5.0);
}

TEST(Checkers, KernelPassesEverythingButRotation) {
    const auto g = sphere(3, 6);
    std::mt19937_64 rng(7);
    const BlackBoxFunctional f = random_kernel(g, 3, 40, rng).to_black_box();
    const CheckOptions opt{50, 7, 1e-9, nullptr};
    for (const auto& r : {check_additive(f, opt), check_positive(f, opt), check_increasing(f, opt),
                          check_homogeneous(f, opt)}) {
        EXPECT_EQ(r.verdict, Verdict::Pass) << r.property;
        EXPECT_LE(r.max_residual, 1e-12) << r.property;
        EXPECT_FALSE(r.witness.has_value());
        EXPECT_EQ(r.trials, 50u);
    }
}

TEST(Checkers, SignedKernelFailsPositivityAndMonotonicity) {
    const auto g = circle(4);
    const KernelFunctional k = KernelFunctional::signed_kernel(g, 2, {{{0, 0}, 1.0}, {{1, 1}, -1.0}});
    EXPECT_TRUE(k.has_negative_weight());
    const BlackBoxFunctional f = k.to_black_box("signed");
    const CheckOptions opt{100, 3, 1e-9, nullptr};
    expect_reevaluable(f, check_positive(f, opt));
    expect_reevaluable(f, check_increasing(f, opt));
    EXPECT_EQ(check_additive(f, opt).verdict, Verdict::Pass);
}

TEST(Checkers, VanishingSeparatesDiagonalFromOffDiagonal) {
    const auto g = circle(16);
    const BlackBoxFunctional d = DiagonalFunctional::dmv_multiple(g).to_black_box();
    EXPECT_EQ(check_vanishing(d).verdict, Verdict::Pass);
    const BlackBoxFunctional off = KernelFunctional(g, 2, {{{3, 7}, 1.0}}).to_black_box("off");
    const PropertyReport r = check_vanishing(off);
    expect_reevaluable(off, r);
    EXPECT_GT(std::abs(r.witness->lhs), 0.0);
}

TEST(Checkers, HomogeneityFactorsAndExactness) {
    const auto f = homogeneity_factors();
    ASSERT_EQ(f.size(), 6u);
    EXPECT_EQ(f[0], 0.0);
    EXPECT_NEAR(f[1], 1.0 / 3.0, 1e-16);
    EXPECT_NEAR(f[5], std::exp(1.0), 1e-15);
    const auto g = sphere(3, 6);
    const KernelFunctional k(g, 3, {{{0, 4, 7}, 2.0}, {{5, 5, 5}, 1.5}});
    std::mt19937_64 rng(8);
    for (int trial = 0; trial < 20; ++trial) {
        Tuple t{random_grid_polycone(g, rng), random_grid_polycone(g, rng), random_grid_polycone(g, rng)};
        const double base = k.evaluate(t);
        t[1] = scale(1.0 / 3.0, t[1]);
        EXPECT_NEAR(k.evaluate(t), base / 3.0, 1e-12 * std::max(1.0, base));
    }
}

TEST(Checkers, RotationNeedsNontrivialSymmetries) {
    const BlackBoxFunctional v = gallery("dmv", {2, circle(1), std::nullopt, 1.0});
    const PropertyReport r = check_rotation_invariant(v);
    EXPECT_EQ(r.verdict, Verdict::Inconclusive);
    EXPECT_FALSE(r.note.empty());
    const BlackBoxFunctional v16 = gallery("dmv", {2, circle(16), std::nullopt, 1.0});
    EXPECT_EQ(check_rotation_invariant(v16).verdict, Verdict::Pass);
}

TEST(Gallery, ClosedFormValues) {
    for (int n : {2, 3}) {
        const BlackBoxFunctional iv = gallery("intersection-volume", {n, nullptr, std::nullopt, 1.0});
        const Tuple balls(static_cast<std::size_t>(n), StarSet::ball(n));
        EXPECT_NEAR(iv(balls), ball_volume(n), 1e-13);
    }
    const BlackBoxFunctional pi = gallery("product-of-integrals", {2, nullptr, std::nullopt, 1.0});
    EXPECT_NEAR(pi(Tuple{StarSet::ball(2), StarSet::ball(2)}), 4 * kPi * kPi, 1e-12);
    const BlackBoxFunctional three = gallery("dmv", {3, nullptr, std::nullopt, 3.0});
    EXPECT_NEAR(three(Tuple(3, StarSet::ball(3))), 3 * ball_volume(3), 1e-12);
    const BlackBoxFunctional neg = gallery("neg-dmv", {2, nullptr, std::nullopt, 1.0});
    EXPECT_NEAR(neg(Tuple(2, StarSet::ball(2))), -kPi, 1e-13);
}

TEST(Gallery, WeightedByMRejectsCenteredBalls) {
    const auto g = circle(16);
    EXPECT_THROW(gallery("weighted-by-M", {2, g, StarSet::ball(2, 2.0), 1.0}), InvalidParameter);
    EXPECT_THROW(gallery("weighted-by-M", {2, nullptr, std::nullopt, 1.0}), InvalidParameter);
    EXPECT_THROW(gallery("no-such-functional", {2, g, std::nullopt, 1.0}), InvalidParameter);
    EXPECT_NO_THROW(gallery("weighted-by-M", {2, g, std::nullopt, 1.0}));
    EXPECT_EQ(gallery_names().size(), 5u);
}

TEST(Gallery, EachCounterexampleFailsItsOwnProperty) {
    for (const auto& g : {circle(16), sphere(4, 8)}) {
        const int n = g->dim();
        const CheckOptions opt{60, 11, 1e-9, nullptr};
        const BlackBoxFunctional iv = gallery("intersection-volume", {n, g, std::nullopt, 1.0});
        expect_reevaluable(iv, check_additive(iv, opt));
        EXPECT_EQ(check_vanishing(iv, opt).verdict, Verdict::Pass);
        EXPECT_EQ(check_rotation_invariant(iv, opt).verdict, Verdict::Pass);

        const BlackBoxFunctional pi = gallery("product-of-integrals", {n, g, std::nullopt, 1.0});
        const PropertyReport van = check_vanishing(pi, opt);
        expect_reevaluable(pi, van);
        EXPECT_GT(van.witness->lhs, 0.0);
        EXPECT_EQ(check_additive(pi, opt).verdict, Verdict::Pass);
        EXPECT_EQ(check_rotation_invariant(pi, opt).verdict, Verdict::Pass);

        const BlackBoxFunctional wm = gallery("weighted-by-M", {n, g, std::nullopt, 1.0});
        expect_reevaluable(wm, check_rotation_invariant(wm, opt));
        EXPECT_EQ(check_additive(wm, opt).verdict, Verdict::Pass);
        EXPECT_EQ(check_vanishing(wm, opt).verdict, Verdict::Pass);

        const BlackBoxFunctional neg = gallery("neg-dmv", {n, g, std::nullopt, 1.0});
        expect_reevaluable(neg, check_increasing(neg, opt));
        expect_reevaluable(neg, check_positive(neg, opt));
    }
}

TEST(CellIntegrals, TiltedBodyMatchesClosedForm) {
    // rho = 1 + u_1 / 2 integrated over each cell box.
    const StarSet tilt2 = StarSet::sampler(2, [](const Direction& u) { return 1.0 + 0.5 * u[0]; }, 1.5, true);
    const auto g2 = circle(16);
    const auto c2 = cell_integrals(tilt2, g2);
    for (std::size_t k = 0; k < g2->size(); ++k) {
        const auto& b = g2->cell(k).box;
        const double exact = (b.phi_hi - b.phi_lo) + 0.5 * (std::sin(b.phi_hi) - std::sin(b.phi_lo));
        EXPECT_NEAR(c2[k], exact, 1e-13);
    }
    const StarSet tilt3 = StarSet::sampler(3, [](const Direction& u) { return 1.0 + 0.5 * u[0]; }, 1.5, true);
    const auto g3 = sphere(4, 8);
    const auto c3 = cell_integrals(tilt3, g3);
    const auto sin2 = [](double t) { return t / 2 - std::sin(2 * t) / 4; };
    for (std::size_t k = 0; k < g3->size(); ++k) {
        const auto& b = g3->cell(k).box;
        const double exact = (b.phi_hi - b.phi_lo) * (std::cos(b.theta_lo) - std::cos(b.theta_hi)) +
                             0.5 * (std::sin(b.phi_hi) - std::sin(b.phi_lo)) * (sin2(b.theta_hi) - sin2(b.theta_lo));
        EXPECT_NEAR(c3[k], exact, 1e-13);
    }
    const auto flat = cell_integrals(StarSet::ball(3, 2.0), g3);
    for (std::size_t k = 0; k < g3->size(); ++k) EXPECT_NEAR(flat[k], 2.0 * g3->cell(k).weight, 1e-15);
}
