#include "dualmv/characterize.hpp"
#include "dualmv/errors.hpp"
#include "dualmv/numeric.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <random>

using namespace dualmv;

namespace {

std::shared_ptr<const SphereGrid> circle(std::size_t m) { return make_grid(GridSpec::circle(m)); }
std::shared_ptr<const SphereGrid> sphere(std::size_t b, std::size_t s) { return make_grid(GridSpec::sphere(b, s)); }

BlackBoxFunctional zero(const std::shared_ptr<const SphereGrid>& g) {
    return BlackBoxFunctional("zero", g->dim(), [](std::span<const StarSet>) { return 0.0; }, g);
}

BlackBoxFunctional scaled_dmv(const std::shared_ptr<const SphereGrid>& g, double c) {
    return gallery("dmv", {g->dim(), g, std::nullopt, c});
}

// Integral of 1 + u_1 / 2 over a cell box.
double tilt_integral(const CellBox& b, int dim) {
    if (dim == 2) return (b.phi_hi - b.phi_lo) + 0.5 * (std::sin(b.phi_hi) - std::sin(b.phi_lo));
    const auto sin2 = [](double t) { return t / 2 - std::sin(2 * t) / 4; };
    return (b.phi_hi - b.phi_lo) * (std::cos(b.theta_lo) - std::cos(b.theta_hi)) +
           0.5 * (std::sin(b.phi_hi) - std::sin(b.phi_lo)) * (sin2(b.theta_hi) - sin2(b.theta_lo));
}

}  // namespace

TEST(RecoverMeasure, RandomKernelRoundTrips) {
    std::mt19937_64 rng(1);
    for (const auto& g : {circle(16), sphere(4, 8)}) {
        const int n = g->dim();
        std::uniform_int_distribution<std::size_t> cell(0, g->size() - 1);
        std::uniform_real_distribution<double> w(0.1, 3.0);
        std::map<MultiIndex, double> weights;
        for (int e = 0; e < 40; ++e) {
            MultiIndex k(static_cast<std::size_t>(n));
            for (auto& x : k) x = cell(rng);
            weights[k] = w(rng);
        }
        const KernelFunctional truth(g, n, weights);
        const RecoveredMeasure m = recover_measure(truth.to_black_box(), g);
        EXPECT_LE(m.residual, 1e-12);
        EXPECT_EQ(m.validation_trials, 100u);
        EXPECT_FALSE(m.negative_weights);
        EXPECT_EQ(m.kernel.weights().size(), weights.size());
        for (const auto& [k, v] : weights) EXPECT_NEAR(m.kernel.weight(k), v, 1e-12 * v);
    }
}

TEST(RecoverMeasure, DualMixedVolumeAndZero) {
    const auto g = sphere(3, 6);
    const RecoveredMeasure v = recover_measure(scaled_dmv(g, 1.0), g);
    for (const auto& [k, w] : v.kernel.weights()) {
        EXPECT_TRUE(std::all_of(k.begin(), k.end(), [&](std::size_t x) { return x == k[0]; }));
        EXPECT_NEAR(w, g->cell(k[0]).weight / 3.0, 1e-15);
    }
    EXPECT_EQ(v.kernel.weights().size(), g->size());
    const RecoveredMeasure z = recover_measure(zero(g), g);
    EXPECT_TRUE(z.kernel.weights().empty());
    EXPECT_EQ(z.residual, 0.0);
}

TEST(RecoverMeasure, BudgetAndDiagonalOnly) {
    const auto g = circle(64);
    RecoveryOptions tight;
    tight.budget = 1000;
    try {
        (void)recover_measure(scaled_dmv(g, 1.0), g, tight);
        FAIL() << "expected BudgetExceeded";
    } catch (const BudgetExceeded& e) {
        EXPECT_NE(std::string(e.what()).find("1000"), std::string::npos);
    }
    tight.diagonal_only = true;
    const RecoveredMeasure m = recover_measure(scaled_dmv(g, 2.0), g, tight);
    EXPECT_EQ(m.evaluations, 64u);
    EXPECT_TRUE(m.diagonal_only);
    EXPECT_LE(m.residual, 1e-12);
}

TEST(RecoverMeasure, NegativeWeightsAreFlagged) {
    const auto g = circle(4);
    const BlackBoxFunctional neg = gallery("neg-dmv", {2, g, std::nullopt, 1.0});
    const RecoveredMeasure m = recover_measure(neg, g);
    EXPECT_TRUE(m.negative_weights);
}

TEST(Diagonality, Examples) {
    const auto g = circle(8);
    const DiagonalityResult d = diagonality_test(DiagonalFunctional::dmv_multiple(g).as_kernel());
    EXPECT_EQ(d.verdict, Verdict::Pass);
    EXPECT_EQ(d.off_diagonal_mass, 0.0);
    ASSERT_TRUE(d.projected.has_value());
    for (std::size_t k = 0; k < g->size(); ++k) EXPECT_NEAR((*d.projected)[k], g->cell(k).weight / 2, 1e-15);

    const DiagonalityResult off = diagonality_test(KernelFunctional(g, 2, {{{0, 0}, 1.0}, {{2, 5}, 5.0}}));
    EXPECT_EQ(off.verdict, Verdict::Fail);
    EXPECT_EQ(off.off_diagonal_mass, 5.0);
    ASSERT_TRUE(off.worst.has_value());
    EXPECT_EQ(*off.worst, (MultiIndex{2, 5}));
    EXPECT_FALSE(off.projected.has_value());
}

TEST(Diagonality, VanishingFunctionalsRecoverDiagonally) {
    const auto g = sphere(3, 6);
    const BlackBoxFunctional wm = gallery("weighted-by-M", {3, g, std::nullopt, 1.0});
    ASSERT_EQ(check_vanishing(wm).verdict, Verdict::Pass);
    const DiagonalityResult d = diagonality_test(recover_measure(wm, g));
    EXPECT_EQ(d.verdict, Verdict::Pass);
    EXPECT_LE(d.off_diagonal_mass, 1e-9 * d.total_mass);
}

TEST(Uniformity, Examples) {
    const auto g = sphere(4, 8);
    const UniformityResult u = uniformity_test(DiagonalFunctional::dmv_multiple(g));
    EXPECT_EQ(u.verdict, Verdict::Pass);
    EXPECT_NEAR(u.lambda, 1.0 / 3.0, 1e-14);

    std::vector<double> w;
    for (const auto& c : g->cells()) w.push_back(c.weight / 3.0);
    w[13] *= 1.01;
    const UniformityResult bad = uniformity_test(g, w);
    EXPECT_EQ(bad.verdict, Verdict::Fail);
    EXPECT_EQ(bad.worst_cell, 13u);

    const auto d = diagonality_test(recover_measure(scaled_dmv(g, 3.0), g));
    const UniformityResult rec = uniformity_test(g, *d.projected);
    EXPECT_EQ(rec.verdict, Verdict::Pass);
    EXPECT_NEAR(rec.lambda, 1.0, 1e-14);

    const auto trivial = circle(1);
    const UniformityResult inc = uniformity_test(DiagonalFunctional::dmv_multiple(trivial));
    EXPECT_EQ(inc.verdict, Verdict::Inconclusive);
    EXPECT_FALSE(inc.note.empty());
}

TEST(EstimateConstant, Examples) {
    const auto g = sphere(3, 6);
    CheckOptions opt;
    opt.trials = 40;
    const ConstantEstimate one = estimate_constant(scaled_dmv(g, 1.0), opt);
    EXPECT_NEAR(one.c, 1.0, 1e-12);
    EXPECT_LE(one.spread, 1e-12);
    const ConstantEstimate none = estimate_constant(zero(g), opt);
    EXPECT_EQ(none.c, 0.0);
    EXPECT_EQ(none.spread, 0.0);
    const ConstantEstimate three = estimate_constant(DiagonalFunctional::dmv_multiple(g, 3.0).to_black_box(), opt);
    EXPECT_NEAR(three.c, 3.0, 1e-12);
    EXPECT_LE(three.spread, 1e-10);
    for (const auto& s : three.series) EXPECT_NEAR(s.ratio, s.f / s.dmv, 1e-15 * std::abs(s.ratio));

    opt.trials = 1;
    EXPECT_THROW(estimate_constant(scaled_dmv(g, 1.0), opt), InvalidParameter);
    const std::vector<Tuple> degenerate{
        Tuple{cell_cone(g, 0), cell_cone(g, 1), cell_cone(g, 2)},
        Tuple{StarSet::origin(3), StarSet::ball(3), StarSet::ball(3)},
    };
    EXPECT_THROW(estimate_constant(scaled_dmv(g, 1.0), degenerate), DegenerateSample);
}

TEST(Characterize, MultiplesOfTheDualMixedVolume) {
    for (const auto& g : {circle(16), sphere(3, 6)}) {
        for (double c : {0.0, 1.0, 3.0, 0.25}) {
            CharacterizeOptions opt;
            opt.check.trials = 40;
            const CharacterizationReport r = characterize(scaled_dmv(g, c), g, opt);
            EXPECT_EQ(r.conclusion, Conclusion::CTimesDmv) << c << " " << r.note;
            ASSERT_TRUE(r.constant.has_value());
            EXPECT_NEAR(r.constant->c, c, 1e-12);
            ASSERT_TRUE(r.uniformity.has_value());
            EXPECT_NEAR(r.uniformity->lambda, c / g->dim(), 1e-12);
            for (const auto& chk : r.checks) EXPECT_EQ(chk.verdict, Verdict::Pass) << chk.property;
        }
    }
}

TEST(Characterize, CounterexamplesNameTheirCulprit) {
    const auto g = circle(16);
    CharacterizeOptions opt;
    opt.check.trials = 40;
    const CharacterizationReport iv = characterize(gallery("intersection-volume", {2, g, std::nullopt, 1.0}), g, opt);
    EXPECT_EQ(iv.conclusion, Conclusion::HypothesisViolated);
    EXPECT_EQ(iv.culprit, "additive");

    const CharacterizationReport pi = characterize(gallery("product-of-integrals", {2, g, std::nullopt, 1.0}), g, opt);
    EXPECT_EQ(pi.conclusion, Conclusion::HypothesisViolated);
    EXPECT_EQ(pi.culprit, "vanishing");
    const PropertyReport* van = pi.check("vanishing");
    ASSERT_NE(van, nullptr);
    ASSERT_TRUE(van->witness.has_value());
    EXPECT_GT(van->witness->lhs, 0.0);
    EXPECT_NE(pi.check("additive"), nullptr);

    const CharacterizationReport neg = characterize(gallery("neg-dmv", {2, g, std::nullopt, 1.0}), g, opt);
    EXPECT_EQ(neg.culprit, "positive");
    opt.real_valued = true;
    const CharacterizationReport inc = characterize(gallery("neg-dmv", {2, g, std::nullopt, 1.0}), g, opt);
    EXPECT_EQ(inc.conclusion, Conclusion::HypothesisViolated);
    EXPECT_EQ(inc.culprit, "increasing");
    EXPECT_EQ(inc.check("positive"), nullptr);
}

TEST(Characterize, WeightedByMStopsAtADiagonalMeasure) {
    for (const auto& g : {circle(32), sphere(4, 8)}) {
        const int n = g->dim();
        CharacterizeOptions opt;
        opt.check.trials = 40;
        const CharacterizationReport r = characterize(gallery("weighted-by-M", {n, g, std::nullopt, 1.0}), g, opt);
        EXPECT_EQ(r.conclusion, Conclusion::DiagonalMeasure);
        const PropertyReport* rot = r.check("rotation-invariant");
        ASSERT_NE(rot, nullptr);
        EXPECT_EQ(rot->verdict, Verdict::Fail);
        ASSERT_TRUE(r.diagonality.has_value() && r.diagonality->projected.has_value());
        const auto& w = *r.diagonality->projected;
        for (std::size_t k = 0; k < g->size(); ++k) EXPECT_NEAR(w[k], tilt_integral(g->cell(k).box, n), 1e-13);
    }
}

TEST(Characterize, SkippingVanishingGivesAGeneralKernel) {
    const auto g = circle(8);
    CharacterizeOptions opt;
    opt.check.trials = 20;
    opt.test_vanishing = false;
    const CharacterizationReport r = characterize(KernelFunctional(g, 2, {{{1, 4}, 2.0}}).to_black_box(), g, opt);
    EXPECT_EQ(r.conclusion, Conclusion::GeneralKernel);
    ASSERT_TRUE(r.recovered.has_value());
    EXPECT_EQ(r.recovered->kernel.weight({1, 4}), 2.0);
}

TEST(Valuation, DualMixedVolume) {
    for (const auto& g : {circle(16), sphere(4, 8)}) {
        const int n = g->dim();
        const ValuationReport r = valuation_pipeline(scaled_dmv(g, 1.0), g);
        EXPECT_TRUE(r.pass());
        EXPECT_NEAR(r.lambda, 1.0 / n, 1e-14);
        EXPECT_NEAR(r.c, 1.0, 1e-12);
        EXPECT_LE(r.consistency, 1e-12);
        EXPECT_LE(r.valuation.max_residual, 1e-12);
        EXPECT_LE(r.cone_residual_direct, 1e-12);
        EXPECT_LE(r.cone_residual_ratio, 1e-12);
        EXPECT_EQ(r.cone_trials, 100u);
    }
}

TEST(Valuation, ZeroFunctional) {
    const auto g = circle(16);
    const ValuationReport r = valuation_pipeline(zero(g), g);
    EXPECT_TRUE(r.pass());
    EXPECT_EQ(r.lambda, 0.0);
    EXPECT_EQ(r.c, 0.0);
    for (double d : r.density) EXPECT_EQ(d, 0.0);
}

TEST(Valuation, WeightedByMHoldsTheIdentityButNotProportionality) {
    const auto g = sphere(4, 8);
    const ValuationReport r = valuation_pipeline(gallery("weighted-by-M", {3, g, std::nullopt, 1.0}), g);
    EXPECT_EQ(r.valuation.verdict, Verdict::Pass);
    EXPECT_EQ(r.empty.verdict, Verdict::Pass);
    EXPECT_EQ(r.proportional.verdict, Verdict::Fail);
    EXPECT_FALSE(r.pass());
    for (std::size_t k = 0; k < g->size(); ++k) {
        const auto& cell = g->cell(k);
        EXPECT_NEAR(r.density[k], tilt_integral(cell.box, 3) / cell.weight, 1e-12);
    }
}
