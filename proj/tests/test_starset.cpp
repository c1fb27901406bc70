#include "dualmv/errors.hpp"
#include "dualmv/numeric.hpp"
#include "dualmv/refinement.hpp"
#include "dualmv/starset.hpp"

#include <gtest/gtest.h>

#include <random>

using namespace dualmv;

namespace {

Polycone random_arc_polycone(std::mt19937_64& rng) {
    std::uniform_real_distribution<double> angle(0.0, kTwoPi);
    std::uniform_real_distribution<double> level(0.25, 4.0);
    std::vector<PolyconeTerm> terms;
    const int count = std::uniform_int_distribution<int>(1, 4)(rng);
    for (int i = 0; i < count; ++i) {
        double a = angle(rng), b = angle(rng);
        if (a > b) std::swap(a, b);
        terms.push_back(PolyconeTerm{level(rng), SphericalRegion::arc(a, b)});
    }
    return canonicalize(2, terms);
}

void expect_canonical(const Polycone& p) {
    const auto terms = p.terms();
    for (std::size_t i = 0; i < terms.size(); ++i) {
        EXPECT_GT(terms[i].level, 0.0);
        EXPECT_GT(region_measure(terms[i].base, p.dim()), 0.0);
        if (i > 0) {
            EXPECT_LT(terms[i - 1].level, terms[i].level);
        }
        for (std::size_t j = i + 1; j < terms.size(); ++j) {
            const SphericalRegion pair[] = {terms[i].base, terms[j].base};
            EXPECT_EQ(intersection_measure(p.dim(), pair), 0.0);
        }
    }
}

}  // namespace

TEST(Polycone, CanonicalFormInvariants) {
    std::mt19937_64 rng(4);
    for (int i = 0; i < 100; ++i) expect_canonical(random_arc_polycone(rng));
}

TEST(Polycone, DuplicateConesMerge) {
    const SphericalRegion a = SphericalRegion::arc(0.0, 1.0);
    const Polycone p = canonicalize(2, {{2.0, a}, {2.0, a}});
    ASSERT_EQ(p.terms().size(), 1u);
    EXPECT_EQ(p.terms()[0].level, 2.0);
}

TEST(Polycone, LevelValidation) {
    const SphericalRegion a = SphericalRegion::arc(0.0, 1.0);
    EXPECT_THROW(canonicalize(2, {{-1.0, a}}), DomainError);
    EXPECT_TRUE(canonicalize(2, {{0.0, a}}).is_trivial());
    EXPECT_THROW(cone(2, 0.0, a), DomainError);
}

TEST(Polycone, CombinationsArePointwise) {
    std::mt19937_64 rng(5);
    for (int trial = 0; trial < 10; ++trial) {
        const Polycone ps[] = {random_arc_polycone(rng), random_arc_polycone(rng), random_arc_polycone(rng)};
        const Polycone uni = polycone_union(ps);
        const Polycone sum = polycone_sum(ps);
        const Polycone meet = polycone_intersect(ps);
        for (const auto* p : {&uni, &sum, &meet}) expect_canonical(*p);
        for (int k = 0; k < 10'000 / 10; ++k) {
            const Direction u = Direction::random(2, rng);
            const double a = ps[0].evaluate(u), b = ps[1].evaluate(u), c = ps[2].evaluate(u);
            EXPECT_DOUBLE_EQ(uni.evaluate(u), std::max({a, b, c}));
            EXPECT_NEAR(sum.evaluate(u), a + b + c, 1e-14);
            EXPECT_DOUBLE_EQ(meet.evaluate(u), std::min({a, b, c}));
        }
    }
}

TEST(Polycone, CapsOnTheSphere) {
    const Direction north = Direction::from_spherical(0.0, 0.0);
    const Polycone big = cone(3, 1.0, SphericalRegion::cap(north, 1.2));
    const Polycone small = cone(3, 2.0, SphericalRegion::cap(north, 0.5));
    const Polycone both[] = {big, small};
    const Polycone s = polycone_sum(both);
    ASSERT_EQ(s.terms().size(), 2u);
    EXPECT_EQ(s.terms()[1].level, 3.0);
    EXPECT_EQ(s.evaluate(Direction::from_spherical(0.3, 1.0)), 3.0);
    EXPECT_EQ(s.evaluate(Direction::from_spherical(1.0, 1.0)), 1.0);
    EXPECT_EQ(s.evaluate(Direction::from_spherical(2.0, 1.0)), 0.0);
}

TEST(StarSet, ScaleAndRotate) {
    std::mt19937_64 rng(6);
    const Polycone p = random_arc_polycone(rng);
    const StarSet l(p);
    const StarSet s = scale(2.5, l);
    const Rotation phi = Rotation::planar(0.9);
    const StarSet r = rotate_starset(phi, l);
    for (int k = 0; k < 1000; ++k) {
        const Direction u = Direction::random(2, rng);
        EXPECT_DOUBLE_EQ(radial_eval(s, u), 2.5 * radial_eval(l, u));
        EXPECT_DOUBLE_EQ(radial_eval(r, rotate_direction(phi, u)), radial_eval(l, u));
    }
    EXPECT_TRUE(scale(0.0, l).polycone()->is_trivial());
    EXPECT_THROW(scale(-1.0, l), DomainError);
}

TEST(StarSet, GridValuesAndAlignment) {
    const auto g = make_grid(GridSpec::circle(8));
    const StarSet aligned = cone(2, 2.0, SphericalRegion::arc(0.0, kPi / 2));
    const auto v = values_on_grid(aligned, g);
    EXPECT_EQ(v, (std::vector<double>{2, 2, 0, 0, 0, 0, 0, 0}));
    const StarSet off = cone(2, 2.0, SphericalRegion::arc(0.0, 1.0));
    EXPECT_THROW(values_on_grid(off, g), GridMismatch);
    const auto other = make_grid(GridSpec::circle(6));
    EXPECT_THROW(values_on_grid(StarSet::on_grid(other, std::vector<double>(6, 1.0)), g), GridMismatch);
}

TEST(StarSet, GridRotationPermutesCells) {
    const auto g = make_grid(GridSpec::circle(4));
    const StarSet l = StarSet::on_grid(g, {1, 2, 3, 4});
    const StarSet r = rotate_starset(Rotation::planar(kPi / 2), l);
    EXPECT_EQ(r.grid_values()->values, (std::vector<double>{4, 1, 2, 3}));
    EXPECT_THROW(rotate_starset(Rotation::planar(0.2), l), UnsupportedRotation);
}

TEST(StarSet, RadialSumOnGrid) {
    const auto g = make_grid(GridSpec::circle(4));
    const StarSet a = StarSet::on_grid(g, {1, 0, 2, 0});
    const StarSet b = cone(2, 1.0, SphericalRegion::arc(kPi / 2, kTwoPi));
    const StarSet both[] = {a, b};
    EXPECT_EQ(radial_sum(both).grid_values()->values, (std::vector<double>{1, 1, 3, 1}));
    EXPECT_EQ(radial_min(both).grid_values()->values, (std::vector<double>{0, 0, 1, 0}));
}

TEST(StarSet, SamplerBoundsAreChecked) {
    const StarSet s = StarSet::sampler(2, [](const Direction& u) { return 2.0 + u[0]; }, 2.5, true);
    EXPECT_THROW(radial_eval(s, Direction::from_angle(0.0)), DomainError);
    EXPECT_NEAR(radial_eval(s, Direction::from_angle(kPi)), 1.0, 1e-15);
    EXPECT_THROW(values_on_grid(s, make_grid(GridSpec::circle(4))), GridMismatch);
    EXPECT_THROW(pieces_of(s), InvalidParameter);
}

TEST(StarSet, PointMembership) {
    const StarSet l = cone(2, 2.0, SphericalRegion::arc(0.0, kPi));
    EXPECT_TRUE(l.contains_point(Eigen::Vector2d(0.0, 1.9)));
    EXPECT_FALSE(l.contains_point(Eigen::Vector2d(0.0, 2.1)));
    EXPECT_FALSE(l.contains_point(Eigen::Vector2d(0.0, -0.1)));
    EXPECT_TRUE(l.contains_point(Eigen::Vector2d::Zero()));
}

TEST(StarSet, StarBodies) {
    EXPECT_TRUE(StarSet::ball(3, 2.0).is_star_body());
    EXPECT_TRUE(StarSet::origin(3).is_star_body());
    EXPECT_FALSE(StarSet(cone(2, 1.0, SphericalRegion::arc(0, 1))).is_star_body());
}
