#include "dualmv/errors.hpp"
#include "dualmv/numeric.hpp"
#include "dualmv/sphere.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <random>

using namespace dualmv;

namespace {

double gamma_surface(int n) { return 2.0 * std::pow(kPi, n / 2.0) / std::tgamma(n / 2.0); }

double cap_monte_carlo(const Cap& c, int n, std::size_t samples, std::uint64_t seed, double& stderr_out) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> g;
    std::size_t hits = 0;
    const double cosr = std::cos(c.radius);
    for (std::size_t i = 0; i < samples; ++i) {
        Eigen::VectorXd v(n);
        for (int k = 0; k < n; ++k) v[k] = g(rng);
        v.normalize();
        if (v.dot(c.center.coords()) >= cosr) ++hits;
    }
    const double p = static_cast<double>(hits) / samples;
    stderr_out = gamma_surface(n) * std::sqrt(p * (1 - p) / samples);
    return gamma_surface(n) * p;
}

}  // namespace

TEST(SurfaceMeasure, MatchesGammaFormula) {
    for (int n = 2; n <= 9; ++n) EXPECT_NEAR(surface_measure(n), gamma_surface(n), 1e-13 * gamma_surface(n)) << n;
    EXPECT_NEAR(surface_measure(4), 2 * kPi * kPi, 1e-13);
}

TEST(SurfaceMeasure, RejectsSmallDimensions) {
    EXPECT_THROW(surface_measure(1), DomainError);
    EXPECT_THROW(surface_measure(0), DomainError);
}

TEST(Direction, ValidatesUnitNorm) {
    EXPECT_THROW(Direction(Eigen::Vector2d(1.0, 1.0)), DomainError);
    EXPECT_THROW(Direction::normalized(Eigen::Vector3d::Zero()), DomainError);
    const Direction d = Direction::normalized(Eigen::Vector3d(0, 3, 4));
    EXPECT_NEAR(d.coords().norm(), 1.0, 1e-15);
}

TEST(Direction, AnglesRoundTrip) {
    for (double a : {0.0, 0.5, kPi, 4.0, kTwoPi - 1e-9}) EXPECT_NEAR(Direction::from_angle(a).azimuth(), a, 1e-12);
    const Direction d = Direction::from_spherical(1.1, 5.0);
    EXPECT_NEAR(d.polar(), 1.1, 1e-12);
    EXPECT_NEAR(d.azimuth(), 5.0, 1e-12);
    EXPECT_GE(Direction::from_angle(-0.1).azimuth(), 0.0);
}

TEST(Rotation, RandomIsProper) {
    std::mt19937_64 rng(3);
    for (int n = 2; n <= 5; ++n) {
        const Rotation r = Rotation::random(n, rng);
        EXPECT_NEAR((r.matrix().transpose() * r.matrix() - Eigen::MatrixXd::Identity(n, n)).norm(), 0.0, 1e-12);
        EXPECT_NEAR(r.matrix().determinant(), 1.0, 1e-12);
        EXPECT_TRUE(r.then(r.inverse()).approx_equal(Rotation::identity(n)));
    }
}

TEST(Rotation, RejectsReflections) {
    Eigen::MatrixXd m = Eigen::MatrixXd::Identity(2, 2);
    m(1, 1) = -1;
    EXPECT_THROW(Rotation{m}, DomainError);
    EXPECT_THROW(Rotation{2 * Eigen::MatrixXd::Identity(3, 3)}, DomainError);
}

TEST(RegionMeasure, ClosedForms) {
    EXPECT_DOUBLE_EQ(region_measure(SphericalRegion::arc(0.5, 2.0), 2), 1.5);
    EXPECT_NEAR(region_measure(SphericalRegion::cap(Direction::from_angle(1.0), 0.3), 2), 0.6, 1e-15);
    EXPECT_NEAR(region_measure(SphericalRegion::cap(Direction::from_spherical(0.2, 0.1), kPi / 3), 3), kPi, 1e-14);
    EXPECT_NEAR(region_measure(SphericalRegion::full(), 3), 4 * kPi, 1e-14);
    EXPECT_THROW(region_measure(SphericalRegion::arc(0, 1), 3), DimensionError);
    EXPECT_THROW(SphericalRegion::arc(2.0, 1.0), DomainError);
    EXPECT_THROW(SphericalRegion::cap(Direction::from_angle(0), 0.0), DomainError);
}

TEST(RegionMeasure, CapAgreesWithMonteCarlo) {
    for (int n : {3, 4, 5}) {
        Eigen::VectorXd c = Eigen::VectorXd::Zero(n);
        c[0] = 1.0;
        const Cap cap{Direction(c), 1.0};
        double se = 0.0;
        const double est = cap_monte_carlo(cap, n, 1'000'000, 11 + n, se);
        EXPECT_NEAR(region_measure(cap, n), est, 3 * se) << n;
    }
}

TEST(Grid, SpecParsingRoundTrips) {
    EXPECT_EQ(GridSpec::parse("dim=2,m=64"), GridSpec::circle(64));
    EXPECT_EQ(GridSpec::parse("dim=3,bands=4,sectors=8"), GridSpec::sphere(4, 8));
    EXPECT_EQ(GridSpec::parse(GridSpec::sphere(5, 7).id()), GridSpec::sphere(5, 7));
    EXPECT_THROW(GridSpec::parse("dim=2"), InvalidParameter);
    EXPECT_THROW(GridSpec::parse("m=3,dim=x"), InvalidParameter);
}

TEST(Grid, HigherDimensionsUnsupported) {
    EXPECT_THROW(make_grid(GridSpec{4, 2, 2}), UnsupportedExactGrid);
    EXPECT_THROW(make_grid(GridSpec::circle(0)), InvalidParameter);
}

TEST(Grid, WeightsPartitionTheSphere) {
    for (const auto& spec : {GridSpec::circle(1), GridSpec::circle(64), GridSpec::sphere(1, 1), GridSpec::sphere(4, 8),
                             GridSpec::sphere(9, 5)}) {
        const auto g = make_grid(spec);
        EXPECT_NEAR(g->total_weight(), surface_measure(g->dim()), 1e-13) << spec.id();
        for (std::size_t k = 0; k < g->size(); ++k) {
            EXPECT_GT(g->cell(k).weight, 0.0);
            EXPECT_EQ(g->locate(g->cell(k).representative), k);
        }
    }
}

TEST(Grid, LocateMatchesCellBoxes) {
    const auto g = make_grid(GridSpec::sphere(4, 8));
    std::mt19937_64 rng(5);
    for (int i = 0; i < 10'000; ++i) {
        const Direction u = Direction::random(3, rng);
        const CellBox& b = g->cell(g->locate(u)).box;
        EXPECT_GE(u.polar(), b.theta_lo - 1e-12);
        EXPECT_LE(u.polar(), b.theta_hi + 1e-12);
        EXPECT_GE(u.azimuth(), b.phi_lo - 1e-12);
        EXPECT_LE(u.azimuth(), b.phi_hi + 1e-12);
    }
}

TEST(Grid, CellWeightsMatchPolarBandFormula) {
    const auto g = make_grid(GridSpec::sphere(3, 4));
    for (const auto& c : g->cells()) {
        const double w = (c.box.phi_hi - c.box.phi_lo) * (std::cos(c.box.theta_lo) - std::cos(c.box.theta_hi));
        EXPECT_NEAR(c.weight, w, 1e-14);
    }
}

TEST(Symmetry, PermutationsFollowTheRotation) {
    for (const auto& spec : {GridSpec::circle(12), GridSpec::sphere(3, 6)}) {
        const auto g = make_grid(spec);
        const auto syms = grid_symmetries(*g);
        ASSERT_EQ(syms.size(), g->sectors());
        EXPECT_TRUE(syms.front().rotation.approx_equal(Rotation::identity(g->dim())));
        for (const auto& s : syms) {
            for (std::size_t k = 0; k < g->size(); ++k) {
                const Direction image = rotate_direction(s.rotation, g->cell(k).representative);
                EXPECT_EQ(g->locate(image), s.permutation[k]);
            }
            const auto found = find_symmetry(*g, s.rotation);
            ASSERT_TRUE(found.has_value());
            EXPECT_EQ(found->permutation, s.permutation);
        }
        EXPECT_FALSE(find_symmetry(*g, g->dim() == 2 ? Rotation::planar(0.1)
                                                     : Rotation::about_axis(Eigen::Vector3d::UnitX(), 0.5))
                         .has_value());
    }
}

TEST(Rasterize, ErrorBoundIsSound) {
    const auto g2 = make_grid(GridSpec::circle(32));
    const auto g3 = make_grid(GridSpec::sphere(6, 12));
    std::mt19937_64 rng(17);
    std::uniform_real_distribution<double> radius(0.05, 3.0);
    for (int i = 0; i < 50; ++i) {
        for (const auto& g : {g2, g3}) {
            const SphericalRegion cap = SphericalRegion::cap(Direction::random(g->dim(), rng), radius(rng));
            const Rasterization r = rasterize(cap, g);
            EXPECT_LE(std::abs(region_measure(r.cells, g->dim()) - region_measure(cap, g->dim())),
                      r.error_bound + 1e-12);
        }
    }
}

TEST(Rasterize, AlignedRegionsAreExact) {
    const auto g = make_grid(GridSpec::circle(8));
    const Rasterization r = rasterize(SphericalRegion::arc(kPi / 2, kPi), g);
    EXPECT_LE(r.error_bound, 1e-12);
    EXPECT_NEAR(region_measure(r.cells, 2), kPi / 2, 1e-14);
    const Rasterization c = rasterize(SphericalRegion::cells(g, {1, 3}), g);
    EXPECT_EQ(c.error_bound, 0.0);
}

TEST(RotateRegion, ArcWrapsAroundZero) {
    const SphericalRegion a = SphericalRegion::arc(5.5, 6.0);
    const Rotation phi = Rotation::planar(1.0);
    const SphericalRegion r = rotate_region(phi, a);
    EXPECT_NEAR(region_measure(r, 2), 0.5, 1e-14);
    std::mt19937_64 rng(2);
    for (int i = 0; i < 2000; ++i) {
        const Direction u = Direction::random(2, rng);
        EXPECT_EQ(a.contains(u), r.contains(rotate_direction(phi, u)));
    }
}

TEST(RotateRegion, CellsNeedAGridSymmetry) {
    const auto g = make_grid(GridSpec::circle(8));
    const SphericalRegion cells = SphericalRegion::cells(g, {0, 5});
    const SphericalRegion r = rotate_region(Rotation::planar(kPi / 4), cells);
    EXPECT_EQ(r.get_if<CellSet>()->indices, (std::vector<std::size_t>{1, 6}));
    EXPECT_THROW(rotate_region(Rotation::planar(0.3), cells), UnsupportedRotation);
}

TEST(Rasterize, CapDifferenceBoundIsSound) {
    const auto g = make_grid(GridSpec::sphere(8, 16));
    std::mt19937_64 rng(23);
    for (int i = 0; i < 30; ++i) {
        const Direction c = Direction::random(3, rng);
        const Cap outer{c, 1.5};
        const Cap hole{c, 0.6};
        const SphericalRegion ring(CapDifference{outer, {hole}});
        const SphericalRegion rest(CapDifference{std::nullopt, {outer}});
        for (const auto& r : {ring, rest}) {
            const Rasterization x = rasterize(r, g);
            EXPECT_LE(std::abs(region_measure(x.cells, 3) - region_measure(r, 3)), x.error_bound + 1e-12);
        }
        const Rotation phi = Rotation::random(3, rng);
        const SphericalRegion turned = rotate_region(phi, ring);
        for (int k = 0; k < 200; ++k) {
            const Direction u = Direction::random(3, rng);
            EXPECT_EQ(ring.contains(u), turned.contains(rotate_direction(phi, u)));
        }
    }
}
