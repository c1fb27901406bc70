#pragma once

#include "dualmv/sphere.hpp"

#include <functional>
#include <memory>
#include <optional>
#include <span>
#include <variant>
#include <vector>

namespace dualmv {

/// One cone alpha * st(A) of a polycone.
struct PolyconeTerm {
    double level;
    SphericalRegion base;
};

/// How overlapping terms combine when building a polycone.
enum class Overlay {
    Max,  ///< union of cones: rho = max of levels covering u
    Sum,  ///< radial sum: rho = sum of levels covering u
    Min,  ///< intersection: rho = min over the inputs (0 where any input is 0)
};

/// Simple radial function sum_j alpha_j 1_{A_j} in canonical form: bases pairwise
/// disjoint and non-empty, levels pairwise distinct and positive, terms sorted by
/// increasing level. The empty polycone is the trivial star set {o}.
class Polycone {
public:
    /// {o}
    static Polycone empty(int dim);

    [[nodiscard]] int dim() const { return dim_; }
    [[nodiscard]] std::span<const PolyconeTerm> terms() const { return terms_; }
    [[nodiscard]] bool is_trivial() const { return terms_.empty(); }
    /// A single cone alpha * st(A).
    [[nodiscard]] bool is_cone() const { return terms_.size() == 1; }
    [[nodiscard]] double max_level() const;

    /// rho_P(u)
    [[nodiscard]] double evaluate(const Direction& u) const;

    /// t P for t > 0 (levels scaled; bases unchanged).
    [[nodiscard]] Polycone scaled(double t) const;
    /// phi P (bases rotated; levels unchanged).
    [[nodiscard]] Polycone rotated(const Rotation& phi) const;

    friend bool operator==(const Polycone&, const Polycone&);

private:
    friend Polycone overlay(int dim, std::span<const std::vector<PolyconeTerm>> groups, Overlay mode);
    Polycone(int dim, std::vector<PolyconeTerm> terms) : dim_(dim), terms_(std::move(terms)) {}

    int dim_;
    std::vector<PolyconeTerm> terms_;
};

/// Combines term groups pointwise. Each group is read as a union of cones (max of
/// its levels covering u); groups are then combined by `mode`.
Polycone overlay(int dim, std::span<const std::vector<PolyconeTerm>> groups, Overlay mode);

/// Canonical polycone from an arbitrary term list. Terms are read as a union of
/// cones (pointwise max). Throws DomainError on a negative or non-finite level;
/// zero levels and empty bases are dropped.
Polycone canonicalize(int dim, std::vector<PolyconeTerm> terms);

/// st(A), the star hull of A: rho = 1_A.
Polycone star_hull(int dim, const SphericalRegion& a);
/// alpha * st(A): rho = alpha 1_A. Throws DomainError unless alpha > 0.
Polycone cone(int dim, double alpha, const SphericalRegion& a);

/// rho = max_j rho_{C_j}; canonical.
Polycone polycone_union(std::span<const Polycone> cs);
/// rho = min_j rho_{C_j}; canonical.
Polycone polycone_intersect(std::span<const Polycone> cs);
/// rho = sum_j rho_{C_j}; canonical.
Polycone polycone_sum(std::span<const Polycone> cs);

/// Per-cell nonnegative values on one grid.
struct GridValues {
    std::shared_ptr<const SphereGrid> grid;
    std::vector<double> values;
};

/// Radial function given by a callable. `bound` certifies boundedness and is
/// checked on every evaluation. The callable must tolerate concurrent calls.
struct Sampler {
    std::function<double(const Direction&)> fn;
    double bound;
    bool continuous;
};

using RadialFunction = std::variant<Polycone, GridValues, Sampler>;

/// Star set in R^n described by its radial function.
class StarSet {
public:
    StarSet(Polycone p);  // NOLINT(google-explicit-constructor): a polycone is a star set
    static StarSet on_grid(std::shared_ptr<const SphereGrid> grid, std::vector<double> values);
    static StarSet sampler(int dim, std::function<double(const Direction&)> fn, double bound, bool continuous);
    /// r * B^n
    static StarSet ball(int dim, double radius = 1.0);
    /// {o}
    static StarSet origin(int dim) { return Polycone::empty(dim); }

    [[nodiscard]] int dim() const { return dim_; }
    [[nodiscard]] const RadialFunction& rho() const { return rho_; }
    [[nodiscard]] const Polycone* polycone() const { return std::get_if<Polycone>(&rho_); }
    [[nodiscard]] const GridValues* grid_values() const { return std::get_if<GridValues>(&rho_); }
    [[nodiscard]] const Sampler* sampler() const { return std::get_if<Sampler>(&rho_); }
    [[nodiscard]] bool is_sampler() const { return sampler() != nullptr; }

    /// Upper bound on rho (exact maximum for polycones and grid data).
    [[nodiscard]] double sup_norm() const;
    /// Continuous radial function (star body).
    [[nodiscard]] bool is_star_body() const;
    /// x in L, i.e. x = o or |x| <= rho_L(x / |x|).
    [[nodiscard]] bool contains_point(const Eigen::VectorXd& x) const;

private:
    StarSet(int dim, RadialFunction rho) : dim_(dim), rho_(std::move(rho)) {}

    int dim_;
    RadialFunction rho_;
};

/// rho_L(u). Throws DimensionError on mismatched dimensions and DomainError when a
/// sampler leaves [0, bound].
double radial_eval(const StarSet& l, const Direction& u);

/// L_1 +~ ... +~ L_m (pointwise sum of radial functions).
/// Polycones combine exactly; grid data combines on its grid (polycones must be
/// grid aligned); a sampler makes the result a sampler. When `grid` is given,
/// every non-sampler input is first converted to values on that grid.
StarSet radial_sum(std::span<const StarSet> ls, const std::shared_ptr<const SphereGrid>& grid = nullptr);

/// Pointwise minimum of radial functions (the star set L_1 cap ... cap L_m).
StarSet radial_min(std::span<const StarSet> ls, const std::shared_ptr<const SphereGrid>& grid = nullptr);

/// t L. Throws DomainError for t < 0.
StarSet scale(double t, const StarSet& l);

/// phi L with rho_{phi L}(u) = rho_L(phi^{-1} u). Grid-backed data needs a grid symmetry.
StarSet rotate_starset(const Rotation& phi, const StarSet& l);

/// Exact per-cell values of rho_L on `grid`. Polycone bases must be unions of
/// cells up to 1e-12 in measure; throws GridMismatch otherwise.
std::vector<double> values_on_grid(const StarSet& l, const std::shared_ptr<const SphereGrid>& grid);

/// Piecewise-constant description shared by polycones and grid data.
struct Piece {
    double level;
    SphericalRegion base;
};
/// Disjoint pieces of a non-sampler star set; throws InvalidParameter for samplers.
std::vector<Piece> pieces_of(const StarSet& l);

}  // namespace dualmv
