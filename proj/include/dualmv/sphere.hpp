#pragma once

#include <Eigen/Dense>

#include <cstddef>
#include <memory>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <variant>
#include <vector>

namespace dualmv {

/// H^{n-1} measure of the unit sphere S^{n-1} in R^n, i.e. 2 pi^{n/2} / Gamma(n/2).
/// Throws DomainError for dim < 2.
double surface_measure(int dim);

/// A point of S^{n-1}. Construction checks the unit norm to 1e-12.
class Direction {
public:
    explicit Direction(Eigen::VectorXd coords);

    /// Normalizes `v`; throws DomainError on the zero vector.
    static Direction normalized(const Eigen::VectorXd& v);
    /// Point (cos t, sin t) of S^1.
    static Direction from_angle(double angle);
    /// Point of S^2 with polar angle `polar` from +z and azimuth `azimuth`.
    static Direction from_spherical(double polar, double azimuth);
    /// Uniformly distributed direction (normalized standard normal vector).
    static Direction random(int dim, std::mt19937_64& rng);

    [[nodiscard]] int dim() const { return static_cast<int>(coords_.size()); }
    [[nodiscard]] const Eigen::VectorXd& coords() const { return coords_; }
    [[nodiscard]] double operator[](int i) const { return coords_[i]; }
    [[nodiscard]] double dot(const Direction& other) const { return coords_.dot(other.coords_); }

    /// Azimuth atan2(x_2, x_1) mapped to [0, 2 pi).
    [[nodiscard]] double azimuth() const;
    /// Angle from the last coordinate axis, in [0, pi] (n = 3: polar angle).
    [[nodiscard]] double polar() const;

private:
    Eigen::VectorXd coords_;
};

/// Proper rotation of R^n (orthogonal, determinant +1 to 1e-12).
class Rotation {
public:
    explicit Rotation(Eigen::MatrixXd matrix);

    static Rotation identity(int dim);
    /// Counter-clockwise rotation of the plane by `angle`.
    static Rotation planar(double angle);
    /// Rotation of R^3 about `axis` by `angle` (right-hand rule).
    static Rotation about_axis(const Eigen::Vector3d& axis, double angle);
    /// Haar-distributed random rotation.
    static Rotation random(int dim, std::mt19937_64& rng);

    [[nodiscard]] int dim() const { return static_cast<int>(matrix_.rows()); }
    [[nodiscard]] const Eigen::MatrixXd& matrix() const { return matrix_; }
    [[nodiscard]] Rotation inverse() const;
    [[nodiscard]] Rotation then(const Rotation& next) const;
    [[nodiscard]] bool approx_equal(const Rotation& other, double tol = 1e-9) const;

private:
    Eigen::MatrixXd matrix_;
};

/// phi(u).
Direction rotate_direction(const Rotation& phi, const Direction& u);

class SphereGrid;
class SphericalRegion;

struct FullSphere {};

/// Half-open arc [start, end) of S^1, 0 <= start < end <= 2 pi.
struct Arc {
    double start = 0.0;
    double end = 0.0;
};

/// Closed geodesic ball {u : angle(u, center) <= radius}, radius in (0, pi].
struct Cap {
    Direction center;
    double radius;
};

/// Union of cells of one grid. Indices are sorted and unique.
struct CellSet {
    std::shared_ptr<const SphereGrid> grid;
    std::vector<std::size_t> indices;
};

/// `outer` (the whole sphere when empty) with pairwise disjoint caps removed.
/// Every hole lies inside `outer`.
struct CapDifference {
    std::optional<Cap> outer;
    std::vector<Cap> holes;
};

/// Union of pairwise disjoint regions.
struct RegionUnion {
    std::vector<SphericalRegion> parts;
};

/// Measurable subset of S^{n-1} with a finite description.
class SphericalRegion {
public:
    using Variant = std::variant<FullSphere, Arc, Cap, CellSet, CapDifference, RegionUnion>;

    SphericalRegion(FullSphere f) : v_(f) {}
    SphericalRegion(Arc a);
    SphericalRegion(Cap c);
    SphericalRegion(CellSet c);
    SphericalRegion(CapDifference d);
    SphericalRegion(RegionUnion u);

    static SphericalRegion full() { return FullSphere{}; }
    static SphericalRegion arc(double start, double end) { return Arc{start, end}; }
    static SphericalRegion cap(Direction center, double radius) { return Cap{std::move(center), radius}; }
    static SphericalRegion cells(std::shared_ptr<const SphereGrid> grid, std::vector<std::size_t> indices);
    static SphericalRegion empty_cells(std::shared_ptr<const SphereGrid> grid) { return cells(std::move(grid), {}); }

    [[nodiscard]] const Variant& variant() const { return v_; }
    template <class T>
    [[nodiscard]] const T* get_if() const { return std::get_if<T>(&v_); }
    template <class T>
    [[nodiscard]] bool is() const { return std::holds_alternative<T>(v_); }

    /// Dimension implied by the region itself (Arc: 2, Cap: center, CellSet: grid);
    /// nullopt for FullSphere and empty unions.
    [[nodiscard]] std::optional<int> implied_dim() const;

    [[nodiscard]] bool contains(const Direction& u) const;

    /// True when the region is known to be empty (empty CellSet or union).
    [[nodiscard]] bool is_empty() const;

    friend bool operator==(const SphericalRegion& a, const SphericalRegion& b);

private:
    Variant v_;
};

/// H^{n-1} measure of `r` as a subset of S^{dim-1}.
/// Throws DimensionError when the region cannot live in that dimension.
double region_measure(const SphericalRegion& r, int dim);

/// Parameters of an exact grid: dim = 2 with `sectors` equal arcs, or dim = 3 with
/// `bands` equal polar-angle bands times `sectors` equal longitude sectors.
struct GridSpec {
    int dim = 2;
    std::size_t bands = 1;
    std::size_t sectors = 0;

    static GridSpec circle(std::size_t m) { return GridSpec{2, 1, m}; }
    static GridSpec sphere(std::size_t bands, std::size_t sectors) { return GridSpec{3, bands, sectors}; }

    /// Parses "dim=2,m=64" or "dim=3,bands=4,sectors=8".
    static GridSpec parse(const std::string& text);
    /// Canonical id, the inverse of parse().
    [[nodiscard]] std::string id() const;

    friend bool operator==(const GridSpec&, const GridSpec&) = default;
};

/// Angular box of a grid cell: polar angle in [theta_lo, theta_hi) (n = 3 only)
/// and azimuth in [phi_lo, phi_hi).
struct CellBox {
    double theta_lo = 0.0;
    double theta_hi = 0.0;
    double phi_lo = 0.0;
    double phi_hi = 0.0;
};

struct GridCell {
    CellBox box;
    Direction representative;
    double weight;
};

/// Finite partition of S^{n-1} into cells with closed-form measures.
class SphereGrid {
public:
    [[nodiscard]] int dim() const { return spec_.dim; }
    [[nodiscard]] const GridSpec& spec() const { return spec_; }
    [[nodiscard]] std::string id() const { return spec_.id(); }
    [[nodiscard]] std::size_t size() const { return cells_.size(); }
    [[nodiscard]] const GridCell& cell(std::size_t k) const { return cells_.at(k); }
    [[nodiscard]] std::span<const GridCell> cells() const { return cells_; }
    [[nodiscard]] std::size_t bands() const { return spec_.bands; }
    [[nodiscard]] std::size_t sectors() const { return spec_.sectors; }

    /// Index of the cell containing `u`.
    [[nodiscard]] std::size_t locate(const Direction& u) const;
    /// Sum of cell weights (compensated).
    [[nodiscard]] double total_weight() const;

    friend std::shared_ptr<const SphereGrid> make_grid(const GridSpec& spec);

private:
    explicit SphereGrid(GridSpec spec) : spec_(spec) {}

    GridSpec spec_;
    std::vector<GridCell> cells_;
};

/// Builds an exact grid. Throws UnsupportedExactGrid for dim >= 4 and
/// InvalidParameter for zero counts.
std::shared_ptr<const SphereGrid> make_grid(const GridSpec& spec);

bool same_grid(const SphereGrid& a, const SphereGrid& b);

/// Cells selected by representative membership together with a sound bound on
/// |measure(r) - measure(cells)|.
struct Rasterization {
    SphericalRegion cells;
    double error_bound;
};

Rasterization rasterize(const SphericalRegion& r, const std::shared_ptr<const SphereGrid>& g);

/// A rotation that permutes grid cells, with permutation[k] = index of phi(cell k).
struct GridSymmetry {
    Rotation rotation;
    std::vector<std::size_t> permutation;
};

/// Rotations that map the grid onto itself cell by cell: multiples of 2 pi / m for
/// n = 2, longitude rotations by multiples of the sector angle for n = 3.
/// The identity comes first.
std::vector<GridSymmetry> grid_symmetries(const SphereGrid& g);

/// The grid symmetry equal to `phi`, if any.
std::optional<GridSymmetry> find_symmetry(const SphereGrid& g, const Rotation& phi);

/// phi(r). CellSet data needs a grid symmetry (UnsupportedRotation otherwise).
SphericalRegion rotate_region(const Rotation& phi, const SphericalRegion& r);

}  // namespace dualmv
