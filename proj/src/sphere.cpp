#include "dualmv/sphere.hpp"

#include "dualmv/errors.hpp"
#include "dualmv/numeric.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <map>
#include <sstream>

namespace dualmv {

namespace {

constexpr double kUnitTol = 1e-12;

double wrap_angle(double a) {
    double w = std::fmod(a, kTwoPi);
    if (w < 0.0) w += kTwoPi;
    if (w >= kTwoPi) w = 0.0;
    return w;
}

// Integral of sin^k over [0, theta] by the standard reduction formula.
double sin_power_integral(int k, double theta) {
    if (k == 0) return theta;
    if (k == 1) return 1.0 - std::cos(theta);
    const double s = std::sin(theta);
    return -std::pow(s, k - 1) * std::cos(theta) / k +
           (static_cast<double>(k - 1) / k) * sin_power_integral(k - 2, theta);
}

double cap_measure(int dim, double radius) {
    if (dim == 2) return 2.0 * radius;
    if (dim == 3) return kTwoPi * (1.0 - std::cos(radius));
    return surface_measure(dim - 1) * sin_power_integral(dim - 2, radius);
}

// Range of cos(phi - center) for phi in [lo, hi].
std::pair<double, double> cosine_range(double lo, double hi, double center) {
    double a = std::cos(lo - center);
    double b = std::cos(hi - center);
    double mn = std::min(a, b);
    double mx = std::max(a, b);
    auto hits = [&](double target) {
        double k = std::ceil((lo - target) / kTwoPi);
        return target + k * kTwoPi <= hi;
    };
    if (hits(center)) mx = 1.0;
    if (hits(center + kPi)) mn = -1.0;
    return {mn, mx};
}

// Range of a*cos(t) + b*sin(t) for t in [lo, hi] subset of [0, pi].
std::pair<double, double> sinusoid_range(double a, double b, double lo, double hi) {
    const double r = std::hypot(a, b);
    const double psi = std::atan2(b, a);
    double fa = a * std::cos(lo) + b * std::sin(lo);
    double fb = a * std::cos(hi) + b * std::sin(hi);
    double mn = std::min(fa, fb);
    double mx = std::max(fa, fb);
    auto inside = [&](double t) {
        for (int k = -1; k <= 1; ++k) {
            double s = t + k * kTwoPi;
            if (s >= lo && s <= hi) return true;
        }
        return false;
    };
    if (inside(psi)) mx = r;
    if (inside(psi + kPi)) mn = -r;
    return {mn, mx};
}

// Range of <u, c> over the cell box.
std::pair<double, double> dot_range(const Direction& c, const CellBox& box, int dim) {
    if (dim == 2) return cosine_range(box.phi_lo, box.phi_hi, c.azimuth());
    const double rho = std::hypot(c[0], c[1]);
    const double phi_c = std::atan2(c[1], c[0]);
    auto [gmin, gmax] = cosine_range(box.phi_lo, box.phi_hi, phi_c);
    const double lo = sinusoid_range(c[2], rho * gmin, box.theta_lo, box.theta_hi).first;
    const double hi = sinusoid_range(c[2], rho * gmax, box.theta_lo, box.theta_hi).second;
    return {lo, hi};
}

double box_overlap(const CellBox& a, const CellBox& b, int dim) {
    const double p0 = std::max(a.phi_lo, b.phi_lo);
    const double p1 = std::min(a.phi_hi, b.phi_hi);
    if (p1 <= p0) return 0.0;
    if (dim == 2) return p1 - p0;
    const double t0 = std::max(a.theta_lo, b.theta_lo);
    const double t1 = std::min(a.theta_hi, b.theta_hi);
    if (t1 <= t0) return 0.0;
    return (p1 - p0) * (std::cos(t0) - std::cos(t1));
}

enum class Cover { Outside, Inside, Partial };

// Classification of one grid cell against a region, with the exact overlap
// measure when it is cheap to obtain.
struct CellCover {
    Cover cover;
    std::optional<double> overlap;
};

CellCover classify(const SphericalRegion& r, const SphereGrid& g, std::size_t k);

CellCover classify_interval(double s, double e, const GridCell& cell) {
    const double lo = std::max(s, cell.box.phi_lo);
    const double hi = std::min(e, cell.box.phi_hi);
    const double ov = std::max(0.0, hi - lo);
    if (ov <= 0.0) return {Cover::Outside, 0.0};
    if (s <= cell.box.phi_lo && e >= cell.box.phi_hi) return {Cover::Inside, cell.weight};
    return {Cover::Partial, ov};
}

CellCover classify(const SphericalRegion& r, const SphereGrid& g, std::size_t k) {
    const GridCell& cell = g.cell(k);
    const int dim = g.dim();
    if (r.is<FullSphere>()) return {Cover::Inside, cell.weight};
    if (const auto* a = r.get_if<Arc>()) return classify_interval(a->start, a->end, cell);
    if (const auto* c = r.get_if<Cap>()) {
        const double cr = std::cos(c->radius);
        if (c->radius >= kPi) return {Cover::Inside, cell.weight};
        auto [lo, hi] = dot_range(c->center, cell.box, dim);
        constexpr double slack = 1e-14;
        if (lo >= cr + slack) return {Cover::Inside, cell.weight};
        if (hi < cr - slack) return {Cover::Outside, 0.0};
        if (dim == 2) {
            // Cap on the circle is an arc; measure the overlap exactly.
            const double center = c->center.azimuth();
            const double s = center - c->radius;
            double ov = 0.0;
            for (int shift = -1; shift <= 1; ++shift) {
                const double a0 = s + shift * kTwoPi;
                const double a1 = a0 + 2.0 * c->radius;
                ov += std::max(0.0, std::min(a1, cell.box.phi_hi) - std::max(a0, cell.box.phi_lo));
            }
            return {Cover::Partial, ov};
        }
        return {Cover::Partial, std::nullopt};
    }
    if (const auto* cs = r.get_if<CellSet>()) {
        if (same_grid(*cs->grid, g)) {
            bool in = std::binary_search(cs->indices.begin(), cs->indices.end(), k);
            return in ? CellCover{Cover::Inside, cell.weight} : CellCover{Cover::Outside, 0.0};
        }
        CompensatedSum ov;
        for (std::size_t j : cs->indices) ov += box_overlap(cell.box, cs->grid->cell(j).box, dim);
        const double v = ov.value();
        if (v <= 0.0) return {Cover::Outside, 0.0};
        if (std::abs(v - cell.weight) <= 1e-14 * cell.weight) return {Cover::Inside, cell.weight};
        return {Cover::Partial, v};
    }
    if (const auto* d = r.get_if<CapDifference>()) {
        const CellCover outer = d->outer ? classify(*d->outer, g, k) : CellCover{Cover::Inside, cell.weight};
        if (outer.cover == Cover::Outside) return outer;
        bool all_out = true;
        bool exact = outer.overlap.has_value();
        double removed = 0.0;
        for (const auto& h : d->holes) {
            const CellCover hc = classify(h, g, k);
            if (hc.cover == Cover::Inside) return {Cover::Outside, 0.0};
            if (hc.cover != Cover::Outside) all_out = false;
            if (hc.overlap) {
                removed += *hc.overlap;
            } else {
                exact = false;
            }
        }
        if (all_out) return outer;
        if (exact) return {Cover::Partial, std::max(0.0, *outer.overlap - removed)};
        return {Cover::Partial, std::nullopt};
    }
    const auto& u = std::get<RegionUnion>(r.variant());
    bool all_out = true;
    std::optional<double> total = 0.0;
    for (const auto& part : u.parts) {
        CellCover pc = classify(part, g, k);
        if (pc.cover == Cover::Inside) return {Cover::Inside, cell.weight};
        if (pc.cover != Cover::Outside) all_out = false;
        if (total && pc.overlap) {
            *total += *pc.overlap;
        } else {
            total.reset();
        }
    }
    if (all_out) return {Cover::Outside, 0.0};
    return {Cover::Partial, total};
}

std::size_t parse_count(const std::string& value, const std::string& key) {
    std::size_t out = 0;
    auto res = std::from_chars(value.data(), value.data() + value.size(), out);
    if (res.ec != std::errc{} || res.ptr != value.data() + value.size()) {
        throw InvalidParameter("grid spec: '" + key + "' must be a nonnegative integer, got '" + value + "'");
    }
    return out;
}

}  // namespace

double surface_measure(int dim) {
    if (dim < 2) throw DomainError("surface_measure: dim must be >= 2, got " + std::to_string(dim));
    // sigma_{n} = 2 pi / (n - 2) * sigma_{n-2}
    double s = (dim % 2 == 0) ? kTwoPi : 2.0 * kTwoPi;
    for (int d = (dim % 2 == 0) ? 4 : 5; d <= dim; d += 2) s *= kTwoPi / (d - 2);
    return s;
}

// ---------------------------------------------------------------- Direction

Direction::Direction(Eigen::VectorXd coords) : coords_(std::move(coords)) {
    if (coords_.size() < 2) throw DomainError("Direction: dimension must be >= 2");
    const double norm = coords_.norm();
    if (!std::isfinite(norm) || std::abs(norm - 1.0) > kUnitTol) {
        throw DomainError("Direction: coordinates are not a unit vector (norm " + std::to_string(norm) + ")");
    }
}

Direction Direction::normalized(const Eigen::VectorXd& v) {
    const double norm = v.norm();
    if (!(norm > 0.0) || !std::isfinite(norm)) throw DomainError("Direction: cannot normalize a zero vector");
    return Direction(v / norm);
}

Direction Direction::from_angle(double angle) {
    Eigen::VectorXd v(2);
    v << std::cos(angle), std::sin(angle);
    return normalized(v);
}

Direction Direction::from_spherical(double polar, double azimuth) {
    Eigen::VectorXd v(3);
    v << std::sin(polar) * std::cos(azimuth), std::sin(polar) * std::sin(azimuth), std::cos(polar);
    return normalized(v);
}

Direction Direction::random(int dim, std::mt19937_64& rng) {
    std::normal_distribution<double> normal(0.0, 1.0);
    Eigen::VectorXd v(dim);
    do {
        for (int i = 0; i < dim; ++i) v[i] = normal(rng);
    } while (v.norm() < 1e-12);
    return normalized(v);
}

double Direction::azimuth() const { return wrap_angle(std::atan2(coords_[1], coords_[0])); }

double Direction::polar() const {
    return std::acos(std::clamp(coords_[coords_.size() - 1], -1.0, 1.0));
}

// ---------------------------------------------------------------- Rotation

Rotation::Rotation(Eigen::MatrixXd matrix) : matrix_(std::move(matrix)) {
    if (matrix_.rows() != matrix_.cols() || matrix_.rows() < 2) {
        throw DomainError("Rotation: matrix must be square with n >= 2");
    }
    const Eigen::MatrixXd gram = matrix_.transpose() * matrix_;
    const Eigen::MatrixXd id = Eigen::MatrixXd::Identity(matrix_.rows(), matrix_.cols());
    if ((gram - id).cwiseAbs().maxCoeff() > kUnitTol) throw DomainError("Rotation: matrix is not orthogonal");
    if (std::abs(matrix_.determinant() - 1.0) > kUnitTol) throw DomainError("Rotation: determinant is not +1");
}

Rotation Rotation::identity(int dim) { return Rotation(Eigen::MatrixXd::Identity(dim, dim)); }

Rotation Rotation::planar(double angle) {
    Eigen::MatrixXd m(2, 2);
    m << std::cos(angle), -std::sin(angle), std::sin(angle), std::cos(angle);
    return Rotation(m);
}

Rotation Rotation::about_axis(const Eigen::Vector3d& axis, double angle) {
    if (axis.norm() == 0.0) throw DomainError("Rotation: zero rotation axis");
    Eigen::Matrix3d m = Eigen::AngleAxisd(angle, axis.normalized()).toRotationMatrix();
    return Rotation(Eigen::MatrixXd(m));
}

Rotation Rotation::random(int dim, std::mt19937_64& rng) {
    std::normal_distribution<double> normal(0.0, 1.0);
    Eigen::MatrixXd g(dim, dim);
    for (int i = 0; i < dim; ++i)
        for (int j = 0; j < dim; ++j) g(i, j) = normal(rng);
    Eigen::HouseholderQR<Eigen::MatrixXd> qr(g);
    Eigen::MatrixXd q = qr.householderQ();
    const Eigen::MatrixXd r = qr.matrixQR().triangularView<Eigen::Upper>();
    for (int j = 0; j < dim; ++j) {
        if (r(j, j) < 0.0) q.col(j) *= -1.0;
    }
    if (q.determinant() < 0.0) q.col(0) *= -1.0;
    return Rotation(q);
}

Rotation Rotation::inverse() const { return Rotation(matrix_.transpose()); }

Rotation Rotation::then(const Rotation& next) const { return Rotation(next.matrix_ * matrix_); }

bool Rotation::approx_equal(const Rotation& other, double tol) const {
    return dim() == other.dim() && (matrix_ - other.matrix_).cwiseAbs().maxCoeff() <= tol;
}

Direction rotate_direction(const Rotation& phi, const Direction& u) {
    if (phi.dim() != u.dim()) throw DimensionError("rotate_direction: dimension mismatch");
    return Direction::normalized(phi.matrix() * u.coords());
}

// ---------------------------------------------------------------- regions

SphericalRegion::SphericalRegion(Arc a) : v_(a) {
    if (!(a.start >= 0.0 && a.start < a.end && a.end <= kTwoPi)) {
        throw DomainError("Arc: need 0 <= start < end <= 2*pi");
    }
}

SphericalRegion::SphericalRegion(Cap c) : v_(c) {
    if (!(c.radius > 0.0 && c.radius <= kPi)) throw DomainError("Cap: radius must lie in (0, pi]");
}

SphericalRegion::SphericalRegion(CellSet c) : v_(FullSphere{}) {
    if (!c.grid) throw InvalidParameter("CellSet: null grid");
    std::sort(c.indices.begin(), c.indices.end());
    c.indices.erase(std::unique(c.indices.begin(), c.indices.end()), c.indices.end());
    if (!c.indices.empty() && c.indices.back() >= c.grid->size()) {
        throw DomainError("CellSet: cell index " + std::to_string(c.indices.back()) + " out of range for grid " +
                          c.grid->id());
    }
    v_ = std::move(c);
}

SphericalRegion::SphericalRegion(CapDifference d) : v_(FullSphere{}) {
    const auto angle = [](const Cap& a, const Cap& b) {
        return std::acos(std::clamp(a.center.dot(b.center), -1.0, 1.0));
    };
    std::optional<int> dim;
    if (d.outer) dim = d.outer->center.dim();
    for (const auto& h : d.holes) {
        if (!(h.radius > 0.0 && h.radius <= kPi)) throw DomainError("CapDifference: hole radius must lie in (0, pi]");
        if (dim && h.center.dim() != *dim) throw DimensionError("CapDifference: caps of different dimensions");
        dim = h.center.dim();
        if (d.outer && angle(*d.outer, h) + h.radius > d.outer->radius + 1e-12) {
            throw DomainError("CapDifference: hole is not contained in the outer cap");
        }
    }
    for (std::size_t i = 0; i < d.holes.size(); ++i)
        for (std::size_t j = i + 1; j < d.holes.size(); ++j)
            if (angle(d.holes[i], d.holes[j]) < d.holes[i].radius + d.holes[j].radius - 1e-12) {
                throw DomainError("CapDifference: holes overlap");
            }
    if (d.holes.empty()) {
        if (d.outer) {
            v_ = std::move(*d.outer);
        }
        return;
    }
    v_ = std::move(d);
}

SphericalRegion::SphericalRegion(RegionUnion u) : v_(FullSphere{}) {
    RegionUnion flat;
    for (auto& p : u.parts) {
        if (const auto* inner = p.get_if<RegionUnion>()) {
            flat.parts.insert(flat.parts.end(), inner->parts.begin(), inner->parts.end());
        } else {
            flat.parts.push_back(std::move(p));
        }
    }
    v_ = std::move(flat);
}

SphericalRegion SphericalRegion::cells(std::shared_ptr<const SphereGrid> grid, std::vector<std::size_t> indices) {
    return CellSet{std::move(grid), std::move(indices)};
}

std::optional<int> SphericalRegion::implied_dim() const {
    return std::visit(
        [](const auto& r) -> std::optional<int> {
            using T = std::decay_t<decltype(r)>;
            if constexpr (std::is_same_v<T, FullSphere>) {
                return std::nullopt;
            } else if constexpr (std::is_same_v<T, Arc>) {
                return 2;
            } else if constexpr (std::is_same_v<T, Cap>) {
                return r.center.dim();
            } else if constexpr (std::is_same_v<T, CellSet>) {
                return r.grid->dim();
            } else if constexpr (std::is_same_v<T, CapDifference>) {
                return r.outer ? r.outer->center.dim() : r.holes.front().center.dim();
            } else {
                for (const auto& p : r.parts)
                    if (auto d = p.implied_dim()) return d;
                return std::nullopt;
            }
        },
        v_);
}

bool SphericalRegion::contains(const Direction& u) const {
    return std::visit(
        [&](const auto& r) -> bool {
            using T = std::decay_t<decltype(r)>;
            if constexpr (std::is_same_v<T, FullSphere>) {
                return true;
            } else if constexpr (std::is_same_v<T, Arc>) {
                if (u.dim() != 2) throw DimensionError("Arc membership requires n = 2");
                const double a = u.azimuth();
                return a >= r.start && a < r.end;
            } else if constexpr (std::is_same_v<T, Cap>) {
                if (u.dim() != r.center.dim()) throw DimensionError("Cap membership: dimension mismatch");
                return r.radius >= kPi || u.dot(r.center) >= std::cos(r.radius);
            } else if constexpr (std::is_same_v<T, CellSet>) {
                if (u.dim() != r.grid->dim()) throw DimensionError("CellSet membership: dimension mismatch");
                return std::binary_search(r.indices.begin(), r.indices.end(), r.grid->locate(u));
            } else if constexpr (std::is_same_v<T, CapDifference>) {
                const auto in_cap = [&](const Cap& c) {
                    if (u.dim() != c.center.dim()) throw DimensionError("Cap membership: dimension mismatch");
                    return c.radius >= kPi || u.dot(c.center) >= std::cos(c.radius);
                };
                if (r.outer && !in_cap(*r.outer)) return false;
                return std::none_of(r.holes.begin(), r.holes.end(), in_cap);
            } else {
                return std::any_of(r.parts.begin(), r.parts.end(), [&](const auto& p) { return p.contains(u); });
            }
        },
        v_);
}

bool SphericalRegion::is_empty() const {
    if (const auto* c = get_if<CellSet>()) return c->indices.empty();
    if (const auto* u = get_if<RegionUnion>())
        return std::all_of(u->parts.begin(), u->parts.end(), [](const auto& p) { return p.is_empty(); });
    return false;
}

bool operator==(const SphericalRegion& a, const SphericalRegion& b) {
    if (a.v_.index() != b.v_.index()) return false;
    return std::visit(
        [&](const auto& x) -> bool {
            using T = std::decay_t<decltype(x)>;
            const auto& y = std::get<T>(b.v_);
            if constexpr (std::is_same_v<T, FullSphere>) {
                return true;
            } else if constexpr (std::is_same_v<T, Arc>) {
                return x.start == y.start && x.end == y.end;
            } else if constexpr (std::is_same_v<T, Cap>) {
                return x.radius == y.radius && x.center.coords() == y.center.coords();
            } else if constexpr (std::is_same_v<T, CellSet>) {
                return same_grid(*x.grid, *y.grid) && x.indices == y.indices;
            } else if constexpr (std::is_same_v<T, CapDifference>) {
                const auto eq = [](const Cap& a, const Cap& b) {
                    return a.radius == b.radius && a.center.coords() == b.center.coords();
                };
                if (x.outer.has_value() != y.outer.has_value()) return false;
                if (x.outer && !eq(*x.outer, *y.outer)) return false;
                return std::equal(x.holes.begin(), x.holes.end(), y.holes.begin(), y.holes.end(), eq);
            } else {
                return x.parts == y.parts;
            }
        },
        a.v_);
}

double region_measure(const SphericalRegion& r, int dim) {
    if (dim < 2) throw DomainError("region_measure: dim must be >= 2");
    return std::visit(
        [&](const auto& x) -> double {
            using T = std::decay_t<decltype(x)>;
            if constexpr (std::is_same_v<T, FullSphere>) {
                return surface_measure(dim);
            } else if constexpr (std::is_same_v<T, Arc>) {
                if (dim != 2) throw DimensionError("region_measure: Arc requires dim = 2, got " + std::to_string(dim));
                return x.end - x.start;
            } else if constexpr (std::is_same_v<T, Cap>) {
                if (x.center.dim() != dim) throw DimensionError("region_measure: Cap center has the wrong dimension");
                return cap_measure(dim, x.radius);
            } else if constexpr (std::is_same_v<T, CellSet>) {
                if (x.grid->dim() != dim) throw DimensionError("region_measure: CellSet grid has the wrong dimension");
                CompensatedSum s;
                for (std::size_t k : x.indices) s += x.grid->cell(k).weight;
                return s.value();
            } else if constexpr (std::is_same_v<T, CapDifference>) {
                CompensatedSum s;
                s += x.outer ? region_measure(*x.outer, dim) : surface_measure(dim);
                for (const auto& h : x.holes) s += -region_measure(h, dim);
                return s.value();
            } else {
                CompensatedSum s;
                for (const auto& p : x.parts) s += region_measure(p, dim);
                return s.value();
            }
        },
        r.variant());
}

// ---------------------------------------------------------------- grids

GridSpec GridSpec::parse(const std::string& text) {
    std::map<std::string, std::string> kv;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
        const auto eq = item.find('=');
        if (eq == std::string::npos) throw InvalidParameter("grid spec: expected key=value, got '" + item + "'");
        kv[item.substr(0, eq)] = item.substr(eq + 1);
    }
    if (!kv.count("dim")) throw InvalidParameter("grid spec: missing 'dim'");
    GridSpec spec;
    spec.dim = static_cast<int>(parse_count(kv["dim"], "dim"));
    if (spec.dim == 2) {
        if (!kv.count("m")) throw InvalidParameter("grid spec: dim=2 needs 'm'");
        spec.bands = 1;
        spec.sectors = parse_count(kv["m"], "m");
    } else if (spec.dim == 3) {
        if (!kv.count("bands") || !kv.count("sectors")) {
            throw InvalidParameter("grid spec: dim=3 needs 'bands' and 'sectors'");
        }
        spec.bands = parse_count(kv["bands"], "bands");
        spec.sectors = parse_count(kv["sectors"], "sectors");
    } else {
        throw UnsupportedExactGrid("grid spec: exact grids exist only for dim 2 and 3, got " + kv["dim"]);
    }
    return spec;
}

std::string GridSpec::id() const {
    if (dim == 2) return "dim=2,m=" + std::to_string(sectors);
    return "dim=" + std::to_string(dim) + ",bands=" + std::to_string(bands) + ",sectors=" + std::to_string(sectors);
}

std::shared_ptr<const SphereGrid> make_grid(const GridSpec& spec) {
    if (spec.dim < 2) throw DomainError("make_grid: dim must be >= 2");
    if (spec.dim > 3) {
        throw UnsupportedExactGrid("make_grid: no exact grid for dim " + std::to_string(spec.dim) +
                                   "; use the Monte Carlo paths");
    }
    if (spec.sectors == 0 || spec.bands == 0) throw InvalidParameter("make_grid: cell counts must be positive");
    if (spec.dim == 2 && spec.bands != 1) throw InvalidParameter("make_grid: dim=2 grids have a single band");

    std::shared_ptr<SphereGrid> g(new SphereGrid(spec));
    const std::size_t S = spec.sectors;
    const std::size_t B = spec.bands;
    auto phi_edge = [S](std::size_t j) { return j == S ? kTwoPi : kTwoPi * static_cast<double>(j) / S; };
    auto theta_edge = [B](std::size_t b) { return b == B ? kPi : kPi * static_cast<double>(b) / B; };
    g->cells_.reserve(B * S);
    for (std::size_t b = 0; b < B; ++b) {
        for (std::size_t j = 0; j < S; ++j) {
            CellBox box{0.0, 0.0, phi_edge(j), phi_edge(j + 1)};
            const double phi_mid = 0.5 * (box.phi_lo + box.phi_hi);
            if (spec.dim == 2) {
                g->cells_.push_back(GridCell{box, Direction::from_angle(phi_mid), box.phi_hi - box.phi_lo});
            } else {
                box.theta_lo = theta_edge(b);
                box.theta_hi = theta_edge(b + 1);
                const double w = (box.phi_hi - box.phi_lo) * (std::cos(box.theta_lo) - std::cos(box.theta_hi));
                const double theta_mid = 0.5 * (box.theta_lo + box.theta_hi);
                g->cells_.push_back(GridCell{box, Direction::from_spherical(theta_mid, phi_mid), w});
            }
        }
    }
    return g;
}

std::size_t SphereGrid::locate(const Direction& u) const {
    if (u.dim() != dim()) throw DimensionError("SphereGrid::locate: dimension mismatch");
    const std::size_t S = spec_.sectors;
    const double dphi = kTwoPi / S;
    std::size_t j = std::min<std::size_t>(S - 1, static_cast<std::size_t>(u.azimuth() / dphi));
    // Correct for rounding right at an edge so that the box really holds u.
    const double a = u.azimuth();
    if (j > 0 && a < cells_[j].box.phi_lo) --j;
    if (j + 1 < S && a >= cells_[j].box.phi_hi) ++j;
    if (dim() == 2) return j;
    const std::size_t B = spec_.bands;
    const double theta = u.polar();
    std::size_t b = std::min<std::size_t>(B - 1, static_cast<std::size_t>(theta / (kPi / B)));
    if (b > 0 && theta < cells_[b * S].box.theta_lo) --b;
    if (b + 1 < B && theta >= cells_[b * S].box.theta_hi) ++b;
    return b * S + j;
}

double SphereGrid::total_weight() const {
    CompensatedSum s;
    for (const auto& c : cells_) s += c.weight;
    return s.value();
}

bool same_grid(const SphereGrid& a, const SphereGrid& b) { return &a == &b || a.spec() == b.spec(); }

Rasterization rasterize(const SphericalRegion& r, const std::shared_ptr<const SphereGrid>& g) {
    if (!g) throw InvalidParameter("rasterize: null grid");
    if (auto d = r.implied_dim(); d && *d != g->dim()) throw DimensionError("rasterize: region and grid dimensions differ");
    std::vector<std::size_t> chosen;
    CompensatedSum err;
    for (std::size_t k = 0; k < g->size(); ++k) {
        const GridCell& cell = g->cell(k);
        const CellCover cc = classify(r, *g, k);
        const bool rep_in = cc.cover == Cover::Inside || (cc.cover == Cover::Partial && r.contains(cell.representative));
        if (rep_in) chosen.push_back(k);
        if (cc.cover == Cover::Partial) {
            if (cc.overlap) {
                err += rep_in ? cell.weight - *cc.overlap : *cc.overlap;
            } else {
                err += cell.weight;
            }
        }
    }
    return Rasterization{SphericalRegion::cells(g, std::move(chosen)), std::max(0.0, err.value())};
}

namespace {

GridSymmetry sector_shift(const SphereGrid& g, std::size_t j) {
    const std::size_t S = g.sectors();
    const double angle = kTwoPi * static_cast<double>(j) / S;
    Rotation rot = j == 0 ? Rotation::identity(g.dim())
                 : g.dim() == 2 ? Rotation::planar(angle)
                                : Rotation::about_axis(Eigen::Vector3d::UnitZ(), angle);
    std::vector<std::size_t> perm(g.size());
    for (std::size_t b = 0; b < g.bands(); ++b)
        for (std::size_t s = 0; s < S; ++s) perm[b * S + s] = b * S + (s + j) % S;
    return GridSymmetry{std::move(rot), std::move(perm)};
}

}  // namespace

std::vector<GridSymmetry> grid_symmetries(const SphereGrid& g) {
    std::vector<GridSymmetry> out;
    out.reserve(g.sectors());
    for (std::size_t j = 0; j < g.sectors(); ++j) out.push_back(sector_shift(g, j));
    return out;
}

std::optional<GridSymmetry> find_symmetry(const SphereGrid& g, const Rotation& phi) {
    if (phi.dim() != g.dim()) return std::nullopt;
    const std::size_t S = g.sectors();
    const double angle = wrap_angle(std::atan2(phi.matrix()(1, 0), phi.matrix()(0, 0)));
    const auto j = static_cast<std::size_t>(std::llround(angle / (kTwoPi / static_cast<double>(S)))) % S;
    GridSymmetry candidate = sector_shift(g, j);
    if (!candidate.rotation.approx_equal(phi)) return std::nullopt;
    return candidate;
}

SphericalRegion rotate_region(const Rotation& phi, const SphericalRegion& r) {
    return std::visit(
        [&](const auto& x) -> SphericalRegion {
            using T = std::decay_t<decltype(x)>;
            if constexpr (std::is_same_v<T, FullSphere>) {
                return x;
            } else if constexpr (std::is_same_v<T, Arc>) {
                if (phi.dim() != 2) throw DimensionError("rotate_region: Arc needs a planar rotation");
                const double shift = std::atan2(phi.matrix()(1, 0), phi.matrix()(0, 0));
                const double len = x.end - x.start;
                const double s = wrap_angle(x.start + shift);
                if (len >= kTwoPi) return Arc{0.0, kTwoPi};
                if (s + len <= kTwoPi) return Arc{s, std::min(kTwoPi, s + len)};
                const double tail = s + len - kTwoPi;
                return RegionUnion{{Arc{0.0, tail}, Arc{s, kTwoPi}}};
            } else if constexpr (std::is_same_v<T, Cap>) {
                return Cap{rotate_direction(phi, x.center), x.radius};
            } else if constexpr (std::is_same_v<T, CellSet>) {
                auto sym = find_symmetry(*x.grid, phi);
                if (!sym) throw UnsupportedRotation("rotate_region: rotation is not a symmetry of grid " + x.grid->id());
                std::vector<std::size_t> idx;
                idx.reserve(x.indices.size());
                for (std::size_t k : x.indices) idx.push_back(sym->permutation[k]);
                return CellSet{x.grid, std::move(idx)};
            } else if constexpr (std::is_same_v<T, CapDifference>) {
                CapDifference d;
                if (x.outer) d.outer = Cap{rotate_direction(phi, x.outer->center), x.outer->radius};
                for (const auto& h : x.holes) d.holes.push_back(Cap{rotate_direction(phi, h.center), h.radius});
                return d;
            } else {
                RegionUnion u;
                for (const auto& p : x.parts) u.parts.push_back(rotate_region(phi, p));
                return u;
            }
        },
        r.variant());
}

}  // namespace dualmv
