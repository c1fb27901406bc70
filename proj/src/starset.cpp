#include "dualmv/starset.hpp"

#include "dualmv/errors.hpp"
#include "dualmv/numeric.hpp"
#include "dualmv/refinement.hpp"

#include <algorithm>
#include <cmath>
#include <map>

namespace dualmv {

namespace {

constexpr double kAlignmentTol = 1e-12;

void check_level(double level) {
    if (!std::isfinite(level) || level < 0.0) {
        throw DomainError("polycone level must be finite and nonnegative, got " + std::to_string(level));
    }
}

int common_dim(std::span<const StarSet> ls, const char* what) {
    if (ls.empty()) throw ArityError(std::string(what) + ": needs at least one star set");
    const int dim = ls.front().dim();
    for (const auto& l : ls)
        if (l.dim() != dim) throw DimensionError(std::string(what) + ": star sets of different dimensions");
    return dim;
}

std::shared_ptr<const SphereGrid> first_grid(std::span<const StarSet> ls) {
    for (const auto& l : ls)
        if (const auto* g = l.grid_values()) return g->grid;
    return nullptr;
}

}  // namespace

// ---------------------------------------------------------------- Polycone

Polycone Polycone::empty(int dim) {
    if (dim < 2) throw DomainError("Polycone: dim must be >= 2");
    return Polycone(dim, {});
}

double Polycone::max_level() const { return terms_.empty() ? 0.0 : terms_.back().level; }

double Polycone::evaluate(const Direction& u) const {
    if (u.dim() != dim_) throw DimensionError("Polycone::evaluate: dimension mismatch");
    for (const auto& t : terms_)
        if (t.base.contains(u)) return t.level;
    return 0.0;
}

Polycone Polycone::scaled(double t) const {
    if (!std::isfinite(t) || t < 0.0) throw DomainError("Polycone::scaled: factor must be >= 0");
    if (t == 0.0) return empty(dim_);
    std::vector<PolyconeTerm> out = terms_;
    for (auto& term : out) term.level *= t;
    // Scaling can only merge levels through overflow or underflow.
    for (std::size_t i = 1; i < out.size(); ++i)
        if (out[i].level == out[i - 1].level || out[i - 1].level == 0.0) return canonicalize(dim_, std::move(out));
    return Polycone(dim_, std::move(out));
}

Polycone Polycone::rotated(const Rotation& phi) const {
    if (phi.dim() != dim_) throw DimensionError("Polycone::rotated: dimension mismatch");
    std::vector<PolyconeTerm> out;
    out.reserve(terms_.size());
    for (const auto& t : terms_) out.push_back(PolyconeTerm{t.level, rotate_region(phi, t.base)});
    return Polycone(dim_, std::move(out));
}

bool operator==(const Polycone& a, const Polycone& b) {
    if (a.dim_ != b.dim_ || a.terms_.size() != b.terms_.size()) return false;
    for (std::size_t i = 0; i < a.terms_.size(); ++i) {
        if (a.terms_[i].level != b.terms_[i].level || !(a.terms_[i].base == b.terms_[i].base)) return false;
    }
    return true;
}

Polycone overlay(int dim, std::span<const std::vector<PolyconeTerm>> groups, Overlay mode) {
    if (dim < 2) throw DomainError("overlay: dim must be >= 2");
    std::vector<SphericalRegion> regions;
    std::vector<std::pair<std::size_t, double>> owner;  // (group, level) per region
    for (std::size_t g = 0; g < groups.size(); ++g) {
        for (const auto& t : groups[g]) {
            check_level(t.level);
            if (t.level == 0.0 || t.base.is_empty()) continue;
            if (auto d = t.base.implied_dim(); d && *d != dim) throw DimensionError("overlay: base of wrong dimension");
            regions.push_back(t.base);
            owner.emplace_back(g, t.level);
        }
    }
    if (regions.empty()) return Polycone(dim, {});
    const Refinement ref = Refinement::build(dim, regions);

    // group_value[g][a]: max level of group g over atom a.
    const std::size_t n_atoms = ref.atom_count();
    std::vector<std::vector<double>> group_value(groups.size(), std::vector<double>(n_atoms, 0.0));
    for (std::size_t r = 0; r < regions.size(); ++r) {
        auto& gv = group_value[owner[r].first];
        for (std::size_t a : ref.atoms_of(r)) gv[a] = std::max(gv[a], owner[r].second);
    }
    std::map<double, std::vector<std::size_t>> level_sets;
    for (std::size_t a = 0; a < n_atoms; ++a) {
        if (!(ref.atom_measure(a) > 0.0)) continue;
        double v = 0.0;
        switch (mode) {
            case Overlay::Max:
                for (const auto& gv : group_value) v = std::max(v, gv[a]);
                break;
            case Overlay::Sum:
                for (const auto& gv : group_value) v += gv[a];
                break;
            case Overlay::Min:
                v = group_value.empty() ? 0.0 : group_value.front()[a];
                for (const auto& gv : group_value) v = std::min(v, gv[a]);
                break;
        }
        if (v > 0.0) level_sets[v].push_back(a);
    }
    std::vector<PolyconeTerm> terms;
    terms.reserve(level_sets.size());
    for (const auto& [level, atoms] : level_sets) terms.push_back(PolyconeTerm{level, ref.assemble(atoms)});
    return Polycone(dim, std::move(terms));
}

Polycone canonicalize(int dim, std::vector<PolyconeTerm> terms) {
    std::vector<std::vector<PolyconeTerm>> groups{std::move(terms)};
    return overlay(dim, groups, Overlay::Max);
}

Polycone star_hull(int dim, const SphericalRegion& a) { return cone(dim, 1.0, a); }

Polycone cone(int dim, double alpha, const SphericalRegion& a) {
    if (!(alpha > 0.0) || !std::isfinite(alpha)) throw DomainError("cone: radius must be > 0");
    return canonicalize(dim, {PolyconeTerm{alpha, a}});
}

namespace {

Polycone combine(std::span<const Polycone> cs, Overlay mode, const char* what) {
    if (cs.empty()) throw ArityError(std::string(what) + ": needs at least one polycone");
    const int dim = cs.front().dim();
    std::vector<std::vector<PolyconeTerm>> groups;
    for (const auto& c : cs) {
        if (c.dim() != dim) throw DimensionError(std::string(what) + ": polycones of different dimensions");
        groups.emplace_back(c.terms().begin(), c.terms().end());
    }
    return overlay(dim, groups, mode);
}

}  // namespace

Polycone polycone_union(std::span<const Polycone> cs) { return combine(cs, Overlay::Max, "polycone_union"); }
Polycone polycone_intersect(std::span<const Polycone> cs) { return combine(cs, Overlay::Min, "polycone_intersect"); }
Polycone polycone_sum(std::span<const Polycone> cs) { return combine(cs, Overlay::Sum, "polycone_sum"); }

// ---------------------------------------------------------------- StarSet

StarSet::StarSet(Polycone p) : dim_(p.dim()), rho_(std::move(p)) {}

StarSet StarSet::on_grid(std::shared_ptr<const SphereGrid> grid, std::vector<double> values) {
    if (!grid) throw InvalidParameter("StarSet::on_grid: null grid");
    if (values.size() != grid->size()) {
        throw InvalidParameter("StarSet::on_grid: expected " + std::to_string(grid->size()) + " values, got " +
                               std::to_string(values.size()));
    }
    for (double v : values) check_level(v);
    const int dim = grid->dim();
    return StarSet(dim, GridValues{std::move(grid), std::move(values)});
}

StarSet StarSet::sampler(int dim, std::function<double(const Direction&)> fn, double bound, bool continuous) {
    if (dim < 2) throw DomainError("StarSet::sampler: dim must be >= 2");
    if (!fn) throw InvalidParameter("StarSet::sampler: empty callable");
    if (!std::isfinite(bound) || bound < 0.0) throw DomainError("StarSet::sampler: bound must be finite and >= 0");
    return StarSet(dim, Sampler{std::move(fn), bound, continuous});
}

StarSet StarSet::ball(int dim, double radius) {
    check_level(radius);
    if (radius == 0.0) return origin(dim);
    return cone(dim, radius, FullSphere{});
}

double StarSet::sup_norm() const {
    if (const auto* p = polycone()) return p->max_level();
    if (const auto* g = grid_values()) {
        double m = 0.0;
        for (double v : g->values) m = std::max(m, v);
        return m;
    }
    return sampler()->bound;
}

bool StarSet::is_star_body() const {
    if (const auto* p = polycone()) {
        if (p->is_trivial()) return true;
        if (!p->is_cone()) return false;
        const double full = surface_measure(dim_);
        return std::abs(region_measure(p->terms().front().base, dim_) - full) <= 1e-12 * full;
    }
    if (const auto* g = grid_values()) {
        return std::all_of(g->values.begin(), g->values.end(), [&](double v) { return v == g->values.front(); });
    }
    return sampler()->continuous;
}

bool StarSet::contains_point(const Eigen::VectorXd& x) const {
    if (x.size() != dim_) throw DimensionError("StarSet::contains_point: dimension mismatch");
    const double r = x.norm();
    if (r == 0.0) return true;
    return r <= radial_eval(*this, Direction::normalized(x));
}

double radial_eval(const StarSet& l, const Direction& u) {
    if (u.dim() != l.dim()) throw DimensionError("radial_eval: dimension mismatch");
    if (const auto* p = l.polycone()) return p->evaluate(u);
    if (const auto* g = l.grid_values()) return g->values[g->grid->locate(u)];
    const auto* s = l.sampler();
    const double v = s->fn(u);
    if (!std::isfinite(v) || v < 0.0 || v > s->bound) {
        throw DomainError("radial_eval: sampler value " + std::to_string(v) + " outside [0, " +
                          std::to_string(s->bound) + "]");
    }
    return v;
}

std::vector<double> values_on_grid(const StarSet& l, const std::shared_ptr<const SphereGrid>& grid) {
    if (!grid) throw InvalidParameter("values_on_grid: null grid");
    if (l.dim() != grid->dim()) throw DimensionError("values_on_grid: dimension mismatch");
    if (const auto* g = l.grid_values()) {
        if (!same_grid(*g->grid, *grid)) {
            throw GridMismatch("values_on_grid: data lives on grid " + g->grid->id() + ", requested " + grid->id());
        }
        return g->values;
    }
    if (l.is_sampler()) throw GridMismatch("values_on_grid: a sampler has no exact values on grid " + grid->id());
    std::vector<double> out(grid->size(), 0.0);
    for (const auto& t : l.polycone()->terms()) {
        const auto* cs = t.base.get_if<CellSet>();
        if (cs && same_grid(*cs->grid, *grid)) {
            for (std::size_t k : cs->indices) out[k] = t.level;
            continue;
        }
        if (t.base.is<FullSphere>()) {
            std::fill(out.begin(), out.end(), t.level);
            continue;
        }
        const Rasterization r = rasterize(t.base, grid);
        if (r.error_bound > kAlignmentTol) {
            throw GridMismatch("values_on_grid: polycone base is not a union of cells of grid " + grid->id());
        }
        for (std::size_t k : r.cells.get_if<CellSet>()->indices) out[k] = t.level;
    }
    return out;
}

std::vector<Piece> pieces_of(const StarSet& l) {
    std::vector<Piece> out;
    if (const auto* p = l.polycone()) {
        for (const auto& t : p->terms()) out.push_back(Piece{t.level, t.base});
        return out;
    }
    if (const auto* g = l.grid_values()) {
        for (std::size_t k = 0; k < g->values.size(); ++k)
            if (g->values[k] > 0.0) out.push_back(Piece{g->values[k], SphericalRegion::cells(g->grid, {k})});
        return out;
    }
    throw InvalidParameter("pieces_of: a sampler is not piecewise constant");
}

namespace {

StarSet combine_star_sets(std::span<const StarSet> ls, const std::shared_ptr<const SphereGrid>& grid, Overlay mode,
                          const char* what) {
    const int dim = common_dim(ls, what);
    const bool any_sampler = std::any_of(ls.begin(), ls.end(), [](const StarSet& l) { return l.is_sampler(); });
    if (any_sampler) {
        std::vector<StarSet> copies(ls.begin(), ls.end());
        double bound = mode == Overlay::Sum ? 0.0 : copies.front().sup_norm();
        bool continuous = true;
        for (const auto& l : copies) {
            bound = mode == Overlay::Sum ? bound + l.sup_norm()
                    : mode == Overlay::Max ? std::max(bound, l.sup_norm())
                                           : std::min(bound, l.sup_norm());
            continuous = continuous && l.is_star_body();
        }
        auto fn = [copies = std::move(copies), mode](const Direction& u) {
            double v = radial_eval(copies.front(), u);
            for (std::size_t i = 1; i < copies.size(); ++i) {
                const double w = radial_eval(copies[i], u);
                v = mode == Overlay::Sum ? v + w : mode == Overlay::Max ? std::max(v, w) : std::min(v, w);
            }
            return v;
        };
        return StarSet::sampler(dim, std::move(fn), bound, continuous);
    }
    auto target = grid ? grid : first_grid(ls);
    if (target) {
        std::vector<double> acc = values_on_grid(ls.front(), target);
        for (std::size_t i = 1; i < ls.size(); ++i) {
            const std::vector<double> v = values_on_grid(ls[i], target);
            for (std::size_t k = 0; k < acc.size(); ++k) {
                acc[k] = mode == Overlay::Sum ? acc[k] + v[k]
                         : mode == Overlay::Max ? std::max(acc[k], v[k])
                                                : std::min(acc[k], v[k]);
            }
        }
        return StarSet::on_grid(target, std::move(acc));
    }
    std::vector<Polycone> ps;
    ps.reserve(ls.size());
    for (const auto& l : ls) ps.push_back(*l.polycone());
    return combine(ps, mode, what);
}

}  // namespace

StarSet radial_sum(std::span<const StarSet> ls, const std::shared_ptr<const SphereGrid>& grid) {
    return combine_star_sets(ls, grid, Overlay::Sum, "radial_sum");
}

StarSet radial_min(std::span<const StarSet> ls, const std::shared_ptr<const SphereGrid>& grid) {
    return combine_star_sets(ls, grid, Overlay::Min, "radial_min");
}

StarSet scale(double t, const StarSet& l) {
    if (!std::isfinite(t) || t < 0.0) throw DomainError("scale: factor must be finite and >= 0");
    if (t == 0.0) return StarSet::origin(l.dim());
    if (const auto* p = l.polycone()) return p->scaled(t);
    if (const auto* g = l.grid_values()) {
        std::vector<double> v = g->values;
        for (double& x : v) x *= t;
        return StarSet::on_grid(g->grid, std::move(v));
    }
    const Sampler s = *l.sampler();
    auto fn = [f = s.fn, t](const Direction& u) { return t * f(u); };
    return StarSet::sampler(l.dim(), std::move(fn), t * s.bound, s.continuous);
}

StarSet rotate_starset(const Rotation& phi, const StarSet& l) {
    if (phi.dim() != l.dim()) throw DimensionError("rotate_starset: dimension mismatch");
    if (const auto* p = l.polycone()) return p->rotated(phi);
    if (const auto* g = l.grid_values()) {
        auto sym = find_symmetry(*g->grid, phi);
        if (!sym) throw UnsupportedRotation("rotate_starset: rotation is not a symmetry of grid " + g->grid->id());
        std::vector<double> v(g->values.size());
        for (std::size_t k = 0; k < v.size(); ++k) v[sym->permutation[k]] = g->values[k];
        return StarSet::on_grid(g->grid, std::move(v));
    }
    const Sampler s = *l.sampler();
    auto fn = [f = s.fn, inv = phi.inverse()](const Direction& u) { return f(rotate_direction(inv, u)); };
    return StarSet::sampler(l.dim(), std::move(fn), s.bound, s.continuous);
}

}  // namespace dualmv
