#include "dualmv/refinement.hpp"

#include "dualmv/errors.hpp"
#include "dualmv/numeric.hpp"

#include <algorithm>
#include <cmath>
#include <optional>
#include <utility>

namespace dualmv {

namespace {

using Interval = std::pair<double, double>;

// Appends the half-open intervals making up `r` on S^1; false if `r` is not
// expressible as arcs.
bool to_intervals(const SphericalRegion& r, std::vector<Interval>& out) {
    if (r.is<FullSphere>()) {
        out.emplace_back(0.0, kTwoPi);
        return true;
    }
    if (const auto* a = r.get_if<Arc>()) {
        out.emplace_back(a->start, a->end);
        return true;
    }
    if (const auto* c = r.get_if<Cap>()) {
        if (c->center.dim() != 2) return false;
        if (c->radius >= kPi) {
            out.emplace_back(0.0, kTwoPi);
            return true;
        }
        const double s = c->center.azimuth() - c->radius;
        const double e = c->center.azimuth() + c->radius;
        if (s < 0.0) {
            out.emplace_back(s + kTwoPi, kTwoPi);
            out.emplace_back(0.0, e);
        } else if (e > kTwoPi) {
            out.emplace_back(s, kTwoPi);
            out.emplace_back(0.0, e - kTwoPi);
        } else {
            out.emplace_back(s, e);
        }
        return true;
    }
    if (const auto* cs = r.get_if<CellSet>()) {
        if (cs->grid->dim() != 2) return false;
        for (std::size_t k : cs->indices) {
            const auto& box = cs->grid->cell(k).box;
            out.emplace_back(box.phi_lo, box.phi_hi);
        }
        return true;
    }
    if (const auto* u = r.get_if<RegionUnion>()) {
        for (const auto& p : u->parts)
            if (!to_intervals(p, out)) return false;
        return true;
    }
    return false;
}

// Grid shared by every CellSet in `r`; false if `r` uses anything but cells and full.
bool grid_aligned(const SphericalRegion& r, std::shared_ptr<const SphereGrid>& grid) {
    if (r.is<FullSphere>()) return true;
    if (const auto* cs = r.get_if<CellSet>()) {
        if (!grid) {
            grid = cs->grid;
            return true;
        }
        return same_grid(*grid, *cs->grid);
    }
    if (const auto* u = r.get_if<RegionUnion>()) {
        for (const auto& p : u->parts)
            if (!grid_aligned(p, grid)) return false;
        return true;
    }
    return false;
}

void collect_cells(const SphericalRegion& r, std::size_t n_cells, std::vector<std::size_t>& out) {
    if (r.is<FullSphere>()) {
        for (std::size_t k = 0; k < n_cells; ++k) out.push_back(k);
    } else if (const auto* cs = r.get_if<CellSet>()) {
        out.insert(out.end(), cs->indices.begin(), cs->indices.end());
    } else if (const auto* u = r.get_if<RegionUnion>()) {
        for (const auto& p : u->parts) collect_cells(p, n_cells, out);
    }
}

// A cap with holes; no outer cap means the whole sphere.
struct Piece {
    std::optional<Cap> outer;
    std::vector<Cap> holes;
};

// Pieces making up `r`; false if `r` holds anything but caps.
bool to_pieces(const SphericalRegion& r, std::vector<Piece>& out) {
    if (r.is<FullSphere>()) {
        out.push_back({});
        return true;
    }
    if (const auto* c = r.get_if<Cap>()) {
        out.push_back(c->radius >= kPi ? Piece{} : Piece{*c, {}});
        return true;
    }
    if (const auto* d = r.get_if<CapDifference>()) {
        Piece p;
        if (d->outer && d->outer->radius < kPi) p.outer = d->outer;
        for (const auto& h : d->holes) {
            if (h.radius >= kPi) return true;
            p.holes.push_back(h);
        }
        out.push_back(std::move(p));
        return true;
    }
    if (const auto* cs = r.get_if<CellSet>()) return cs->indices.empty();
    if (const auto* u = r.get_if<RegionUnion>()) {
        for (const auto& p : u->parts)
            if (!to_pieces(p, out)) return false;
        return true;
    }
    return false;
}

bool same_cap(const Cap& a, const Cap& b) { return a.radius == b.radius && a.center.coords() == b.center.coords(); }

double center_angle(const Cap& a, const Cap& b) { return std::acos(std::clamp(a.center.dot(b.center), -1.0, 1.0)); }

void sort_unique(std::vector<std::size_t>& v) {
    std::sort(v.begin(), v.end());
    v.erase(std::unique(v.begin(), v.end()), v.end());
}

}  // namespace

Refinement Refinement::build(int dim, std::span<const SphericalRegion> regions) {
    if (dim < 2) throw DomainError("Refinement: dim must be >= 2");
    for (const auto& r : regions) {
        if (auto d = r.implied_dim(); d && *d != dim) {
            throw DimensionError("Refinement: region of dimension " + std::to_string(*d) + " in dimension " +
                                 std::to_string(dim));
        }
    }
    Refinement ref;
    ref.dim_ = dim;

    // Cells of a single grid.
    {
        std::shared_ptr<const SphereGrid> grid;
        bool ok = true;
        for (const auto& r : regions) ok = ok && grid_aligned(r, grid);
        if (ok && grid) {
            ref.kind_ = Kind::Cells;
            ref.grid_ = grid;
            ref.measures_.reserve(grid->size());
            for (const auto& c : grid->cells()) ref.measures_.push_back(c.weight);
            for (const auto& r : regions) {
                std::vector<std::size_t> m;
                collect_cells(r, grid->size(), m);
                sort_unique(m);
                ref.members_.push_back(std::move(m));
            }
            return ref;
        }
    }

    // Arcs of the circle.
    if (dim == 2) {
        std::vector<std::vector<Interval>> ivs(regions.size());
        bool ok = true;
        for (std::size_t i = 0; i < regions.size() && ok; ++i) ok = to_intervals(regions[i], ivs[i]);
        if (ok) {
            ref.kind_ = Kind::Intervals;
            ref.breaks_ = {0.0, kTwoPi};
            for (const auto& v : ivs)
                for (const auto& [s, e] : v) {
                    ref.breaks_.push_back(s);
                    ref.breaks_.push_back(e);
                }
            std::sort(ref.breaks_.begin(), ref.breaks_.end());
            ref.breaks_.erase(std::unique(ref.breaks_.begin(), ref.breaks_.end()), ref.breaks_.end());
            for (std::size_t a = 0; a + 1 < ref.breaks_.size(); ++a)
                ref.measures_.push_back(ref.breaks_[a + 1] - ref.breaks_[a]);
            auto index_of = [&](double x) {
                return static_cast<std::size_t>(std::lower_bound(ref.breaks_.begin(), ref.breaks_.end(), x) -
                                                ref.breaks_.begin());
            };
            for (const auto& v : ivs) {
                std::vector<std::size_t> m;
                for (const auto& [s, e] : v)
                    for (std::size_t a = index_of(s); a < index_of(e); ++a) m.push_back(a);
                sort_unique(m);
                ref.members_.push_back(std::move(m));
            }
            return ref;
        }
    }

    // Laminar family of caps.
    std::vector<std::vector<Piece>> per_region(regions.size());
    for (std::size_t i = 0; i < regions.size(); ++i) {
        if (!to_pieces(regions[i], per_region[i])) {
            throw RequiresRasterization(
                "Refinement: regions mix cells, arcs or caps in a way with no exact common refinement; "
                "rasterize onto a grid first");
        }
    }
    ref.kind_ = Kind::Laminar;
    auto add_cap = [&](const Cap& c) {
        if (std::none_of(ref.caps_.begin(), ref.caps_.end(), [&](const Cap& d) { return same_cap(c, d); }))
            ref.caps_.push_back(c);
    };
    for (const auto& v : per_region)
        for (const auto& p : v) {
            if (p.outer) add_cap(*p.outer);
            for (const auto& h : p.holes) add_cap(h);
        }
    const std::size_t n = ref.caps_.size();
    // contains[i][j]: cap j is nested in cap i.
    std::vector<std::vector<char>> contains(n, std::vector<char>(n, 0));
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = i + 1; j < n; ++j) {
            const Cap& a = ref.caps_[i];
            const Cap& b = ref.caps_[j];
            const double d = center_angle(a, b);
            if (d >= a.radius + b.radius - 1e-12) continue;
            if (d + b.radius <= a.radius + 1e-12) {
                contains[i][j] = 1;
            } else if (d + a.radius <= b.radius + 1e-12) {
                contains[j][i] = 1;
            } else {
                throw RequiresRasterization(
                    "Refinement: overlapping caps have no closed-form common refinement; rasterize onto a grid first");
            }
        }
    }
    ref.parent_.assign(n, -1);
    for (std::size_t j = 0; j < n; ++j) {
        for (std::size_t i = 0; i < n; ++i) {
            if (!contains[i][j]) continue;
            const int p = ref.parent_[j];
            if (p < 0 || ref.caps_[i].radius < ref.caps_[static_cast<std::size_t>(p)].radius) {
                ref.parent_[j] = static_cast<int>(i);
            }
        }
    }
    ref.measures_.assign(n + 1, 0.0);
    std::vector<CompensatedSum> acc(n + 1);
    acc[n] += surface_measure(dim);
    for (std::size_t i = 0; i < n; ++i) {
        const double m = region_measure(ref.caps_[i], dim);
        acc[i] += m;
        const std::size_t p = ref.parent_[i] < 0 ? n : static_cast<std::size_t>(ref.parent_[i]);
        acc[p] += -m;
    }
    for (std::size_t i = 0; i <= n; ++i) ref.measures_[i] = std::max(0.0, acc[i].value());

    auto find = [&](const Cap& c) {
        return static_cast<std::size_t>(
            std::find_if(ref.caps_.begin(), ref.caps_.end(), [&](const Cap& d) { return same_cap(c, d); }) -
            ref.caps_.begin());
    };
    auto subtree = [&](std::size_t root, std::vector<char>& mark, char value) {
        for (std::size_t j = 0; j < n; ++j)
            if (j == root || contains[root][j]) mark[j] = value;
    };
    for (const auto& pieces : per_region) {
        std::vector<char> in(n + 1, 0);
        for (const auto& p : pieces) {
            std::vector<char> mark(n + 1, 0);
            if (p.outer) {
                subtree(find(*p.outer), mark, 1);
            } else {
                std::fill(mark.begin(), mark.end(), 1);
            }
            for (const auto& h : p.holes) subtree(find(h), mark, 0);
            for (std::size_t a = 0; a <= n; ++a) in[a] = static_cast<char>(in[a] | mark[a]);
        }
        std::vector<std::size_t> m;
        for (std::size_t a = 0; a <= n; ++a)
            if (in[a]) m.push_back(a);
        ref.members_.push_back(std::move(m));
    }
    return ref;
}

SphericalRegion Refinement::assemble(std::span<const std::size_t> atoms) const {
    std::vector<std::size_t> sel(atoms.begin(), atoms.end());
    sort_unique(sel);
    switch (kind_) {
        case Kind::Cells:
            return SphericalRegion::cells(grid_, std::move(sel));
        case Kind::Intervals: {
            if (sel.size() == atom_count()) return FullSphere{};
            RegionUnion u;
            std::size_t i = 0;
            while (i < sel.size()) {
                std::size_t j = i;
                while (j + 1 < sel.size() && sel[j + 1] == sel[j] + 1) ++j;
                u.parts.emplace_back(Arc{breaks_[sel[i]], breaks_[sel[j] + 1]});
                i = j + 1;
            }
            if (u.parts.size() == 1) return u.parts.front();
            return u;
        }
        case Kind::Laminar:
            break;
    }
    const std::size_t n = caps_.size();
    if (sel.size() == n + 1) return FullSphere{};
    std::vector<char> chosen(n + 1, 0);
    for (std::size_t a : sel) chosen[a] = 1;
    // Atom n is the root of the containment tree.
    std::vector<std::vector<std::size_t>> children(n + 1);
    for (std::size_t j = 0; j < n; ++j) children[parent_[j] < 0 ? n : static_cast<std::size_t>(parent_[j])].push_back(j);
    RegionUnion u;
    for (std::size_t i = 0; i <= n; ++i) {
        if (!chosen[i]) continue;
        if (i < n && chosen[parent_[i] < 0 ? n : static_cast<std::size_t>(parent_[i])]) continue;
        CapDifference d;
        if (i < n) d.outer = caps_[i];
        std::vector<std::size_t> stack = children[i];
        while (!stack.empty()) {
            const std::size_t j = stack.back();
            stack.pop_back();
            if (chosen[j]) {
                stack.insert(stack.end(), children[j].begin(), children[j].end());
            } else {
                d.holes.push_back(caps_[j]);
            }
        }
        u.parts.emplace_back(std::move(d));
    }
    if (u.parts.size() == 1) return u.parts.front();
    return u;
}

double intersection_measure(int dim, std::span<const SphericalRegion> regions) {
    if (regions.empty()) return surface_measure(dim);
    const Refinement ref = Refinement::build(dim, regions);
    std::vector<std::size_t> common(ref.atoms_of(0).begin(), ref.atoms_of(0).end());
    for (std::size_t i = 1; i < regions.size(); ++i) {
        std::vector<std::size_t> next;
        std::set_intersection(common.begin(), common.end(), ref.atoms_of(i).begin(), ref.atoms_of(i).end(),
                              std::back_inserter(next));
        common = std::move(next);
    }
    CompensatedSum s;
    for (std::size_t a : common) s += ref.atom_measure(a);
    return s.value();
}

}  // namespace dualmv
