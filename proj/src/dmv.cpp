#include "dualmv/dmv.hpp"

#include "dualmv/errors.hpp"
#include "dualmv/numeric.hpp"
#include "dualmv/refinement.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

namespace dualmv {

std::string to_string(VolumeMethod m) {
    switch (m) {
        case VolumeMethod::Exact:
            return "exact";
        case VolumeMethod::Quadrature:
            return "quadrature";
        case VolumeMethod::MonteCarlo:
            return "monte-carlo";
    }
    return "unknown";
}

namespace {

int check_bodies(std::span<const StarSet> bodies, const char* what) {
    if (bodies.empty()) throw ArityError(std::string(what) + ": needs at least one body");
    const int dim = bodies.front().dim();
    for (const auto& b : bodies)
        if (b.dim() != dim) throw DimensionError(std::string(what) + ": bodies of different dimensions");
    return dim;
}

double product(std::span<const double> x) {
    double p = 1.0;
    for (double v : x) p *= v;
    return p;
}

}  // namespace

double integrate_piecewise(std::span<const StarSet> bodies, const PointwiseIntegrand& g) {
    const int dim = check_bodies(bodies, "integrate_piecewise");
    if (std::any_of(bodies.begin(), bodies.end(), [](const StarSet& b) { return b.is_sampler(); })) {
        throw InvalidParameter("integrate_piecewise: samplers need the Monte Carlo path");
    }
    const std::size_t k = bodies.size();
    std::vector<double> vals(k);
    CompensatedSum sum;

    std::shared_ptr<const SphereGrid> grid;
    for (const auto& b : bodies)
        if (const auto* gv = b.grid_values()) {
            grid = gv->grid;
            break;
        }
    if (grid) {
        std::vector<std::vector<double>> cell_values;
        cell_values.reserve(k);
        for (const auto& b : bodies) cell_values.push_back(values_on_grid(b, grid));
        for (std::size_t c = 0; c < grid->size(); ++c) {
            for (std::size_t i = 0; i < k; ++i) vals[i] = cell_values[i][c];
            sum += grid->cell(c).weight * g(vals);
        }
        return sum.value();
    }

    std::vector<SphericalRegion> regions;
    std::vector<std::pair<std::size_t, double>> owner;
    for (std::size_t i = 0; i < k; ++i) {
        for (const auto& t : bodies[i].polycone()->terms()) {
            regions.push_back(t.base);
            owner.emplace_back(i, t.level);
        }
    }
    if (regions.empty()) {
        std::fill(vals.begin(), vals.end(), 0.0);
        return surface_measure(dim) * g(vals);
    }
    const Refinement ref = Refinement::build(dim, regions);
    std::vector<std::vector<double>> atom_values(k, std::vector<double>(ref.atom_count(), 0.0));
    for (std::size_t r = 0; r < regions.size(); ++r)
        for (std::size_t a : ref.atoms_of(r)) atom_values[owner[r].first][a] = owner[r].second;
    for (std::size_t a = 0; a < ref.atom_count(); ++a) {
        for (std::size_t i = 0; i < k; ++i) vals[i] = atom_values[i][a];
        sum += ref.atom_measure(a) * g(vals);
    }
    return sum.value();
}

Volume monte_carlo_integral(std::span<const StarSet> bodies, const PointwiseIntegrand& g, std::size_t samples,
                            std::uint64_t seed) {
    const int dim = check_bodies(bodies, "monte_carlo_integral");
    if (samples == 0) throw DomainError("monte_carlo_integral: need at least one sample");
    std::mt19937_64 rng(seed);
    std::vector<double> vals(bodies.size());
    double mean = 0.0;
    double m2 = 0.0;
    for (std::size_t s = 1; s <= samples; ++s) {
        const Direction u = Direction::random(dim, rng);
        for (std::size_t i = 0; i < bodies.size(); ++i) vals[i] = radial_eval(bodies[i], u);
        const double x = g(vals);
        const double delta = x - mean;
        mean += delta / static_cast<double>(s);
        m2 += delta * (x - mean);
    }
    const double sigma = surface_measure(dim);
    const double stderr_ = samples > 1 ? sigma * std::sqrt(m2 / static_cast<double>(samples - 1) /
                                                           static_cast<double>(samples))
                                       : std::numeric_limits<double>::infinity();
    return Volume{sigma * mean, VolumeMethod::MonteCarlo, stderr_};
}

double radial_integral(const StarSet& l) {
    const StarSet bodies[] = {l};
    return integrate_piecewise(bodies, [](std::span<const double> x) { return x[0]; });
}

Volume monte_carlo_dmv(std::span<const StarSet> bodies, std::size_t samples, std::uint64_t seed) {
    const int dim = check_bodies(bodies, "monte_carlo_dmv");
    if (static_cast<int>(bodies.size()) != dim) {
        throw ArityError("monte_carlo_dmv: expected " + std::to_string(dim) + " bodies, got " +
                         std::to_string(bodies.size()));
    }
    Volume v = monte_carlo_integral(bodies, product, samples, seed);
    v.value /= dim;
    v.error /= dim;
    return v;
}

Volume dual_mixed_volume(std::span<const StarSet> bodies, const std::optional<MonteCarloOptions>& mc) {
    const int dim = check_bodies(bodies, "dual_mixed_volume");
    if (static_cast<int>(bodies.size()) != dim) {
        throw ArityError("dual_mixed_volume: expected " + std::to_string(dim) + " bodies, got " +
                         std::to_string(bodies.size()));
    }
    if (mc) return monte_carlo_dmv(bodies, mc->samples, mc->seed);
    if (std::any_of(bodies.begin(), bodies.end(), [](const StarSet& b) { return b.is_sampler(); })) {
        throw InvalidParameter("dual_mixed_volume: sampler bodies need Monte Carlo options (samples and seed)");
    }
    return Volume{integrate_piecewise(bodies, product) / dim, VolumeMethod::Exact, 0.0};
}

Volume volume(const StarSet& l, const std::optional<MonteCarloOptions>& mc) {
    const std::vector<StarSet> bodies(static_cast<std::size_t>(l.dim()), l);
    return dual_mixed_volume(bodies, mc);
}

// ---------------------------------------------------------------- Lutwak

LutwakExpansion::LutwakExpansion(int n, std::size_t m, std::vector<double> coefficients)
    : n_(n), m_(m), coefficients_(std::move(coefficients)) {
    std::size_t expected = 1;
    for (int i = 0; i < n_; ++i) expected *= m_;
    if (coefficients_.size() != expected) throw InvalidParameter("LutwakExpansion: wrong number of coefficients");
}

std::vector<std::size_t> LutwakExpansion::index_of(std::size_t flat) const {
    std::vector<std::size_t> idx(static_cast<std::size_t>(n_));
    for (int i = n_ - 1; i >= 0; --i) {
        idx[static_cast<std::size_t>(i)] = flat % m_;
        flat /= m_;
    }
    return idx;
}

double LutwakExpansion::coefficient(std::span<const std::size_t> index) const {
    if (index.size() != static_cast<std::size_t>(n_)) throw ArityError("LutwakExpansion: wrong multi-index length");
    std::size_t flat = 0;
    for (std::size_t i : index) {
        if (i >= m_) throw DomainError("LutwakExpansion: multi-index entry out of range");
        flat = flat * m_ + i;
    }
    return coefficients_[flat];
}

double LutwakExpansion::evaluate(std::span<const double> t) const {
    if (t.size() != m_) throw ArityError("LutwakExpansion::evaluate: expected " + std::to_string(m_) + " variables");
    CompensatedSum s;
    for (std::size_t flat = 0; flat < coefficients_.size(); ++flat) {
        double term = coefficients_[flat];
        for (std::size_t i : index_of(flat)) term *= t[i];
        s += term;
    }
    return s.value();
}

std::vector<LutwakExpansion::Monomial> LutwakExpansion::symmetric_form() const {
    std::vector<Monomial> out;
    for (std::size_t flat = 0; flat < coefficients_.size(); ++flat) {
        std::vector<std::size_t> idx = index_of(flat);
        std::vector<std::size_t> sorted = idx;
        std::sort(sorted.begin(), sorted.end());
        auto it = std::find_if(out.begin(), out.end(), [&](const Monomial& mo) { return mo.index == sorted; });
        if (it == out.end()) {
            out.push_back(Monomial{sorted, coefficients_[flat]});
        } else {
            it->coefficient += coefficients_[flat];
        }
    }
    std::sort(out.begin(), out.end(), [](const Monomial& a, const Monomial& b) { return a.index < b.index; });
    return out;
}

LutwakExpansion lutwak_expand(std::span<const StarSet> bodies) {
    const int n = check_bodies(bodies, "lutwak_expand");
    const std::size_t m = bodies.size();
    std::size_t total = 1;
    for (int i = 0; i < n; ++i) total *= m;
    std::vector<double> coeffs(total);
    LutwakExpansion shape(n, m, std::vector<double>(total, 0.0));
    std::vector<StarSet> args;
    for (std::size_t flat = 0; flat < total; ++flat) {
        args.clear();
        for (std::size_t i : shape.index_of(flat)) args.push_back(bodies[i]);
        coeffs[flat] = dual_mixed_volume(args).value;
    }
    return LutwakExpansion(n, m, std::move(coeffs));
}

LutwakCheck verify_lutwak(std::span<const StarSet> bodies, std::span<const double> t) {
    return verify_lutwak(bodies, lutwak_expand(bodies), t);
}

LutwakCheck verify_lutwak(std::span<const StarSet> bodies, const LutwakExpansion& expansion,
                          std::span<const double> t) {
    const int n = check_bodies(bodies, "verify_lutwak");
    if (t.size() != bodies.size()) throw ArityError("verify_lutwak: need one coefficient t_i per body");
    std::vector<StarSet> scaled;
    for (std::size_t i = 0; i < bodies.size(); ++i) {
        if (!std::isfinite(t[i]) || t[i] < 0.0) throw DomainError("verify_lutwak: t_i must be >= 0");
        scaled.push_back(scale(t[i], bodies[i]));
    }
    const StarSet sum = radial_sum(scaled);
    LutwakCheck c;
    c.lhs = volume(sum).value;
    c.rhs = expansion.evaluate(t);
    c.residual = std::abs(c.lhs - c.rhs);
    c.tolerance = 1e-10 * std::max(1.0, c.lhs);
    c.pass = c.residual <= c.tolerance;
    (void)n;
    return c;
}

// ---------------------------------------------------------------- cones

ConeProductCheck cone_product_identity(int dim, std::span<const Cone> cones) {
    if (static_cast<int>(cones.size()) != dim) {
        throw ArityError("cone_product_identity: expected " + std::to_string(dim) + " cones");
    }
    std::vector<StarSet> bodies;
    std::vector<Polycone> polys;
    std::vector<SphericalRegion> bases;
    double prod = 1.0;
    double min_alpha = std::numeric_limits<double>::infinity();
    for (const auto& c : cones) {
        polys.push_back(cone(dim, c.radius, c.base));
        bodies.emplace_back(polys.back());
        bases.push_back(c.base);
        prod *= c.radius;
        min_alpha = std::min(min_alpha, c.radius);
    }
    ConeProductCheck r;
    r.dmv = dual_mixed_volume(bodies).value;
    r.direct = prod / dim * intersection_measure(dim, bases);
    const StarSet meet(polycone_intersect(polys));
    r.ratio_form = prod / std::pow(min_alpha, dim) * volume(meet).value;
    r.residual_direct = std::abs(r.dmv - r.direct);
    r.residual_ratio = std::abs(r.dmv - r.ratio_form);
    return r;
}

ConeProductCheck cone_product_identity(std::span<const Polycone> cones) {
    if (cones.empty()) throw ArityError("cone_product_identity: no cones");
    std::vector<Cone> cs;
    for (const auto& p : cones) {
        if (!p.is_cone()) throw DomainError("cone_product_identity: input is not a single cone alpha * st(A)");
        cs.push_back(Cone{p.terms().front().level, p.terms().front().base});
    }
    return cone_product_identity(cones.front().dim(), cs);
}

}  // namespace dualmv
