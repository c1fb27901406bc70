#include "dualmv/functionals.hpp"

#include "dualmv/errors.hpp"
#include "dualmv/numeric.hpp"

#include <boost/math/quadrature/gauss.hpp>

#include <algorithm>
#include <array>
#include <cmath>
#include <numeric>

namespace dualmv {

// ---------------------------------------------------------------- BlackBoxFunctional

BlackBoxFunctional::BlackBoxFunctional(std::string name, int dim, Evaluator evaluator,
                                       std::shared_ptr<const SphereGrid> grid, bool serial)
    : name_(std::move(name)), dim_(dim), evaluator_(std::move(evaluator)), grid_(std::move(grid)), serial_(serial) {
    if (dim_ < 2) throw DomainError("BlackBoxFunctional: dim must be >= 2");
    if (!evaluator_) throw InvalidParameter("BlackBoxFunctional: empty evaluator");
    if (grid_ && grid_->dim() != dim_) throw DimensionError("BlackBoxFunctional: grid dimension differs from dim");
}

double BlackBoxFunctional::operator()(std::span<const StarSet> tuple) const {
    if (static_cast<int>(tuple.size()) != dim_) {
        throw ArityError(name_ + ": expected " + std::to_string(dim_) + " star sets, got " +
                         std::to_string(tuple.size()));
    }
    for (const auto& l : tuple)
        if (l.dim() != dim_) throw DimensionError(name_ + ": star set of dimension " + std::to_string(l.dim()));
    return evaluator_(tuple);
}

// ---------------------------------------------------------------- KernelFunctional

KernelFunctional::KernelFunctional(std::shared_ptr<const SphereGrid> grid, int arity,
                                   std::map<MultiIndex, double> weights)
    : KernelFunctional(std::move(grid), arity, std::move(weights), false) {}

KernelFunctional KernelFunctional::signed_kernel(std::shared_ptr<const SphereGrid> grid, int arity,
                                                 std::map<MultiIndex, double> weights) {
    return KernelFunctional(std::move(grid), arity, std::move(weights), true);
}

KernelFunctional::KernelFunctional(std::shared_ptr<const SphereGrid> grid, int arity,
                                   std::map<MultiIndex, double> weights, bool allow_negative)
    : grid_(std::move(grid)), arity_(arity) {
    if (!grid_) throw InvalidParameter("KernelFunctional: null grid");
    if (arity_ < 1) throw InvalidParameter("KernelFunctional: arity must be >= 1");
    CompensatedSum mass;
    for (auto& [k, w] : weights) {
        if (k.size() != static_cast<std::size_t>(arity_)) {
            throw InvalidParameter("KernelFunctional: multi-index of length " + std::to_string(k.size()) +
                                   ", expected " + std::to_string(arity_));
        }
        for (std::size_t c : k)
            if (c >= grid_->size()) throw InvalidParameter("KernelFunctional: cell index " + std::to_string(c) +
                                                           " out of range");
        if (!std::isfinite(w)) throw InvalidParameter("KernelFunctional: non-finite weight");
        if (w < 0.0 && !allow_negative) throw InvalidParameter("KernelFunctional: negative weight");
        if (w == 0.0) continue;
        mass += std::abs(w);
        weights_.emplace(k, w);
    }
    total_mass_ = mass.value();
}

double KernelFunctional::weight(const MultiIndex& k) const {
    const auto it = weights_.find(k);
    return it == weights_.end() ? 0.0 : it->second;
}

bool KernelFunctional::has_negative_weight() const {
    return std::any_of(weights_.begin(), weights_.end(), [](const auto& kw) { return kw.second < 0.0; });
}

double KernelFunctional::contract(std::span<const std::vector<double>> f) const {
    if (f.size() != static_cast<std::size_t>(arity_)) throw ArityError("KernelFunctional::contract: wrong arity");
    for (const auto& fi : f)
        if (fi.size() != grid_->size()) throw GridMismatch("KernelFunctional::contract: wrong number of cell values");
    CompensatedSum s;
    for (const auto& [k, w] : weights_) {
        double term = w;
        for (std::size_t i = 0; i < k.size(); ++i) term *= f[i][k[i]];
        s += term;
    }
    return s.value();
}

double KernelFunctional::evaluate(std::span<const StarSet> tuple) const {
    if (tuple.size() != static_cast<std::size_t>(arity_)) throw ArityError("KernelFunctional: wrong arity");
    std::vector<std::vector<double>> f;
    f.reserve(tuple.size());
    for (const auto& l : tuple) f.push_back(values_on_grid(l, grid_));
    return contract(f);
}

BlackBoxFunctional KernelFunctional::to_black_box(std::string name) const {
    auto self = std::make_shared<const KernelFunctional>(*this);
    return BlackBoxFunctional(std::move(name), grid_->dim(),
                              [self](std::span<const StarSet> t) { return self->evaluate(t); }, grid_);
}

// ---------------------------------------------------------------- DiagonalFunctional

DiagonalFunctional::DiagonalFunctional(std::shared_ptr<const SphereGrid> grid, int arity, std::vector<double> weights)
    : grid_(std::move(grid)), arity_(arity), weights_(std::move(weights)) {
    if (!grid_) throw InvalidParameter("DiagonalFunctional: null grid");
    if (arity_ < 1) throw InvalidParameter("DiagonalFunctional: arity must be >= 1");
    if (weights_.size() != grid_->size()) throw InvalidParameter("DiagonalFunctional: one weight per cell required");
    for (double w : weights_)
        if (!std::isfinite(w) || w < 0.0) throw InvalidParameter("DiagonalFunctional: weights must be >= 0");
}

DiagonalFunctional DiagonalFunctional::dmv_multiple(std::shared_ptr<const SphereGrid> grid, double c) {
    if (!grid) throw InvalidParameter("DiagonalFunctional::dmv_multiple: null grid");
    const int n = grid->dim();
    std::vector<double> w(grid->size());
    for (std::size_t k = 0; k < w.size(); ++k) w[k] = c * grid->cell(k).weight / n;
    return DiagonalFunctional(std::move(grid), n, std::move(w));
}

double DiagonalFunctional::total_mass() const {
    CompensatedSum s;
    for (double w : weights_) s += w;
    return s.value();
}

double DiagonalFunctional::evaluate(std::span<const StarSet> tuple) const {
    if (tuple.size() != static_cast<std::size_t>(arity_)) throw ArityError("DiagonalFunctional: wrong arity");
    std::vector<std::vector<double>> f;
    for (const auto& l : tuple) f.push_back(values_on_grid(l, grid_));
    CompensatedSum s;
    for (std::size_t k = 0; k < weights_.size(); ++k) {
        double term = weights_[k];
        for (const auto& fi : f) term *= fi[k];
        s += term;
    }
    return s.value();
}

KernelFunctional DiagonalFunctional::as_kernel() const {
    std::map<MultiIndex, double> w;
    for (std::size_t k = 0; k < weights_.size(); ++k)
        if (weights_[k] != 0.0) w.emplace(MultiIndex(static_cast<std::size_t>(arity_), k), weights_[k]);
    return KernelFunctional(grid_, arity_, std::move(w));
}

BlackBoxFunctional DiagonalFunctional::to_black_box(std::string name) const {
    auto self = std::make_shared<const DiagonalFunctional>(*this);
    return BlackBoxFunctional(std::move(name), grid_->dim(),
                              [self](std::span<const StarSet> t) { return self->evaluate(t); }, grid_);
}

// ---------------------------------------------------------------- signed extension

double extend_signed(const KernelFunctional& k, std::span<const std::vector<double>> f) { return k.contract(f); }

double extend_signed_expansion(const KernelFunctional& k, std::span<const std::vector<double>> f) {
    const std::size_t n = f.size();
    if (n != static_cast<std::size_t>(k.arity())) throw ArityError("extend_signed_expansion: wrong arity");
    std::vector<std::vector<double>> pos(n), neg(n);
    for (std::size_t i = 0; i < n; ++i) {
        pos[i].resize(f[i].size());
        neg[i].resize(f[i].size());
        for (std::size_t c = 0; c < f[i].size(); ++c) {
            pos[i][c] = std::max(f[i][c], 0.0);
            neg[i][c] = std::max(-f[i][c], 0.0);
        }
    }
    CompensatedSum s;
    std::vector<std::vector<double>> parts(n);
    for (std::size_t r = 0; r < (std::size_t{1} << n); ++r) {
        int flips = 0;
        for (std::size_t i = 0; i < n; ++i) {
            const bool negative = (r >> i) & 1U;
            parts[i] = negative ? neg[i] : pos[i];
            flips += negative ? 1 : 0;
        }
        const double term = k.contract(parts);
        s += (flips % 2 == 0) ? term : -term;
    }
    return s.value();
}

double operator_norm_bound(const KernelFunctional& k) { return k.total_mass(); }

// ---------------------------------------------------------------- random inputs

namespace {

double random_level(std::mt19937_64& rng) {
    std::uniform_real_distribution<double> u(std::log(0.25), std::log(4.0));
    return std::exp(u(rng));
}

std::vector<std::size_t> all_cells(const SphereGrid& g) {
    std::vector<std::size_t> v(g.size());
    std::iota(v.begin(), v.end(), std::size_t{0});
    return v;
}

StarSet polycone_on_cells(const std::shared_ptr<const SphereGrid>& grid, std::span<const std::size_t> cells,
                          std::mt19937_64& rng) {
    std::vector<PolyconeTerm> terms;
    terms.reserve(cells.size());
    for (std::size_t c : cells) terms.push_back(PolyconeTerm{random_level(rng), SphericalRegion::cells(grid, {c})});
    return canonicalize(grid->dim(), std::move(terms));
}

const std::shared_ptr<const SphereGrid>& require_grid(const BlackBoxFunctional& f, const CheckOptions& opt) {
    const auto& g = opt.grid ? opt.grid : f.grid();
    if (!g) throw InvalidParameter(f.name() + ": the checkers need a grid for their random inputs");
    if (g->dim() != f.dim()) throw DimensionError(f.name() + ": grid dimension differs from the functional's");
    return g;
}

void require_trials(const CheckOptions& opt) {
    if (opt.trials < 1) throw InvalidParameter("checker: trials must be >= 1");
}

Tuple with_slot(const Tuple& t, std::size_t i, StarSet l) {
    Tuple out = t;
    out[i] = std::move(l);
    return out;
}

/// Tracks the largest scaled residual and the first failing witness.
class Tracker {
public:
    Tracker(std::string property, const CheckOptions& opt) {
        report_.property = std::move(property);
        report_.tolerance = opt.tol;
    }
    /// Records |lhs - rhs| against tol * scale; returns false on failure.
    bool record(double residual, double scale, const std::function<Witness()>& witness) {
        const double r = residual / scale;
        if (!(r <= report_.max_residual)) report_.max_residual = r;
        if (r <= report_.tolerance) return true;
        report_.verdict = Verdict::Fail;
        if (!report_.witness) report_.witness = witness();
        return false;
    }
    PropertyReport finish(std::size_t trials) {
        report_.trials = trials;
        return std::move(report_);
    }

private:
    PropertyReport report_;
};

}  // namespace

StarSet cell_cone(const std::shared_ptr<const SphereGrid>& grid, std::size_t cell, double level) {
    if (!grid) throw InvalidParameter("cell_cone: null grid");
    if (cell >= grid->size()) throw DomainError("cell_cone: cell index out of range");
    return cone(grid->dim(), level, SphericalRegion::cells(grid, {cell}));
}

StarSet random_grid_polycone(const std::shared_ptr<const SphereGrid>& grid, std::mt19937_64& rng) {
    const auto pool = all_cells(*grid);
    return random_grid_polycone(grid, pool, rng);
}

StarSet random_grid_polycone(const std::shared_ptr<const SphereGrid>& grid, std::span<const std::size_t> pool,
                             std::mt19937_64& rng) {
    if (pool.empty()) throw InvalidParameter("random_grid_polycone: empty cell pool");
    const std::size_t max_count = std::min<std::size_t>(4, pool.size());
    const std::size_t count = std::uniform_int_distribution<std::size_t>(1, max_count)(rng);
    std::vector<std::size_t> chosen;
    std::sample(pool.begin(), pool.end(), std::back_inserter(chosen), count, rng);
    return polycone_on_cells(grid, chosen, rng);
}

StarSet random_dense_polycone(const std::shared_ptr<const SphereGrid>& grid, std::span<const std::size_t> pool,
                              std::mt19937_64& rng) {
    std::vector<std::size_t> chosen;
    std::bernoulli_distribution keep(0.5);
    for (std::size_t c : pool)
        if (keep(rng)) chosen.push_back(c);
    if (chosen.empty() && !pool.empty()) chosen.push_back(pool.front());
    return polycone_on_cells(grid, chosen, rng);
}

std::vector<double> random_signed_values(const SphereGrid& grid, std::mt19937_64& rng) {
    std::uniform_real_distribution<double> u(-4.0, 4.0);
    std::vector<double> v(grid.size());
    for (auto& x : v) x = u(rng);
    return v;
}

Tuple random_trial_tuple(const std::shared_ptr<const SphereGrid>& grid, int n, std::size_t trial,
                         std::mt19937_64& rng) {
    Tuple t;
    t.reserve(static_cast<std::size_t>(n));
    const auto cells = all_cells(*grid);
    const std::size_t kind = trial == 0 ? 0 : 1 + (trial - 1) % 3;
    if (kind == 2) {
        const std::size_t pool_size = std::uniform_int_distribution<std::size_t>(1, std::min<std::size_t>(4, cells.size()))(rng);
        std::vector<std::size_t> pool;
        std::sample(cells.begin(), cells.end(), std::back_inserter(pool), pool_size, rng);
        for (int i = 0; i < n; ++i) t.push_back(random_grid_polycone(grid, pool, rng));
        return t;
    }
    for (int i = 0; i < n; ++i) {
        switch (kind) {
            case 0:
                t.push_back(StarSet::ball(grid->dim(), random_level(rng)));
                break;
            case 1:
                t.push_back(random_grid_polycone(grid, cells, rng));
                break;
            default:
                t.push_back(random_dense_polycone(grid, cells, rng));
                break;
        }
    }
    return t;
}

// ---------------------------------------------------------------- checkers

std::string to_string(Verdict v) {
    switch (v) {
        case Verdict::Pass:
            return "pass";
        case Verdict::Fail:
            return "fail";
        case Verdict::Inconclusive:
            return "inconclusive";
    }
    return "unknown";
}

PropertyReport check_additive(const BlackBoxFunctional& f, const CheckOptions& opt) {
    require_trials(opt);
    const auto& grid = require_grid(f, opt);
    const int n = f.dim();
    std::mt19937_64 rng(opt.seed);
    Tracker tr("additive", opt);
    for (std::size_t trial = 0; trial < opt.trials; ++trial) {
        Tuple both = random_trial_tuple(grid, 2 * n, trial, rng);
        const Tuple l(both.begin(), both.begin() + n);
        const double base = f(l);
        for (std::size_t i = 0; i < static_cast<std::size_t>(n); ++i) {
            const StarSet& m = both[static_cast<std::size_t>(n) + i];
            const StarSet pair[] = {l[i], m};
            const Tuple summed = with_slot(l, i, radial_sum(pair));
            const Tuple other = with_slot(l, i, m);
            const double lhs = f(summed);
            const double fm = f(other);
            tr.record(std::abs(lhs - base - fm), residual_scale(lhs, std::max(std::abs(base), std::abs(fm))), [&] {
                return Witness{"F(..., L_i + M_i, ...) != F(..., L_i, ...) + F(..., M_i, ...)",
                               {summed, l, other},
                               {lhs, base, fm},
                               static_cast<int>(i),
                               lhs,
                               base + fm};
            });
        }
    }
    return tr.finish(opt.trials);
}

PropertyReport check_positive(const BlackBoxFunctional& f, const CheckOptions& opt) {
    require_trials(opt);
    const auto& grid = require_grid(f, opt);
    std::mt19937_64 rng(opt.seed);
    Tracker tr("positive", opt);
    for (std::size_t trial = 0; trial < opt.trials; ++trial) {
        const Tuple l = random_trial_tuple(grid, f.dim(), trial, rng);
        const double v = f(l);
        tr.record(std::max(0.0, -v), residual_scale(v), [&] {
            return Witness{"F < 0 on nonnegative arguments", {l}, {v}, -1, v, 0.0};
        });
    }
    return tr.finish(opt.trials);
}

PropertyReport check_increasing(const BlackBoxFunctional& f, const CheckOptions& opt) {
    require_trials(opt);
    const auto& grid = require_grid(f, opt);
    const int n = f.dim();
    std::mt19937_64 rng(opt.seed);
    Tracker tr("increasing", opt);
    for (std::size_t trial = 0; trial < opt.trials; ++trial) {
        const Tuple both = random_trial_tuple(grid, 2 * n, trial, rng);
        Tuple l(both.begin(), both.begin() + n);
        Tuple m;
        for (std::size_t i = 0; i < static_cast<std::size_t>(n); ++i) {
            const StarSet pair[] = {l[i], both[static_cast<std::size_t>(n) + i]};
            m.push_back(radial_sum(pair));
        }
        const double fl = f(l);
        const double fm = f(m);
        tr.record(std::max(0.0, fl - fm), residual_scale(fl, fm), [&] {
            return Witness{"F(L) > F(M) although rho_{L_i} <= rho_{M_i} for every i", {l, m}, {fl, fm}, -1, fl, fm};
        });
    }
    return tr.finish(opt.trials);
}

std::span<const double> homogeneity_factors() {
    static const std::array<double, 6> kFactors{0.0, 1.0 / 3.0, 1.0, 2.0, 3.5, std::exp(1.0)};
    return kFactors;
}

PropertyReport check_homogeneous(const BlackBoxFunctional& f, const CheckOptions& opt) {
    require_trials(opt);
    const auto& grid = require_grid(f, opt);
    std::mt19937_64 rng(opt.seed);
    Tracker tr("homogeneous", opt);
    for (std::size_t trial = 0; trial < opt.trials; ++trial) {
        const Tuple l = random_trial_tuple(grid, f.dim(), trial, rng);
        const double base = f(l);
        for (std::size_t i = 0; i < l.size(); ++i) {
            for (double t : homogeneity_factors()) {
                const Tuple scaled = with_slot(l, i, scale(t, l[i]));
                const double lhs = f(scaled);
                tr.record(std::abs(lhs - t * base), residual_scale(lhs, t * base), [&] {
                    return Witness{"F(..., t L_i, ...) != t F(..., L_i, ...) for t = " + std::to_string(t),
                                   {scaled, l},
                                   {lhs, base},
                                   static_cast<int>(i),
                                   lhs,
                                   t * base};
                });
            }
        }
    }
    return tr.finish(opt.trials);
}

PropertyReport check_vanishing(const BlackBoxFunctional& f, const CheckOptions& opt) {
    require_trials(opt);
    const auto& grid = require_grid(f, opt);
    const int n = f.dim();
    std::mt19937_64 rng(opt.seed);
    Tracker tr("vanishing", opt);
    if (grid->size() < 2) {
        PropertyReport r = tr.finish(0);
        r.verdict = Verdict::Inconclusive;
        r.note = "a grid with one cell has no disjoint cell sets";
        return r;
    }
    std::vector<std::pair<std::size_t, std::size_t>> pairs;
    for (std::size_t i = 0; i < static_cast<std::size_t>(n); ++i)
        for (std::size_t j = i + 1; j < static_cast<std::size_t>(n); ++j) pairs.emplace_back(i, j);
    auto cells = all_cells(*grid);
    for (std::size_t trial = 0; trial < opt.trials; ++trial) {
        const auto [i, j] = pairs[trial % pairs.size()];
        std::shuffle(cells.begin(), cells.end(), rng);
        const std::size_t split = std::uniform_int_distribution<std::size_t>(1, cells.size() - 1)(rng);
        const std::span<const std::size_t> s(cells.data(), split);
        const std::span<const std::size_t> rest(cells.data() + split, cells.size() - split);
        const bool dense = trial % 2 == 1;
        Tuple l;
        for (std::size_t k = 0; k < static_cast<std::size_t>(n); ++k) {
            if (k == i) {
                l.push_back(dense ? random_dense_polycone(grid, s, rng) : random_grid_polycone(grid, s, rng));
            } else if (k == j) {
                l.push_back(dense ? random_dense_polycone(grid, rest, rng) : random_grid_polycone(grid, rest, rng));
            } else {
                l.push_back(dense ? random_dense_polycone(grid, cells, rng) : StarSet::ball(n, random_level(rng)));
            }
        }
        const double v = f(l);
        tr.record(std::abs(v), 1.0, [&] {
            return Witness{"F != 0 although slots " + std::to_string(i) + " and " + std::to_string(j) +
                               " have disjoint bases",
                           {l},
                           {v},
                           static_cast<int>(j),
                           v,
                           0.0};
        });
    }
    return tr.finish(opt.trials);
}

PropertyReport check_rotation_invariant(const BlackBoxFunctional& f, const CheckOptions& opt) {
    require_trials(opt);
    const auto& grid = opt.grid ? opt.grid : f.grid();
    Tracker tr("rotation-invariant", opt);
    if (!grid) {
        PropertyReport r = tr.finish(0);
        r.verdict = Verdict::Inconclusive;
        r.note = "no grid, so no exact symmetries to test";
        return r;
    }
    if (grid->dim() != f.dim()) throw DimensionError(f.name() + ": grid dimension differs from the functional's");
    const auto symmetries = grid_symmetries(*grid);
    if (symmetries.size() <= 1) {
        PropertyReport r = tr.finish(0);
        r.verdict = Verdict::Inconclusive;
        r.note = "the grid symmetry group is trivial";
        return r;
    }
    std::mt19937_64 rng(opt.seed);
    for (std::size_t trial = 0; trial < opt.trials; ++trial) {
        const Tuple l = random_trial_tuple(grid, f.dim(), trial, rng);
        const double base = f(l);
        for (std::size_t s = 1; s < symmetries.size(); ++s) {
            Tuple rotated;
            for (const auto& b : l) rotated.push_back(rotate_starset(symmetries[s].rotation, b));
            const double v = f(rotated);
            const bool ok = tr.record(std::abs(v - base), residual_scale(v, base), [&] {
                return Witness{"F(phi L) != F(L) for grid symmetry " + std::to_string(s), {rotated, l}, {v, base},
                               -1, v, base};
            });
            if (!ok) break;
        }
    }
    return tr.finish(opt.trials);
}

// ---------------------------------------------------------------- gallery

std::vector<double> cell_integrals(const StarSet& m, const std::shared_ptr<const SphereGrid>& grid) {
    if (!grid) throw InvalidParameter("cell_integrals: null grid");
    if (m.dim() != grid->dim()) throw DimensionError("cell_integrals: body and grid dimensions differ");
    std::vector<double> out(grid->size());
    if (!m.is_sampler()) {
        const auto v = values_on_grid(m, grid);
        for (std::size_t k = 0; k < out.size(); ++k) out[k] = v[k] * grid->cell(k).weight;
        return out;
    }
    using Gauss = boost::math::quadrature::gauss<double, 20>;
    for (std::size_t k = 0; k < out.size(); ++k) {
        const CellBox& b = grid->cell(k).box;
        if (grid->dim() == 2) {
            out[k] = Gauss::integrate([&](double phi) { return radial_eval(m, Direction::from_angle(phi)); },
                                      b.phi_lo, b.phi_hi);
        } else {
            out[k] = Gauss::integrate(
                [&](double theta) {
                    const double inner = Gauss::integrate(
                        [&](double phi) { return radial_eval(m, Direction::from_spherical(theta, phi)); }, b.phi_lo,
                        b.phi_hi);
                    return inner * std::sin(theta);
                },
                b.theta_lo, b.theta_hi);
        }
    }
    return out;
}

std::vector<std::string> gallery_names() {
    return {"intersection-volume", "product-of-integrals", "weighted-by-M", "dmv", "neg-dmv"};
}

BlackBoxFunctional gallery(const std::string& name, const GalleryParams& params) {
    const int n = params.grid ? params.grid->dim() : params.dim;
    if (name == "intersection-volume") {
        return BlackBoxFunctional(name, n, [](std::span<const StarSet> t) { return volume(radial_min(t)).value; },
                                  params.grid);
    }
    if (name == "product-of-integrals") {
        return BlackBoxFunctional(name, n,
                                  [](std::span<const StarSet> t) {
                                      double p = 1.0;
                                      for (const auto& l : t) p *= radial_integral(l);
                                      return p;
                                  },
                                  params.grid);
    }
    if (name == "dmv" || name == "neg-dmv") {
        const double c = name == "dmv" ? params.c : -params.c;
        return BlackBoxFunctional(name, n,
                                  [c](std::span<const StarSet> t) { return c * dual_mixed_volume(t).value; },
                                  params.grid);
    }
    if (name == "weighted-by-M") {
        if (!params.grid) throw InvalidParameter("weighted-by-M: needs a grid");
        const StarSet m = params.m ? *params.m
                                   : StarSet::sampler(
                                         n, [](const Direction& u) { return 1.0 + 0.5 * u[0]; }, 1.5, true);
        if (m.dim() != n) throw DimensionError("weighted-by-M: M has the wrong dimension");
        std::vector<double> w = cell_integrals(m, params.grid);
        double lo = w[0] / params.grid->cell(0).weight;
        double hi = lo;
        for (std::size_t k = 1; k < w.size(); ++k) {
            const double d = w[k] / params.grid->cell(k).weight;
            lo = std::min(lo, d);
            hi = std::max(hi, d);
        }
        if (hi - lo <= 1e-12 * std::max(1.0, hi)) {
            throw InvalidParameter("weighted-by-M: M must not be a ball centered at the origin");
        }
        return DiagonalFunctional(params.grid, n, std::move(w)).to_black_box(name);
    }
    throw InvalidParameter("unknown gallery functional '" + name + "'");
}

}  // namespace dualmv
