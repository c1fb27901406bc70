#include "dualmv/characterize.hpp"

#include "dualmv/errors.hpp"
#include "dualmv/numeric.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace dualmv {

namespace {

Tuple indicator_tuple(const std::vector<StarSet>& cones, const MultiIndex& k) {
    Tuple t;
    t.reserve(k.size());
    for (std::size_t c : k) t.push_back(cones[c]);
    return t;
}

std::vector<std::size_t> random_cell_subset(const SphereGrid& g, std::mt19937_64& rng) {
    std::vector<std::size_t> out;
    std::bernoulli_distribution keep(0.5);
    for (std::size_t k = 0; k < g.size(); ++k)
        if (keep(rng)) out.push_back(k);
    return out;
}

}  // namespace

// ---------------------------------------------------------------- recovery

RecoveredMeasure recover_measure(const BlackBoxFunctional& f, const std::shared_ptr<const SphereGrid>& grid,
                                 const RecoveryOptions& opt) {
    if (!grid) throw InvalidParameter("recover_measure: null grid");
    if (grid->dim() != f.dim()) throw DimensionError("recover_measure: grid dimension differs from the functional's");
    const int n = f.dim();
    const std::size_t cells = grid->size();

    std::size_t count = cells;
    if (!opt.diagonal_only) {
        count = 1;
        for (int i = 0; i < n; ++i) {
            if (count > opt.budget / cells) {
                throw BudgetExceeded("recover_measure: " + std::to_string(cells) + "^" + std::to_string(n) +
                                     " evaluations exceed the budget of " + std::to_string(opt.budget));
            }
            count *= cells;
        }
    }
    if (count > opt.budget) {
        throw BudgetExceeded("recover_measure: " + std::to_string(count) + " evaluations exceed the budget of " +
                             std::to_string(opt.budget));
    }

    std::vector<StarSet> cones;
    cones.reserve(cells);
    for (std::size_t k = 0; k < cells; ++k) cones.push_back(cell_cone(grid, k));

    std::map<MultiIndex, double> weights;
    MultiIndex k(static_cast<std::size_t>(n), 0);
    for (std::size_t e = 0; e < count; ++e) {
        if (opt.diagonal_only) {
            std::fill(k.begin(), k.end(), e);
        } else {
            std::size_t rest = e;
            for (int i = n - 1; i >= 0; --i) {
                k[static_cast<std::size_t>(i)] = rest % cells;
                rest /= cells;
            }
        }
        const double w = f(indicator_tuple(cones, k));
        if (w != 0.0) weights.emplace(k, w);
    }

    RecoveredMeasure out{KernelFunctional::signed_kernel(grid, n, std::move(weights))};
    out.evaluations = count;
    out.diagonal_only = opt.diagonal_only;
    out.negative_weights = out.kernel.has_negative_weight();

    std::mt19937_64 rng(opt.seed);
    for (std::size_t trial = 0; trial < opt.validation_trials; ++trial) {
        const Tuple t = random_trial_tuple(grid, n, trial, rng);
        const double expected = f(t);
        const double got = out.kernel.evaluate(t);
        out.residual = std::max(out.residual, std::abs(got - expected) / residual_scale(expected));
    }
    out.validation_trials = opt.validation_trials;
    return out;
}

DiagonalityResult diagonality_test(const KernelFunctional& k, double tol) {
    DiagonalityResult r;
    r.tolerance = tol;
    CompensatedSum off;
    double worst = 0.0;
    std::vector<double> diag(k.grid()->size(), 0.0);
    for (const auto& [idx, w] : k.weights()) {
        const bool constant = std::all_of(idx.begin(), idx.end(), [&](std::size_t c) { return c == idx.front(); });
        if (constant) {
            diag[idx.front()] = w;
            continue;
        }
        off += std::abs(w);
        if (std::abs(w) > worst) {
            worst = std::abs(w);
            r.worst = idx;
        }
    }
    r.off_diagonal_mass = off.value();
    r.total_mass = k.total_mass();
    r.verdict = r.off_diagonal_mass <= tol * r.total_mass ? Verdict::Pass : Verdict::Fail;
    if (r.verdict == Verdict::Pass) r.projected = std::move(diag);
    return r;
}

DiagonalityResult diagonality_test(const RecoveredMeasure& m, double tol) { return diagonality_test(m.kernel, tol); }

UniformityResult uniformity_test(const std::shared_ptr<const SphereGrid>& grid, std::span<const double> weights,
                                 double tol) {
    if (!grid) throw InvalidParameter("uniformity_test: null grid");
    if (weights.size() != grid->size()) throw InvalidParameter("uniformity_test: one weight per cell required");
    UniformityResult r;
    r.tolerance = tol;
    r.density.resize(weights.size());
    CompensatedSum sum;
    double lo = std::numeric_limits<double>::infinity();
    double hi = -lo;
    for (std::size_t k = 0; k < weights.size(); ++k) {
        r.density[k] = weights[k] / grid->cell(k).weight;
        sum += r.density[k];
        lo = std::min(lo, r.density[k]);
        hi = std::max(hi, r.density[k]);
    }
    r.lambda = sum.value() / static_cast<double>(weights.size());
    r.spread = hi - lo;
    double far = -1.0;
    for (std::size_t k = 0; k < r.density.size(); ++k) {
        if (std::abs(r.density[k] - r.lambda) > far) {
            far = std::abs(r.density[k] - r.lambda);
            r.worst_cell = k;
        }
    }
    if (grid_symmetries(*grid).size() <= 1) {
        r.verdict = Verdict::Inconclusive;
        r.note = "the grid symmetry group is trivial";
        return r;
    }
    r.verdict = r.spread <= tol * std::abs(r.lambda) ? Verdict::Pass : Verdict::Fail;
    return r;
}

UniformityResult uniformity_test(const DiagonalFunctional& d, double tol) {
    return uniformity_test(d.grid(), d.weights(), tol);
}

ConstantEstimate estimate_constant(const BlackBoxFunctional& f, const CheckOptions& opt) {
    if (opt.trials < 2) throw InvalidParameter("estimate_constant: trials must be >= 2");
    const auto& grid = opt.grid ? opt.grid : f.grid();
    if (!grid) throw InvalidParameter("estimate_constant: needs a grid for its random inputs");
    std::mt19937_64 rng(opt.seed);
    std::vector<Tuple> tuples;
    tuples.reserve(opt.trials);
    for (std::size_t trial = 0; trial < opt.trials; ++trial) tuples.push_back(random_trial_tuple(grid, f.dim(), trial, rng));
    return estimate_constant(f, tuples);
}

ConstantEstimate estimate_constant(const BlackBoxFunctional& f, std::span<const Tuple> tuples) {
    ConstantEstimate est;
    CompensatedSum sum;
    double lo = std::numeric_limits<double>::infinity();
    double hi = -lo;
    for (std::size_t trial = 0; trial < tuples.size(); ++trial) {
        const double v = dual_mixed_volume(tuples[trial]).value;
        if (!(v > 0.0)) continue;
        const double fv = f(tuples[trial]);
        const double ratio = fv / v;
        est.series.push_back(RatioSample{trial, fv, v, ratio});
        sum += ratio;
        lo = std::min(lo, ratio);
        hi = std::max(hi, ratio);
    }
    if (est.series.empty()) throw DegenerateSample("estimate_constant: every sampled tuple had zero dual mixed volume");
    est.c = sum.value() / static_cast<double>(est.series.size());
    if (hi == lo) {
        est.spread = 0.0;
    } else {
        est.spread = est.c == 0.0 ? std::numeric_limits<double>::infinity() : (hi - lo) / std::abs(est.c);
    }
    return est;
}

// ---------------------------------------------------------------- characterize

std::string to_string(Conclusion c) {
    switch (c) {
        case Conclusion::GeneralKernel:
            return "general-kernel";
        case Conclusion::DiagonalMeasure:
            return "diagonal-measure";
        case Conclusion::CTimesDmv:
            return "c-times-dmv";
        case Conclusion::HypothesisViolated:
            return "hypothesis-violated";
    }
    return "unknown";
}

const PropertyReport* CharacterizationReport::check(const std::string& property) const {
    for (const auto& c : checks)
        if (c.property == property) return &c;
    return nullptr;
}

CharacterizationReport characterize(const BlackBoxFunctional& f, const std::shared_ptr<const SphereGrid>& grid,
                                    const CharacterizeOptions& opt) {
    if (!grid) throw InvalidParameter("characterize: null grid");
    CheckOptions check = opt.check;
    check.grid = grid;
    CharacterizationReport rep;
    rep.functional = f.name();
    rep.grid = grid->id();

    const auto violated = [&rep](const PropertyReport& p) {
        rep.conclusion = Conclusion::HypothesisViolated;
        rep.culprit = p.property;
        return rep;
    };

    rep.checks.push_back(check_additive(f, check));
    if (rep.checks.back().verdict == Verdict::Fail) return violated(rep.checks.back());
    rep.checks.push_back(opt.real_valued ? check_increasing(f, check) : check_positive(f, check));
    if (rep.checks.back().verdict == Verdict::Fail) return violated(rep.checks.back());

    RecoveryOptions rec = opt.recovery;
    if (opt.test_vanishing) {
        rep.checks.push_back(check_vanishing(f, check));
        if (rep.checks.back().verdict == Verdict::Fail) return violated(rep.checks.back());
        rec.diagonal_only = rep.checks.back().verdict == Verdict::Pass;
    } else {
        rec.diagonal_only = false;
    }
    rep.recovered = recover_measure(f, grid, rec);
    rep.diagonality = diagonality_test(*rep.recovered, opt.diagonality_tol);
    if (!opt.test_vanishing) {
        rep.conclusion = Conclusion::GeneralKernel;
        rep.note = "vanishing not tested; representation by a kernel on the product of spheres";
        return rep;
    }

    rep.conclusion = Conclusion::DiagonalMeasure;
    if (!opt.test_rotation) {
        rep.note = "rotation invariance not tested";
        return rep;
    }
    rep.checks.push_back(check_rotation_invariant(f, check));
    if (rep.checks.back().verdict != Verdict::Pass) {
        rep.note = rep.checks.back().verdict == Verdict::Fail ? "not rotation invariant; the diagonal measure is not uniform"
                                                               : "rotation invariance inconclusive: " +
                                                                     rep.checks.back().note;
        return rep;
    }

    std::vector<double> diag = rep.diagonality->projected.value_or(std::vector<double>(grid->size(), 0.0));
    rep.uniformity = uniformity_test(grid, diag, opt.uniformity_tol);
    rep.constant = estimate_constant(f, check);
    if (rep.uniformity->verdict != Verdict::Pass) {
        rep.note = "recovered diagonal density is not constant";
        return rep;
    }
    if (!(rep.constant->spread <= opt.spread_tol)) {
        rep.note = "ratio F / V~ is not constant across trials";
        return rep;
    }
    if (rep.constant->c < -opt.check.tol) {
        rep.note = "negative constant";
        return rep;
    }
    rep.conclusion = Conclusion::CTimesDmv;
    return rep;
}

// ---------------------------------------------------------------- valuation

bool ValuationReport::pass() const {
    const auto ok = [](const ValuationCheck& c) { return c.verdict != Verdict::Fail; };
    return ok(valuation) && ok(empty) && ok(rotation) && ok(proportional) && ok(volume);
}

ValuationReport valuation_pipeline(const BlackBoxFunctional& f, const std::shared_ptr<const SphereGrid>& grid,
                                   const ValuationOptions& opt) {
    if (!grid) throw InvalidParameter("valuation_pipeline: null grid");
    if (grid->dim() != f.dim()) throw DimensionError("valuation_pipeline: grid dimension differs from the functional's");
    const int n = f.dim();
    std::mt19937_64 rng(opt.seed);
    ValuationReport rep;
    rep.functional = f.name();
    rep.grid = grid->id();

    const auto mu = [&](std::vector<std::size_t> cells) {
        const StarSet s = star_hull(n, SphericalRegion::cells(grid, std::move(cells)));
        return f(Tuple(static_cast<std::size_t>(n), s));
    };
    const auto finish = [](ValuationCheck& c) {
        c.verdict = c.max_residual <= c.tolerance ? Verdict::Pass : Verdict::Fail;
    };

    rep.valuation = {"valuation", Verdict::Pass, 0.0, opt.valuation_tol, opt.pairs};
    std::vector<std::vector<std::size_t>> samples;
    for (std::size_t p = 0; p < opt.pairs; ++p) {
        auto a = random_cell_subset(*grid, rng);
        auto b = random_cell_subset(*grid, rng);
        std::vector<std::size_t> uni, inter;
        std::set_union(a.begin(), a.end(), b.begin(), b.end(), std::back_inserter(uni));
        std::set_intersection(a.begin(), a.end(), b.begin(), b.end(), std::back_inserter(inter));
        const double ma = mu(a);
        const double mb = mu(b);
        const double lhs = mu(uni) + mu(inter);
        rep.valuation.max_residual =
            std::max(rep.valuation.max_residual, std::abs(lhs - ma - mb) / residual_scale(lhs, ma + mb));
        samples.push_back(std::move(a));
    }
    finish(rep.valuation);

    rep.empty = {"empty", Verdict::Pass, std::abs(mu({})), opt.valuation_tol, 1};
    finish(rep.empty);

    rep.rotation = {"rotation", Verdict::Pass, 0.0, opt.valuation_tol, samples.size()};
    const auto symmetries = grid_symmetries(*grid);
    if (symmetries.size() <= 1) {
        rep.rotation.verdict = Verdict::Inconclusive;
    } else {
        for (const auto& a : samples) {
            const double base = mu(a);
            for (std::size_t s = 1; s < symmetries.size(); ++s) {
                std::vector<std::size_t> image;
                for (std::size_t k : a) image.push_back(symmetries[s].permutation[k]);
                std::sort(image.begin(), image.end());
                const double v = mu(image);
                rep.rotation.max_residual =
                    std::max(rep.rotation.max_residual, std::abs(v - base) / residual_scale(v, base));
            }
        }
        finish(rep.rotation);
    }

    rep.density.resize(grid->size());
    CompensatedSum dsum;
    double lo = std::numeric_limits<double>::infinity();
    double hi = -lo;
    for (std::size_t k = 0; k < grid->size(); ++k) {
        rep.density[k] = mu({k}) / grid->cell(k).weight;
        dsum += rep.density[k];
        lo = std::min(lo, rep.density[k]);
        hi = std::max(hi, rep.density[k]);
    }
    rep.lambda = dsum.value() / static_cast<double>(grid->size());
    rep.proportional = {"proportional", Verdict::Pass, (hi - lo) / std::max(1.0, std::abs(rep.lambda)),
                        opt.density_tol, grid->size()};
    finish(rep.proportional);

    CheckOptions copt;
    copt.trials = std::max<std::size_t>(opt.polycones, 2);
    copt.seed = opt.seed;
    copt.grid = grid;
    const ConstantEstimate est = estimate_constant(f, copt);
    rep.c = est.c;
    rep.c_spread = est.spread;
    rep.consistency = std::abs(rep.c - n * rep.lambda);

    rep.volume = {"volume", Verdict::Pass, 0.0, opt.volume_tol, opt.polycones};
    for (std::size_t t = 0; t < opt.polycones; ++t) {
        const StarSet l = random_trial_tuple(grid, 1, t, rng).front();
        const double fv = f(Tuple(static_cast<std::size_t>(n), l));
        const double pred = rep.c * volume(l).value;
        rep.volume.max_residual = std::max(rep.volume.max_residual, std::abs(fv - pred) / residual_scale(fv, pred));
    }
    finish(rep.volume);

    std::uniform_real_distribution<double> log_level(std::log(0.25), std::log(4.0));
    for (std::size_t t = 0; t < opt.cones; ++t) {
        std::vector<Cone> cones;
        Tuple bodies;
        for (int i = 0; i < n; ++i) {
            auto cells = random_cell_subset(*grid, rng);
            if (cells.empty()) cells.push_back(0);
            cones.push_back(Cone{std::exp(log_level(rng)), SphericalRegion::cells(grid, std::move(cells))});
            bodies.push_back(cone(n, cones.back().radius, cones.back().base));
        }
        const ConeProductCheck geo = cone_product_identity(n, cones);
        const double fv = f(bodies);
        const double direct = rep.c * geo.direct;
        const double ratio = rep.c * geo.ratio_form;
        rep.cone_residual_direct =
            std::max(rep.cone_residual_direct, std::abs(fv - direct) / residual_scale(fv, direct));
        rep.cone_residual_ratio = std::max(rep.cone_residual_ratio, std::abs(fv - ratio) / residual_scale(fv, ratio));
    }
    rep.cone_trials = opt.cones;
    return rep;
}

}  // namespace dualmv
