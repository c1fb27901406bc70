#include "dualmv/cli.hpp"

#include "dualmv/characterize.hpp"
#include "dualmv/errors.hpp"
#include "dualmv/io.hpp"

#include <CLI11.hpp>

#include <cmath>
#include <fstream>
#include <optional>
#include <ostream>
#include <sstream>

namespace dualmv::cli {

namespace {

using io::InputError;
using io::Json;

constexpr int kOk = 0;
constexpr int kCheckFailed = 1;
constexpr int kUsage = 2;

struct RunConfig {
    std::string bodies;
    std::string functional;
    std::string grid;
    std::optional<double> tol;
    std::size_t trials = 200;
    std::optional<std::uint64_t> seed;
    std::string out;
    std::string format = "json";
    std::string plot;
    std::vector<double> t;
    std::optional<std::size_t> mc;
    std::string checks;
    std::vector<std::string> params;
    bool real_valued = false;
    bool diagonal_only = false;
    std::size_t budget = 1'000'000;
};

struct Output {
    Json report;
    std::optional<Series> series{};
    int code = kOk;
};

std::uint64_t require_seed(const RunConfig& cfg, const std::string& what) {
    if (!cfg.seed) throw InputError("--seed: required for " + what);
    return *cfg.seed;
}

std::vector<std::string> split(const std::string& s, char sep) {
    std::vector<std::string> out;
    std::stringstream ss(s);
    std::string item;
    while (std::getline(ss, item, sep))
        if (!item.empty()) out.push_back(item);
    return out;
}

std::shared_ptr<const SphereGrid> grid_option(const RunConfig& cfg, io::GridCache& grids) {
    if (cfg.grid.empty()) return nullptr;
    try {
        return grids.get(GridSpec::parse(cfg.grid));
    } catch (const Error& e) {
        throw InputError(std::string("--grid: ") + e.what());
    }
}

std::vector<StarSet> load_bodies(const RunConfig& cfg, io::GridCache& grids) {
    if (cfg.bodies.empty()) throw InputError("--bodies: required");
    return io::bodies_from_json(io::parse_file(cfg.bodies), grids);
}

BlackBoxFunctional load_functional(const RunConfig& cfg, io::GridCache& grids,
                                   std::shared_ptr<const SphereGrid>& grid) {
    if (cfg.functional.empty()) throw InputError("--functional: required");
    grid = grid_option(cfg, grids);
    const std::string prefix = "gallery:";
    if (cfg.functional.rfind(prefix, 0) == 0) {
        if (!grid) throw InputError("--grid: required for gallery functionals");
        GalleryParams p;
        p.grid = grid;
        for (const auto& kv : cfg.params) {
            const auto eq = kv.find('=');
            if (eq == std::string::npos) throw InputError("--param: expected key=value, got '" + kv + "'");
            const std::string key = kv.substr(0, eq);
            const std::string value = kv.substr(eq + 1);
            if (key == "c") {
                try {
                    p.c = std::stod(value);
                } catch (const std::exception&) {
                    throw InputError("--param c: not a number");
                }
            } else if (key == "M") {
                p.m = io::star_set_from_json(io::parse_file(value), grids, "M");
            } else {
                throw InputError("--param: unknown key '" + key + "'");
            }
        }
        try {
            return gallery(cfg.functional.substr(prefix.size()), p);
        } catch (const InvalidParameter& e) {
            throw InputError(std::string("--functional: ") + e.what());
        }
    }
    const Json j = io::parse_file(cfg.functional);
    BlackBoxFunctional f = io::functional_from_json(j, grids, cfg.functional);
    if (grid && !same_grid(*grid, *f.grid())) throw InputError("--grid: differs from the grid of the functional file");
    grid = f.grid();
    return f;
}

CheckOptions check_options(const RunConfig& cfg, const std::shared_ptr<const SphereGrid>& grid,
                           const std::string& what) {
    CheckOptions o;
    o.trials = cfg.trials;
    o.seed = require_seed(cfg, what);
    if (cfg.tol) o.tol = *cfg.tol;
    o.grid = grid;
    if (o.trials < 1) throw InputError("--trials: must be >= 1");
    return o;
}

Series density_series(const SphereGrid& g, std::span<const double> weights) {
    Series s{{"cell", "sigma", "weight", "density"}, {}};
    for (std::size_t k = 0; k < g.size(); ++k) {
        const double sigma = g.cell(k).weight;
        s.rows.push_back({static_cast<double>(k), sigma, weights[k], weights[k] / sigma});
    }
    return s;
}

Series ratio_series(const ConstantEstimate& c) {
    Series s{{"trial", "F", "dmv", "ratio"}, {}};
    for (const auto& r : c.series) s.rows.push_back({static_cast<double>(r.trial), r.f, r.dmv, r.ratio});
    return s;
}

// ---------------------------------------------------------------- subcommands

Output cmd_compute(const RunConfig& cfg) {
    io::GridCache grids;
    std::vector<StarSet> bodies = load_bodies(cfg, grids);
    if (const auto grid = grid_option(cfg, grids)) {
        for (auto& b : bodies)
            if (!b.is_sampler()) b = StarSet::on_grid(grid, values_on_grid(b, grid));
    }
    std::optional<MonteCarloOptions> mc;
    if (cfg.mc) mc = MonteCarloOptions{*cfg.mc, require_seed(cfg, "Monte Carlo estimation")};
    const Volume v = bodies.size() == 1 ? volume(bodies.front(), mc) : dual_mixed_volume(bodies, mc);
    return Output{io::to_json(v)};
}

Output cmd_lutwak(const RunConfig& cfg) {
    io::GridCache grids;
    const std::vector<StarSet> bodies = load_bodies(cfg, grids);
    if (cfg.t.size() != bodies.size()) {
        throw InputError("--t: expected " + std::to_string(bodies.size()) + " coefficients, one per body");
    }
    const LutwakExpansion e = lutwak_expand(bodies);
    const LutwakCheck c = verify_lutwak(bodies, e, cfg.t);
    Json j = io::to_json(e);
    const Json check = io::to_json(c);
    for (const auto& [k, v] : check.items()) j[k] = v;
    return Output{j, std::nullopt, c.pass ? kOk : kCheckFailed};
}

Output cmd_audit(const RunConfig& cfg) {
    io::GridCache grids;
    std::shared_ptr<const SphereGrid> grid;
    const BlackBoxFunctional f = load_functional(cfg, grids, grid);
    const CheckOptions o = check_options(cfg, grid, "audit");
    const std::string list = cfg.checks.empty() ? "additive,positive,increasing,homogeneous,vanishing,rotation" : cfg.checks;
    Json j;
    j["functional"] = f.name();
    j["grid"] = grid->id();
    j["checks"] = Json::array();
    bool ok = true;
    for (const auto& name : split(list, ',')) {
        PropertyReport r;
        if (name == "additive") {
            r = check_additive(f, o);
        } else if (name == "positive") {
            r = check_positive(f, o);
        } else if (name == "increasing") {
            r = check_increasing(f, o);
        } else if (name == "homogeneous") {
            r = check_homogeneous(f, o);
        } else if (name == "vanishing") {
            r = check_vanishing(f, o);
        } else if (name == "rotation") {
            r = check_rotation_invariant(f, o);
        } else {
            throw InputError("--checks: unknown check '" + name + "'");
        }
        ok = ok && r.verdict != Verdict::Fail;
        j["checks"].push_back(io::to_json(r));
    }
    j["pass"] = ok;
    return Output{j, std::nullopt, ok ? kOk : kCheckFailed};
}

Output cmd_characterize(const RunConfig& cfg) {
    io::GridCache grids;
    std::shared_ptr<const SphereGrid> grid;
    const BlackBoxFunctional f = load_functional(cfg, grids, grid);
    CharacterizeOptions o;
    o.check = check_options(cfg, grid, "characterize");
    o.real_valued = cfg.real_valued;
    o.recovery.budget = cfg.budget;
    o.recovery.seed = o.check.seed;
    if (!cfg.checks.empty()) {
        const auto names = split(cfg.checks, ',');
        for (const auto& n : names)
            if (n != "additive" && n != "positive" && n != "increasing" && n != "vanishing" && n != "rotation") {
                throw InputError("--checks: unknown check '" + n + "'");
            }
        o.test_vanishing = std::find(names.begin(), names.end(), "vanishing") != names.end();
        o.test_rotation = std::find(names.begin(), names.end(), "rotation") != names.end();
    }
    const CharacterizationReport r = characterize(f, grid, o);
    Output out{io::to_json(r)};
    const bool failed = std::any_of(r.checks.begin(), r.checks.end(),
                                    [](const PropertyReport& p) { return p.verdict == Verdict::Fail; });
    out.code = failed || r.conclusion == Conclusion::HypothesisViolated ? kCheckFailed : kOk;
    if (r.constant) {
        out.series = ratio_series(*r.constant);
    } else if (r.diagonality && r.diagonality->projected) {
        out.series = density_series(*grid, *r.diagonality->projected);
    }
    return out;
}

Output cmd_valuation(const RunConfig& cfg) {
    io::GridCache grids;
    std::shared_ptr<const SphereGrid> grid;
    const BlackBoxFunctional f = load_functional(cfg, grids, grid);
    ValuationOptions o;
    o.seed = require_seed(cfg, "valuation");
    const ValuationReport r = valuation_pipeline(f, grid, o);
    Output out{io::to_json(r)};
    std::vector<double> mu(r.density.size());
    for (std::size_t k = 0; k < mu.size(); ++k) mu[k] = r.density[k] * grid->cell(k).weight;
    out.series = density_series(*grid, mu);
    out.code = r.pass() ? kOk : kCheckFailed;
    return out;
}

Output cmd_recover(const RunConfig& cfg) {
    io::GridCache grids;
    std::shared_ptr<const SphereGrid> grid;
    const BlackBoxFunctional f = load_functional(cfg, grids, grid);
    RecoveryOptions o;
    o.budget = cfg.budget;
    o.diagonal_only = cfg.diagonal_only;
    o.seed = require_seed(cfg, "recover-measure validation");
    const RecoveredMeasure m = recover_measure(f, grid, o);
    const DiagonalityResult d = diagonality_test(m, cfg.tol.value_or(1e-9));
    Json j;
    j["functional"] = f.name();
    j["grid"] = grid->id();
    j["recovered"] = io::to_json(m);
    j["diagonality"] = io::to_json(d);
    Output out{j};
    std::vector<double> diag(grid->size(), 0.0);
    for (std::size_t k = 0; k < diag.size(); ++k) diag[k] = m.kernel.weight(MultiIndex(static_cast<std::size_t>(f.dim()), k));
    out.series = density_series(*grid, diag);
    return out;
}

Output cmd_counterexamples(const RunConfig& cfg) {
    io::GridCache grids;
    const auto grid = grid_option(cfg, grids);
    if (!grid) throw InputError("--grid: required");
    const CheckOptions o = check_options(cfg, grid, "counterexamples");
    const std::pair<const char*, const char*> designated[] = {
        {"intersection-volume", "additive"},
        {"product-of-integrals", "vanishing"},
        {"weighted-by-M", "rotation-invariant"},
    };
    Json j;
    j["grid"] = grid->id();
    j["examples"] = Json::array();
    bool all = true;
    for (const auto& [name, culprit] : designated) {
        GalleryParams p;
        p.grid = grid;
        const BlackBoxFunctional f = gallery(name, p);
        const PropertyReport reports[] = {check_additive(f, o), check_vanishing(f, o), check_rotation_invariant(f, o)};
        Json e;
        e["functional"] = name;
        e["designated"] = culprit;
        e["checks"] = Json::array();
        bool exact = true;
        for (const auto& r : reports) {
            exact = exact && ((r.verdict == Verdict::Fail) == (r.property == culprit));
            e["checks"].push_back(io::to_json(r));
        }
        e["fails_exactly_designated"] = exact;
        all = all && exact;
        j["examples"].push_back(std::move(e));
    }
    j["pass"] = all;
    return Output{j, std::nullopt, all ? kOk : kCheckFailed};
}

Output cmd_mc_converge(const RunConfig& cfg) {
    io::GridCache grids;
    const std::vector<StarSet> bodies = load_bodies(cfg, grids);
    const std::uint64_t seed = require_seed(cfg, "mc-converge");
    const std::size_t max_n = cfg.mc.value_or(1'000'000);
    if (max_n < 1) throw InputError("--mc: must be >= 1");
    std::vector<StarSet> args = bodies;
    if (bodies.size() == 1) args.assign(static_cast<std::size_t>(bodies.front().dim()), bodies.front());
    std::optional<double> exact;
    try {
        exact = dual_mixed_volume(args).value;
    } catch (const Error&) {
    }
    std::vector<std::size_t> sizes;
    for (std::size_t n = 100; n < max_n; n *= 10) sizes.push_back(n);
    sizes.push_back(max_n);
    Series s{{"samples", "estimate", "stderr", "exact"}, {}};
    Json j;
    j["seed"] = seed;
    if (exact) j["exact"] = *exact;
    j["series"] = Json::array();
    for (std::size_t n : sizes) {
        const Volume v = monte_carlo_dmv(args, n, seed);
        s.rows.push_back({static_cast<double>(n), v.value, v.error, exact.value_or(std::nan(""))});
        Json row;
        row["samples"] = n;
        row["estimate"] = v.value;
        row["stderr"] = v.error;
        j["series"].push_back(std::move(row));
    }
    return Output{j, s};
}

void write_text(const std::string& path, const std::string& content) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw InputError(path + ": cannot write file");
    f << content;
    if (!f) throw InputError(path + ": write failed");
}

}  // namespace

std::string to_csv(const Series& s) {
    std::string out;
    for (std::size_t i = 0; i < s.header.size(); ++i) out += (i ? "," : "") + s.header[i];
    out += '\n';
    for (const auto& row : s.rows) {
        for (std::size_t i = 0; i < row.size(); ++i) {
            if (i) out += ',';
            if (std::isfinite(row[i])) out += io::format_number(row[i]);
        }
        out += '\n';
    }
    return out;
}

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
    CLI::App app{"Dual mixed volumes and characterization of positive additive functionals", "dmv"};
    app.require_subcommand(1);
    RunConfig cfg;

    app.add_option("--grid", cfg.grid, "exact grid, e.g. dim=2,m=64 or dim=3,bands=4,sectors=8");
    app.add_option("--tol", cfg.tol, "tolerance override");
    app.add_option("--trials", cfg.trials, "random trials per check");
    app.add_option("--seed", cfg.seed, "seed for every stochastic path");
    app.add_option("--out", cfg.out, "output path (default stdout)");
    app.add_option("--format", cfg.format, "json or csv")->check(CLI::IsMember({"json", "csv"}));
    app.add_option("--plot", cfg.plot, "CSV file for plot-ready series");

    const auto sub = [&](const char* name, const char* help) {
        CLI::App* s = app.add_subcommand(name, help);
        s->fallthrough();
        return s;
    };
    CLI::App* compute = sub("compute", "dual mixed volume or volume of star sets");
    compute->add_option("--bodies", cfg.bodies, "JSON file of star sets")->required();
    compute->add_option("--mc", cfg.mc, "Monte Carlo sample count");
    CLI::App* lutwak = sub("lutwak", "polynomial expansion of the volume of a radial sum");
    lutwak->add_option("--bodies", cfg.bodies, "JSON file of star sets")->required();
    lutwak->add_option("--t", cfg.t, "nonnegative coefficients, comma separated")->delimiter(',')->required();
    CLI::App* audit = sub("audit", "property checks of a functional");
    CLI::App* charac = sub("characterize", "run the characterization pipeline");
    CLI::App* valuation = sub("valuation", "valuation mu(A) = F(st A, ..., st A)");
    CLI::App* recover = sub("recover-measure", "recover the representing kernel");
    for (CLI::App* s : {audit, charac, valuation, recover}) {
        s->add_option("--functional", cfg.functional, "kernel/diagonal JSON file or gallery:NAME")->required();
        s->add_option("--param", cfg.params, "gallery parameter key=value (c=<number>, M=<star set file>)");
    }
    for (CLI::App* s : {audit, charac}) s->add_option("--checks", cfg.checks, "comma-separated checks");
    charac->add_flag("--real-valued", cfg.real_valued, "test increasing instead of positive");
    for (CLI::App* s : {charac, recover}) s->add_option("--budget", cfg.budget, "maximum recovery evaluations");
    recover->add_flag("--diagonal-only", cfg.diagonal_only, "enumerate only diagonal multi-indices");
    CLI::App* counter = sub("counterexamples", "gallery functionals against their designated property");
    CLI::App* mcc = sub("mc-converge", "Monte Carlo convergence series");
    mcc->add_option("--bodies", cfg.bodies, "JSON file of star sets")->required();
    mcc->add_option("--mc", cfg.mc, "largest sample count (default 1000000)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? kOk : kUsage;
    }

    try {
        Output result;
        CLI::App* chosen = app.get_subcommands().front();
        const bool series_command = chosen == charac || chosen == valuation || chosen == recover || chosen == mcc;
        if (cfg.format == "csv" && !series_command) {
            throw InputError("--format: csv is available for characterize, valuation, recover-measure and mc-converge");
        }
        if (chosen == compute) {
            result = cmd_compute(cfg);
        } else if (chosen == lutwak) {
            result = cmd_lutwak(cfg);
        } else if (chosen == audit) {
            result = cmd_audit(cfg);
        } else if (chosen == charac) {
            result = cmd_characterize(cfg);
        } else if (chosen == valuation) {
            result = cmd_valuation(cfg);
        } else if (chosen == recover) {
            result = cmd_recover(cfg);
        } else if (chosen == counter) {
            result = cmd_counterexamples(cfg);
        } else {
            result = cmd_mc_converge(cfg);
        }

        std::string text;
        if (cfg.format == "csv") {
            if (!result.series) throw InputError("--format: this run produced no series data");
            text = to_csv(*result.series);
        } else {
            text = io::dump(result.report) + "\n";
        }
        if (cfg.out.empty()) {
            out << text;
        } else {
            write_text(cfg.out, text);
        }
        if (!cfg.plot.empty()) {
            if (!result.series) throw InputError("--plot: this run produced no series data");
            write_text(cfg.plot, to_csv(*result.series));
        }
        return result.code;
    } catch (const InputError& e) {
        err << "dmv: " << e.what() << '\n';
    } catch (const Error& e) {
        err << "dmv: " << e.what() << '\n';
    } catch (const std::exception& e) {
        err << "dmv: " << e.what() << '\n';
    }
    return kUsage;
}

}  // namespace dualmv::cli
