#include "dualmv/io.hpp"

#include "dualmv/errors.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace dualmv::io {

namespace {

const Json& member(const Json& j, const char* key, const std::string& field) {
    if (!j.is_object()) throw InputError(field + ": expected a JSON object");
    const auto it = j.find(key);
    if (it == j.end()) throw InputError(field + "." + key + ": missing");
    return *it;
}

double number(const Json& j, const std::string& field) {
    if (!j.is_number()) throw InputError(field + ": expected a number");
    return j.get<double>();
}

std::size_t index(const Json& j, const std::string& field) {
    if (!j.is_number_unsigned() && !(j.is_number_integer() && j.get<long long>() >= 0)) {
        throw InputError(field + ": expected a nonnegative integer");
    }
    return j.get<std::size_t>();
}

int integer(const Json& j, const std::string& field) {
    if (!j.is_number_integer()) throw InputError(field + ": expected an integer");
    return j.get<int>();
}

const std::string& text(const Json& j, const std::string& field) {
    if (!j.is_string()) throw InputError(field + ": expected a string");
    return j.get_ref<const std::string&>();
}

const Json& array(const Json& j, const std::string& field) {
    if (!j.is_array()) throw InputError(field + ": expected an array");
    return j;
}

Json numbers(std::span<const double> v) {
    Json a = Json::array();
    for (double x : v) a.push_back(x);
    return a;
}

Json indices(std::span<const std::size_t> v) {
    Json a = Json::array();
    for (std::size_t x : v) a.push_back(x);
    return a;
}

/// Rethrows library errors raised while building a value as input errors on `field`.
template <class F>
auto guarded(const std::string& field, F&& f) -> decltype(f()) {
    try {
        return f();
    } catch (const InputError&) {
        throw;
    } catch (const Error& e) {
        throw InputError(field + ": " + e.what());
    } catch (const nlohmann::json::exception& e) {
        throw InputError(field + ": " + e.what());
    }
}

void write(std::string& out, const Json& j, int indent, int depth) {
    const auto newline = [&](int d) {
        if (indent < 0) return;
        out += '\n';
        out.append(static_cast<std::size_t>(indent * d), ' ');
    };
    switch (j.type()) {
        case Json::value_t::object: {
            if (j.empty()) {
                out += "{}";
                return;
            }
            out += '{';
            bool first = true;
            for (const auto& [k, v] : j.items()) {
                if (!first) out += ',';
                first = false;
                newline(depth + 1);
                out += Json(k).dump();
                out += indent < 0 ? ":" : ": ";
                write(out, v, indent, depth + 1);
            }
            newline(depth);
            out += '}';
            return;
        }
        case Json::value_t::array: {
            if (j.empty()) {
                out += "[]";
                return;
            }
            out += '[';
            bool first = true;
            for (const auto& v : j) {
                if (!first) out += ',';
                first = false;
                newline(depth + 1);
                write(out, v, indent, depth + 1);
            }
            newline(depth);
            out += ']';
            return;
        }
        case Json::value_t::number_float:
            out += format_number(j.get<double>());
            return;
        default:
            out += j.dump();
            return;
    }
}

}  // namespace

std::string format_number(double x) {
    if (!std::isfinite(x)) return "null";
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", x);
    return buf;
}

std::string dump(const Json& j, int indent) {
    std::string out;
    write(out, j, indent, 0);
    return out;
}

Json parse_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw InputError(path + ": cannot open file");
    try {
        return Json::parse(in);
    } catch (const nlohmann::json::parse_error& e) {
        throw InputError(path + ": malformed JSON: " + e.what());
    }
}

// ---------------------------------------------------------------- grids and regions

std::shared_ptr<const SphereGrid> GridCache::get(const GridSpec& spec) {
    const std::string id = spec.id();
    auto it = grids_.find(id);
    if (it == grids_.end()) it = grids_.emplace(id, make_grid(spec)).first;
    return it->second;
}

GridSpec grid_spec_from_json(const Json& j, const std::string& field) {
    return guarded(field, [&] {
        if (j.is_string()) return GridSpec::parse(j.get<std::string>());
        const int dim = integer(member(j, "dim", field), field + ".dim");
        if (dim == 2) {
            return GridSpec::circle(index(member(j, "m", field), field + ".m"));
        }
        return GridSpec{dim, index(member(j, "bands", field), field + ".bands"),
                        index(member(j, "sectors", field), field + ".sectors")};
    });
}

Json to_json(const GridSpec& spec) {
    Json j;
    j["dim"] = spec.dim;
    if (spec.dim == 2) {
        j["m"] = spec.sectors;
    } else {
        j["bands"] = spec.bands;
        j["sectors"] = spec.sectors;
    }
    return j;
}

namespace {

Cap cap_from_json(const Json& j, int dim, const std::string& field) {
    const Json& c = array(member(j, "center", field), field + ".center");
    if (c.size() != static_cast<std::size_t>(dim)) {
        throw InputError(field + ".center: expected " + std::to_string(dim) + " coordinates");
    }
    Eigen::VectorXd v(dim);
    for (int i = 0; i < dim; ++i) v[i] = number(c[static_cast<std::size_t>(i)], field + ".center");
    return std::get<Cap>(SphericalRegion::cap(Direction(v), number(member(j, "radius", field), field + ".radius")).variant());
}

Json cap_to_json(const Cap& x) {
    Json j;
    j["type"] = "cap";
    const Eigen::VectorXd& c = x.center.coords();
    j["center"] = numbers(std::span<const double>(c.data(), static_cast<std::size_t>(c.size())));
    j["radius"] = x.radius;
    return j;
}

}  // namespace

SphericalRegion region_from_json(const Json& j, int dim, GridCache& grids, const std::string& field) {
    const std::string& type = text(member(j, "type", field), field + ".type");
    return guarded(field, [&]() -> SphericalRegion {
        if (type == "full") return FullSphere{};
        if (type == "arc") {
            if (dim != 2) throw InputError(field + ": arcs exist only for dim 2");
            return SphericalRegion::arc(number(member(j, "start", field), field + ".start"),
                                        number(member(j, "end", field), field + ".end"));
        }
        if (type == "cap") return cap_from_json(j, dim, field);
        if (type == "cap-difference") {
            CapDifference d;
            const Json& outer = member(j, "outer", field);
            if (!outer.is_null()) d.outer = cap_from_json(outer, dim, field + ".outer");
            const Json& holes = array(member(j, "holes", field), field + ".holes");
            for (std::size_t i = 0; i < holes.size(); ++i)
                d.holes.push_back(cap_from_json(holes[i], dim, field + ".holes[" + std::to_string(i) + "]"));
            return d;
        }
        if (type == "cells") {
            const auto grid = grids.get(grid_spec_from_json(member(j, "grid", field), field + ".grid"));
            if (grid->dim() != dim) throw InputError(field + ".grid: grid dimension differs from the body's");
            std::vector<std::size_t> idx;
            for (const auto& x : array(member(j, "indices", field), field + ".indices"))
                idx.push_back(index(x, field + ".indices"));
            return SphericalRegion::cells(grid, std::move(idx));
        }
        if (type == "union") {
            RegionUnion u;
            const Json& parts = array(member(j, "parts", field), field + ".parts");
            for (std::size_t i = 0; i < parts.size(); ++i)
                u.parts.push_back(region_from_json(parts[i], dim, grids, field + ".parts[" + std::to_string(i) + "]"));
            return u;
        }
        throw InputError(field + ".type: unknown region type '" + type + "'");
    });
}

Json to_json(const SphericalRegion& r) {
    return std::visit(
        [](const auto& x) -> Json {
            using T = std::decay_t<decltype(x)>;
            Json j;
            if constexpr (std::is_same_v<T, FullSphere>) {
                j["type"] = "full";
            } else if constexpr (std::is_same_v<T, Arc>) {
                j["type"] = "arc";
                j["start"] = x.start;
                j["end"] = x.end;
            } else if constexpr (std::is_same_v<T, Cap>) {
                j = cap_to_json(x);
            } else if constexpr (std::is_same_v<T, CellSet>) {
                j["type"] = "cells";
                j["grid"] = x.grid->id();
                j["indices"] = indices(x.indices);
            } else if constexpr (std::is_same_v<T, CapDifference>) {
                j["type"] = "cap-difference";
                j["outer"] = x.outer ? cap_to_json(*x.outer) : Json(nullptr);
                j["holes"] = Json::array();
                for (const auto& h : x.holes) j["holes"].push_back(cap_to_json(h));
            } else {
                j["type"] = "union";
                j["parts"] = Json::array();
                for (const auto& p : x.parts) j["parts"].push_back(to_json(p));
            }
            return j;
        },
        r.variant());
}

// ---------------------------------------------------------------- star sets

StarSet star_set_from_json(const Json& j, GridCache& grids, const std::string& field) {
    if (!j.is_object()) throw InputError(field + ": expected a JSON object");
    const Json& rho = j.contains("rho") ? j["rho"] : j;
    const std::string rfield = j.contains("rho") ? field + ".rho" : field;
    const std::string& type = text(member(rho, "type", rfield), rfield + ".type");
    if (type == "grid") {
        const auto grid = grids.get(grid_spec_from_json(member(rho, "grid", rfield), rfield + ".grid"));
        if (j.contains("dim") && integer(j["dim"], field + ".dim") != grid->dim()) {
            throw InputError(field + ".dim: differs from the grid dimension");
        }
        std::vector<double> values;
        for (const auto& v : array(member(rho, "values", rfield), rfield + ".values"))
            values.push_back(number(v, rfield + ".values"));
        return guarded(rfield, [&] { return StarSet::on_grid(grid, std::move(values)); });
    }
    if (type == "simple") {
        const int dim = integer(member(j, "dim", field), field + ".dim");
        if (dim < 2) throw InputError(field + ".dim: must be >= 2");
        std::vector<PolyconeTerm> terms;
        const Json& ts = array(member(rho, "terms", rfield), rfield + ".terms");
        for (std::size_t i = 0; i < ts.size(); ++i) {
            const std::string tf = rfield + ".terms[" + std::to_string(i) + "]";
            const Json& level = ts[i].contains("alpha") ? ts[i]["alpha"] : member(ts[i], "level", tf);
            const double alpha = number(level, tf + ".alpha");
            if (!(alpha >= 0.0) || !std::isfinite(alpha)) {
                throw InputError(tf + ".alpha: level must be finite and nonnegative");
            }
            terms.push_back(PolyconeTerm{alpha,
                                         region_from_json(member(ts[i], "base", tf), dim, grids, tf + ".base")});
        }
        return guarded(rfield, [&] { return StarSet(canonicalize(dim, std::move(terms))); });
    }
    throw InputError(rfield + ".type: unknown radial function type '" + type + "'");
}

Json to_json(const StarSet& l) {
    Json j;
    j["dim"] = l.dim();
    Json rho;
    if (const auto* p = l.polycone()) {
        rho["type"] = "simple";
        rho["terms"] = Json::array();
        for (const auto& t : p->terms()) {
            Json term;
            term["alpha"] = t.level;
            term["base"] = to_json(t.base);
            rho["terms"].push_back(std::move(term));
        }
    } else if (const auto* g = l.grid_values()) {
        rho["type"] = "grid";
        rho["grid"] = g->grid->id();
        rho["values"] = numbers(g->values);
    } else {
        rho["type"] = "sampler";
        rho["bound"] = l.sampler()->bound;
    }
    j["rho"] = std::move(rho);
    return j;
}

std::vector<StarSet> bodies_from_json(const Json& j, GridCache& grids) {
    const Json& list = j.is_object() ? member(j, "bodies", "input") : j;
    if (!list.is_array()) throw InputError("bodies: expected an array of star sets");
    std::vector<StarSet> out;
    for (std::size_t i = 0; i < list.size(); ++i)
        out.push_back(star_set_from_json(list[i], grids, "bodies[" + std::to_string(i) + "]"));
    if (out.empty()) throw InputError("bodies: empty list");
    for (const auto& b : out)
        if (b.dim() != out.front().dim()) throw InputError("bodies: star sets of different dimensions");
    return out;
}

// ---------------------------------------------------------------- functionals

BlackBoxFunctional functional_from_json(const Json& j, GridCache& grids, const std::string& name) {
    const auto grid = grids.get(grid_spec_from_json(member(j, "grid", "functional"), "functional.grid"));
    const int arity = j.contains("arity") ? integer(j["arity"], "functional.arity") : grid->dim();
    if (arity != grid->dim()) throw InputError("functional.arity: must equal the grid dimension");
    if (j.contains("entries")) {
        std::map<MultiIndex, double> w;
        const Json& es = array(j["entries"], "functional.entries");
        for (std::size_t i = 0; i < es.size(); ++i) {
            const std::string f = "functional.entries[" + std::to_string(i) + "]";
            MultiIndex k;
            for (const auto& x : array(member(es[i], "idx", f), f + ".idx")) k.push_back(index(x, f + ".idx"));
            w[k] += number(member(es[i], "w", f), f + ".w");
        }
        const bool is_signed = j.contains("signed") && j["signed"].is_boolean() && j["signed"].get<bool>();
        return guarded("functional", [&] {
            const KernelFunctional k = is_signed ? KernelFunctional::signed_kernel(grid, arity, std::move(w))
                                                 : KernelFunctional(grid, arity, std::move(w));
            return k.to_black_box(name);
        });
    }
    if (j.contains("weights")) {
        std::vector<double> w;
        for (const auto& x : array(j["weights"], "functional.weights")) w.push_back(number(x, "functional.weights"));
        return guarded("functional", [&] { return DiagonalFunctional(grid, arity, std::move(w)).to_black_box(name); });
    }
    throw InputError("functional: expected \"entries\" (kernel) or \"weights\" (diagonal)");
}

Json to_json(const KernelFunctional& k) {
    Json j;
    j["grid"] = k.grid()->id();
    j["arity"] = k.arity();
    j["total_mass"] = k.total_mass();
    j["entries"] = Json::array();
    for (const auto& [idx, w] : k.weights()) {
        Json e;
        e["idx"] = indices(idx);
        e["w"] = w;
        j["entries"].push_back(std::move(e));
    }
    return j;
}

Json to_json(const DiagonalFunctional& d) {
    Json j;
    j["grid"] = d.grid()->id();
    j["arity"] = d.arity();
    j["weights"] = numbers(d.weights());
    return j;
}

// ---------------------------------------------------------------- results

Json to_json(const Volume& v) {
    Json j;
    j["value"] = v.value;
    j["method"] = to_string(v.method);
    j["error"] = v.error;
    return j;
}

Json to_json(const LutwakExpansion& e) {
    Json j;
    j["degree"] = e.degree();
    j["bodies"] = e.bodies();
    j["coefficients"] = Json::array();
    for (std::size_t flat = 0; flat < e.coefficients().size(); ++flat) {
        Json c;
        c["idx"] = indices(e.index_of(flat));
        c["value"] = e.coefficients()[flat];
        j["coefficients"].push_back(std::move(c));
    }
    return j;
}

Json to_json(const LutwakCheck& c) {
    Json j;
    j["lhs"] = c.lhs;
    j["rhs"] = c.rhs;
    j["residual"] = c.residual;
    j["tolerance"] = c.tolerance;
    j["pass"] = c.pass;
    return j;
}

Json to_json(const Witness& w) {
    Json j;
    j["description"] = w.description;
    if (w.slot >= 0) j["slot"] = w.slot;
    j["lhs"] = w.lhs;
    j["rhs"] = w.rhs;
    j["evaluations"] = Json::array();
    for (std::size_t i = 0; i < w.tuples.size(); ++i) {
        Json e;
        e["value"] = i < w.values.size() ? w.values[i] : std::nan("");
        e["tuple"] = Json::array();
        for (const auto& l : w.tuples[i]) e["tuple"].push_back(to_json(l));
        j["evaluations"].push_back(std::move(e));
    }
    return j;
}

Json to_json(const PropertyReport& r) {
    Json j;
    j["property"] = r.property;
    j["verdict"] = to_string(r.verdict);
    j["trials"] = r.trials;
    j["max_residual"] = r.max_residual;
    j["tolerance"] = r.tolerance;
    if (!r.note.empty()) j["note"] = r.note;
    if (r.witness) j["witness"] = to_json(*r.witness);
    return j;
}

Json to_json(const RecoveredMeasure& m) {
    Json j;
    j["kernel"] = to_json(m.kernel);
    j["residual"] = m.residual;
    j["validation_trials"] = m.validation_trials;
    j["evaluations"] = m.evaluations;
    j["diagonal_only"] = m.diagonal_only;
    j["negative_weights"] = m.negative_weights;
    return j;
}

Json to_json(const DiagonalityResult& d) {
    Json j;
    j["verdict"] = to_string(d.verdict);
    j["off_diagonal_mass"] = d.off_diagonal_mass;
    j["total_mass"] = d.total_mass;
    j["tolerance"] = d.tolerance;
    if (d.worst) j["worst"] = indices(*d.worst);
    if (d.projected) j["projected"] = numbers(*d.projected);
    return j;
}

Json to_json(const UniformityResult& u) {
    Json j;
    j["verdict"] = to_string(u.verdict);
    j["lambda"] = u.lambda;
    j["spread"] = u.spread;
    j["tolerance"] = u.tolerance;
    j["worst_cell"] = u.worst_cell;
    if (!u.note.empty()) j["note"] = u.note;
    j["density"] = numbers(u.density);
    return j;
}

Json to_json(const ConstantEstimate& c) {
    Json j;
    j["c"] = c.c;
    j["spread"] = c.spread;
    j["samples"] = c.series.size();
    return j;
}

Json to_json(const CharacterizationReport& r) {
    Json j;
    j["functional"] = r.functional;
    j["grid"] = r.grid;
    j["conclusion"] = to_string(r.conclusion);
    if (!r.culprit.empty()) j["culprit"] = r.culprit;
    if (!r.note.empty()) j["note"] = r.note;
    j["checks"] = Json::array();
    for (const auto& c : r.checks) j["checks"].push_back(to_json(c));
    if (r.recovered) j["recovered"] = to_json(*r.recovered);
    if (r.diagonality) j["diagonality"] = to_json(*r.diagonality);
    if (r.uniformity) j["uniformity"] = to_json(*r.uniformity);
    if (r.constant) j["constant"] = to_json(*r.constant);
    return j;
}

Json to_json(const ValuationCheck& c) {
    Json j;
    j["verdict"] = to_string(c.verdict);
    j["max_residual"] = c.max_residual;
    j["tolerance"] = c.tolerance;
    j["trials"] = c.trials;
    return j;
}

Json to_json(const ValuationReport& r) {
    Json j;
    j["functional"] = r.functional;
    j["grid"] = r.grid;
    j["pass"] = r.pass();
    j["valuation"] = to_json(r.valuation);
    j["empty"] = to_json(r.empty);
    j["rotation"] = to_json(r.rotation);
    j["proportional"] = to_json(r.proportional);
    j["volume"] = to_json(r.volume);
    j["lambda"] = r.lambda;
    j["c"] = r.c;
    j["c_spread"] = r.c_spread;
    j["consistency"] = r.consistency;
    Json cones;
    cones["trials"] = r.cone_trials;
    cones["residual_direct"] = r.cone_residual_direct;
    cones["residual_ratio"] = r.cone_residual_ratio;
    j["cone_product"] = std::move(cones);
    j["density"] = numbers(r.density);
    return j;
}

}  // namespace dualmv::io
