#pragma once

#include "dualmv/characterize.hpp"
#include "dualmv/dmv.hpp"
#include "dualmv/errors.hpp"
#include "dualmv/functionals.hpp"

#include <json.hpp>

#include <map>
#include <memory>
#include <string>
#include <vector>

namespace dualmv::io {

using Json = nlohmann::ordered_json;

/// Malformed or inconsistent input; the message names the offending field.
class InputError : public Error {
public:
    using Error::Error;
};

/// Interns grids by id so equal descriptors share one object.
class GridCache {
public:
    std::shared_ptr<const SphereGrid> get(const GridSpec& spec);

private:
    std::map<std::string, std::shared_ptr<const SphereGrid>> grids_;
};

/// Accepts "dim=2,m=64", {"dim":2,"m":64} and {"dim":3,"bands":B,"sectors":S}.
GridSpec grid_spec_from_json(const Json& j, const std::string& field = "grid");
Json to_json(const GridSpec& spec);

SphericalRegion region_from_json(const Json& j, int dim, GridCache& grids, const std::string& field = "base");
Json to_json(const SphericalRegion& r);

/// {"dim":n,"rho":{"type":"simple","terms":[{"alpha":a,"base":<region>}...]}} or
/// {"dim":n,"rho":{"type":"grid","grid":"<id>","values":[...]}}.
StarSet star_set_from_json(const Json& j, GridCache& grids, const std::string& field = "body");
/// Samplers are written as {"type":"sampler"} and cannot be read back.
Json to_json(const StarSet& l);

/// A JSON array of star-set descriptors, or an object with a "bodies" array.
std::vector<StarSet> bodies_from_json(const Json& j, GridCache& grids);

/// Kernel file {"grid":...,"entries":[{"idx":[...],"w":...}...]} (optional "arity",
/// "signed") or diagonal file {"grid":...,"weights":[...]} (optional "arity").
BlackBoxFunctional functional_from_json(const Json& j, GridCache& grids, const std::string& name);
Json to_json(const KernelFunctional& k);
Json to_json(const DiagonalFunctional& d);

Json to_json(const Volume& v);
Json to_json(const LutwakExpansion& e);
Json to_json(const LutwakCheck& c);
Json to_json(const Witness& w);
Json to_json(const PropertyReport& r);
Json to_json(const RecoveredMeasure& m);
Json to_json(const DiagonalityResult& d);
Json to_json(const UniformityResult& u);
Json to_json(const ConstantEstimate& c);
Json to_json(const CharacterizationReport& r);
Json to_json(const ValuationCheck& c);
Json to_json(const ValuationReport& r);

/// Serializes with every number at 17 significant digits and non-finite numbers
/// as null. Output is a pure function of the value.
std::string dump(const Json& j, int indent = 2);

Json parse_file(const std::string& path);
std::string format_number(double x);

}  // namespace dualmv::io
