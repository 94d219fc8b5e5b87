#pragma once

#include <filesystem>
#include <string>
#include <variant>
#include <vector>

#include <json.hpp>

#include "causalot/causality.hpp"
#include "causalot/coupling.hpp"
#include "causalot/measures.hpp"
#include "causalot/plans.hpp"
#include "causalot/solver.hpp"

namespace causalot::io {

using nlohmann::json;

/// Thrown for malformed documents; the message carries the path or field.
struct FormatError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// printf "%.17g"; infinities print as inf / -inf.
std::string format_double(double v);

json to_json(const DiscreteMeasure& m);
DiscreteMeasure measure_from_json(const json& j);

json to_json(const DistributionSpec& spec);
DistributionSpec spec_from_json(const json& j);
/// Compact spec syntax: exp:BETA, gamma:SHAPE:RATE, gauss:MEAN:VARIANCE,
/// dirac:POINT, uniform:LO:HI, levy:LEVEL.
DistributionSpec parse_spec(const std::string& text);

json to_json(const TransportPlan& plan);
TransportPlan plan_from_json(const json& j);

std::vector<double> map_from_json(const json& j);

struct AbsCost {};
struct SquareCost {};
/// Explicit cost table indexed by (source atom, target atom).
struct TableCost {
    std::vector<std::vector<double>> table;
};
using CostSpec = std::variant<AbsCost, SquareCost, TableCost>;

CostSpec cost_from_json(const json& j);
json to_json(const CostSpec& c);
/// Table costs look the pair up by position in the two supports.
CostFunction make_cost(const CostSpec& c, const DiscreteMeasure& source, const DiscreteMeasure& target);

struct Instance {
    DiscreteMeasure eta;
    DiscreteMeasure nu;
    CostSpec cost;
};
Instance instance_from_json(const json& j);

json to_json(const CausalityReport& r);
json to_json(const MapCausalityReport& r);
json to_json(const CyclicalMonotonicityReport& r);
/// Includes the plan when one was produced.
json to_json(const SolveResult& r);
json to_json(const AxiomReport& r);

/// Reads and parses a JSON file; errors name the path.
json read_json_file(const std::filesystem::path& path);
void write_text_file(const std::filesystem::path& path, const std::string& text);

std::string ccdf_csv(const std::vector<CcdfPoint>& points);
/// Columns X,tau,Z,Y; a never-expiring tau prints as inf.
std::string sample_csv(const CouplingSample& sample);

}  // namespace causalot::io
