#pragma once

#include <string>
#include <string_view>

#include "json.hpp"
#include "rai_forge/ensemble.hpp"
#include "rai_forge/learners.hpp"
#include "rai_forge/solvers.hpp"
#include "rai_forge/uncertainty.hpp"

namespace raiforge {

using Json = nlohmann::json;

// Decoders reject unknown keys and wrong types. Set specs throw InvalidSpec,
// everything else ConfigError.

Json to_json(const UncertaintySetSpec& spec);
UncertaintySetSpec set_spec_from_json(const Json& j);

Json to_json(const Hypothesis& h);
Hypothesis hypothesis_from_json(const Json& j);

/// Masses are written normalized.
Json to_json(const Ensemble& q);
Ensemble ensemble_from_json(const Json& j);

Json to_json(const SolverConfig& cfg);
SolverConfig config_from_json(const Json& j);

Json to_json(const MetricsReport& m);

/// Parses text; syntax errors become ConfigError.
Json parse_json(std::string_view text);
Json read_json_file(const std::string& path);
void write_json_file(const Json& j, const std::string& path);

}  // namespace raiforge
