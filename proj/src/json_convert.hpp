#pragma once

// JSON conversions shared by model persistence and the experiment driver.

#include <nlohmann/json.hpp>

#include "l1roc/parameter.hpp"
#include "l1roc/problem.hpp"

namespace l1roc {

using json = nlohmann::ordered_json;

json to_json(const Parameter& mu);
Parameter parameter_from_json(const json& j);

json to_json(const ParameterBox& box);
ParameterBox box_from_json(const json& j);

/// Writes every field, including the resolved defaults.
json to_json(const ProblemConfig& config);
/// Reads the fields written by to_json; missing optional fields keep their defaults.
ProblemConfig problem_config_from_json(const json& j);

}  // namespace l1roc
