#include "json_convert.hpp"

#include "l1roc/errors.hpp"

namespace l1roc {

json to_json(const Parameter& mu) { return json(mu.values()); }

Parameter parameter_from_json(const json& j) {
  if (!j.is_array()) throw FormatError("parameter must be an array of numbers");
  std::vector<double> v;
  for (const auto& x : j) {
    if (!x.is_number()) throw FormatError("parameter must be an array of numbers");
    v.push_back(x.get<double>());
  }
  return Parameter(std::move(v));
}

json to_json(const ParameterBox& box) {
  json out = json::array();
  for (const auto& b : box.bounds()) out.push_back({b.lo, b.hi});
  return out;
}

ParameterBox box_from_json(const json& j) {
  if (!j.is_array() || j.empty()) throw FormatError("box must be a non-empty array of [lo, hi] pairs");
  std::vector<Interval> b;
  for (const auto& pair : j) {
    if (!pair.is_array() || pair.size() != 2 || !pair[0].is_number() || !pair[1].is_number())
      throw FormatError("box must be a non-empty array of [lo, hi] pairs");
    b.push_back({pair[0].get<double>(), pair[1].get<double>()});
  }
  try {
    return ParameterBox(std::move(b));
  } catch (const InvalidArgument& e) {
    throw FormatError(e.what());
  }
}

json to_json(const ProblemConfig& c) {
  json j;
  j["problem"] = std::string(to_string(c.kind));
  j["K"] = c.K;
  if (c.box) j["box"] = to_json(*c.box);
  if (c.forcing_constant) j["forcing_constant"] = *c.forcing_constant;
  if (c.final_time) j["final_time"] = *c.final_time;
  if (c.time_step) j["time_step"] = *c.time_step;
  j["burgers_setup"] = c.burgers_setup == BurgersSetup::a ? "a" : "b";
  j["initial_value"] = c.initial_value;
  return j;
}

ProblemConfig problem_config_from_json(const json& j) {
  if (!j.is_object()) throw FormatError("problem configuration must be an object");
  try {
    ProblemConfig c;
    c.kind = parse_problem_kind(j.at("problem").get<std::string>());
    if (j.contains("K")) c.K = j.at("K").get<Index>();
    if (j.contains("box")) c.box = box_from_json(j.at("box"));
    if (j.contains("forcing_constant") && !j.at("forcing_constant").is_null())
      c.forcing_constant = j.at("forcing_constant").get<double>();
    if (j.contains("final_time")) c.final_time = j.at("final_time").get<double>();
    if (j.contains("time_step")) c.time_step = j.at("time_step").get<double>();
    if (j.contains("burgers_setup")) {
      const auto s = j.at("burgers_setup").get<std::string>();
      if (s == "a" || s == "A") c.burgers_setup = BurgersSetup::a;
      else if (s == "b" || s == "B") c.burgers_setup = BurgersSetup::b;
      else throw FormatError("burgers_setup must be 'a' or 'b'");
    }
    if (j.contains("initial_value")) c.initial_value = j.at("initial_value").get<double>();
    return c;
  } catch (const json::exception& e) {
    throw FormatError(std::string("problem configuration: ") + e.what());
  } catch (const InvalidArgument& e) {
    throw FormatError(e.what());
  }
}

}  // namespace l1roc
