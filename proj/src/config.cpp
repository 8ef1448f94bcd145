#include "tree_sobolev/config.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "json.hpp"
#include "tree_sobolev/common.hpp"

namespace tsob {

using ordered_json = nlohmann::ordered_json;

namespace {

double parse_number(const std::string& s, const char* what) {
  std::size_t used = 0;
  double v = 0.0;
  try {
    v = std::stod(s, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  require(used == s.size() && !s.empty() && std::isfinite(v), ErrorCode::invalid_argument,
          std::string("malformed ") + what + ": '" + s + "'");
  return v;
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string cur;
  std::istringstream in(s);
  while (std::getline(in, cur, sep)) out.push_back(cur);
  if (!s.empty() && s.back() == sep) out.emplace_back();
  return out;
}

WeightSpec weights_from_file(const std::string& path) {
  std::ifstream in(path);
  require(static_cast<bool>(in), ErrorCode::io, "cannot open weights file '" + path + "'");
  ordered_json j;
  try {
    j = ordered_json::parse(in);
  } catch (const std::exception& e) {
    fail(ErrorCode::invalid_argument, "weights file '" + path + "' is not valid JSON: " + e.what());
  }
  require(j.is_object() && j.contains("W") && j["W"].is_array(), ErrorCode::invalid_argument,
          "weights file must hold {\"N\": n, \"W\": [...]}");
  WeightSpec spec;
  spec.kind = WeightKind::explicit_values;
  for (const auto& w : j["W"]) {
    require(w.is_number(), ErrorCode::invalid_argument, "weights file: W entries must be numbers");
    spec.values.push_back(w.get<double>());
  }
  if (j.contains("N")) {
    require(j["N"].is_number_integer() && j["N"].get<long long>() == static_cast<long long>(spec.values.size()),
            ErrorCode::invalid_argument, "weights file: N does not match the length of W");
  }
  return spec;
}

const char* kind_name(WeightKind k) {
  switch (k) {
    case WeightKind::explicit_values: return "explicit";
    case WeightKind::dyadic: return "dyadic";
    case WeightKind::geometric: return "geometric";
    case WeightKind::unit: return "unit";
  }
  return "?";
}

ordered_json weight_to_json(const WeightSpec& w) {
  ordered_json j;
  j["kind"] = kind_name(w.kind);
  switch (w.kind) {
    case WeightKind::explicit_values: j["values"] = w.values; break;
    case WeightKind::dyadic: j["scale"] = w.scale; break;
    case WeightKind::geometric:
      j["beta"] = w.beta;
      j["scale"] = w.scale;
      break;
    case WeightKind::unit: break;
  }
  return j;
}

double positive_number(const ordered_json& j, const char* key, double fallback) {
  if (!j.contains(key)) return fallback;
  require(j[key].is_number(), ErrorCode::invalid_argument, std::string("weights.") + key + " must be a number");
  const double v = j[key].get<double>();
  require(v > 0.0 && std::isfinite(v), ErrorCode::invalid_argument, std::string("weights.") + key + " must be positive");
  return v;
}

WeightSpec weight_from_json(const ordered_json& j) {
  if (j.is_string()) return parse_weight_spec(j.get<std::string>());
  require(j.is_object() && j.contains("kind") && j["kind"].is_string(), ErrorCode::invalid_argument,
          "weights must be a spec string or an object with a 'kind'");
  const std::string kind = j["kind"].get<std::string>();
  WeightSpec w;
  if (kind == "explicit") {
    w.kind = WeightKind::explicit_values;
    require(j.contains("values") && j["values"].is_array(), ErrorCode::invalid_argument,
            "explicit weights need a 'values' array");
    for (const auto& v : j["values"]) {
      require(v.is_number(), ErrorCode::invalid_argument, "explicit weights must be numbers");
      w.values.push_back(v.get<double>());
    }
  } else if (kind == "dyadic") {
    w.kind = WeightKind::dyadic;
    w.scale = positive_number(j, "scale", 1.0);
  } else if (kind == "geometric") {
    w.kind = WeightKind::geometric;
    require(j.contains("beta"), ErrorCode::invalid_argument, "geometric weights need 'beta'");
    w.beta = positive_number(j, "beta", 2.0);
    w.scale = positive_number(j, "scale", 1.0);
  } else if (kind == "unit") {
    w.kind = WeightKind::unit;
  } else {
    fail(ErrorCode::invalid_argument, "unknown weight kind '" + kind + "'");
  }
  return w;
}

template <class T>
T get_or(const ordered_json& j, const char* key, T fallback) {
  if (!j.contains(key) || j[key].is_null()) return fallback;
  try {
    return j[key].get<T>();
  } catch (const std::exception&) {
    fail(ErrorCode::invalid_argument, std::string("config field '") + key + "' has the wrong type");
  }
}

}  // namespace

TreeWeights WeightSpec::build(int height) const {
  switch (kind) {
    case WeightKind::explicit_values:
      require(static_cast<int>(values.size()) == height, ErrorCode::shape_mismatch,
              "explicit weights have " + std::to_string(values.size()) + " entries, N = " + std::to_string(height));
      return TreeWeights(values);
    case WeightKind::dyadic: return TreeWeights::dyadic(height, scale);
    case WeightKind::geometric: return TreeWeights::geometric(height, beta, scale);
    case WeightKind::unit: return TreeWeights::unit(height);
  }
  fail(ErrorCode::invalid_argument, "unknown weight kind");
}

std::string WeightSpec::label() const {
  auto num = [](double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.6g", v);
    return std::string(buf);
  };
  switch (kind) {
    case WeightKind::explicit_values: return "explicit";
    case WeightKind::dyadic: return scale == 1.0 ? "dyadic" : "dyadic:" + num(scale);
    case WeightKind::geometric:
      return "geometric:" + num(beta) + (scale == 1.0 ? "" : ":" + num(scale));
    case WeightKind::unit: return "unit";
  }
  return "?";
}

WeightSpec parse_weight_spec(const std::string& text) {
  require(!text.empty(), ErrorCode::invalid_argument, "empty weight spec");
  const auto colon = text.find(':');
  const std::string head = text.substr(0, colon);
  const std::string rest = colon == std::string::npos ? "" : text.substr(colon + 1);
  WeightSpec w;
  if (head == "unit" && rest.empty()) {
    w.kind = WeightKind::unit;
  } else if (head == "dyadic") {
    w.kind = WeightKind::dyadic;
    if (!rest.empty()) w.scale = parse_number(rest, "dyadic scale");
  } else if (head == "geometric") {
    w.kind = WeightKind::geometric;
    const auto parts = split(rest, ':');
    require(parts.size() == 1 || parts.size() == 2, ErrorCode::invalid_argument,
            "geometric weights: expected geometric:beta[:scale]");
    w.beta = parse_number(parts[0], "geometric beta");
    if (parts.size() == 2) w.scale = parse_number(parts[1], "geometric scale");
  } else if (head == "explicit") {
    w.kind = WeightKind::explicit_values;
    for (const auto& part : split(rest, ',')) w.values.push_back(parse_number(part, "weight"));
  } else if (head == "file") {
    return weights_from_file(rest);
  } else if (text.find('/') != std::string::npos || (text.size() > 5 && text.ends_with(".json"))) {
    return weights_from_file(text);
  } else {
    fail(ErrorCode::invalid_argument, "unknown weight spec '" + text + "'");
  }
  require(w.scale > 0.0 && w.beta > 0.0, ErrorCode::invalid_argument, "weight scale and beta must be positive");
  return w;
}

std::string serialize_config(const RunConfig& c) {
  ordered_json j;
  j["command"] = c.command;
  j["N"] = c.n;
  j["p"] = c.p;
  j["weights"] = weight_to_json(c.weights);
  ordered_json fam = ordered_json::array();
  for (const auto& f : c.families) fam.push_back(weight_to_json(f));
  j["families"] = fam;
  j["seed"] = c.seed ? ordered_json(*c.seed) : ordered_json(nullptr);
  j["trials"] = c.trials;
  j["samples"] = c.samples;
  j["start_depth"] = c.start_depth;
  j["max_iterations"] = c.max_iterations;
  j["leaf_values"] = c.leaf_values;
  j["matrices"] = c.matrices;
  j["output"] = c.output;
  j["format"] = c.format == OutputFormat::json ? "json" : "csv";
  return j.dump(2);
}

RunConfig parse_config(const std::string& text) {
  ordered_json j;
  try {
    j = ordered_json::parse(text);
  } catch (const std::exception& e) {
    fail(ErrorCode::invalid_argument, std::string("config is not valid JSON: ") + e.what());
  }
  require(j.is_object(), ErrorCode::invalid_argument, "config must be a JSON object");
  static const std::vector<std::string> known{"command", "N", "p", "weights", "families", "seed",
                                              "trials", "samples", "start_depth", "max_iterations", "leaf_values",
                                              "matrices", "output", "format"};
  for (const auto& [key, value] : j.items()) {
    require(std::find(known.begin(), known.end(), key) != known.end(), ErrorCode::invalid_argument,
            "unknown config field '" + key + "'");
  }
  RunConfig c;
  c.command = get_or<std::string>(j, "command", "");
  require(std::find(run_commands().begin(), run_commands().end(), c.command) != run_commands().end(),
          ErrorCode::invalid_argument, "unknown command '" + c.command + "'");
  c.n = get_or<int>(j, "N", 4);
  require(c.n >= 1, ErrorCode::invalid_argument, "N must be at least 1");
  require(c.n <= max_height(), ErrorCode::limit_exceeded,
          "N must be in [1, " + std::to_string(max_height()) + "]");
  if (j.contains("p")) {
    if (j["p"].is_number()) {
      c.p = {j["p"].get<double>()};
    } else {
      c.p = get_or<std::vector<double>>(j, "p", {});
    }
  }
  require(!c.p.empty(), ErrorCode::invalid_argument, "at least one p is required");
  for (double p : c.p) {
    require(p > 1.0 && std::isfinite(p), ErrorCode::invalid_argument, "p must lie in (1, inf)");
  }
  if (j.contains("weights")) c.weights = weight_from_json(j["weights"]);
  if (j.contains("families")) {
    require(j["families"].is_array(), ErrorCode::invalid_argument, "families must be an array");
    for (const auto& f : j["families"]) c.families.push_back(weight_from_json(f));
  }
  if (j.contains("seed") && !j["seed"].is_null()) {
    require(j["seed"].is_number_unsigned(), ErrorCode::invalid_argument, "seed must be a non-negative integer");
    c.seed = j["seed"].get<std::uint64_t>();
  }
  if (j.contains("trials")) {
    require(j["trials"].is_number_unsigned(), ErrorCode::invalid_argument, "trials must be a non-negative integer");
    c.trials = j["trials"].get<std::uint64_t>();
  }
  c.samples = get_or<int>(j, "samples", 0);
  require(c.samples >= 0, ErrorCode::invalid_argument, "samples must be non-negative");
  c.start_depth = get_or<int>(j, "start_depth", 0);
  require(c.start_depth >= 0 && c.start_depth <= c.n, ErrorCode::invalid_argument,
          "start_depth must be in [0, N]");
  c.max_iterations = get_or<int>(j, "max_iterations", 0);
  require(c.max_iterations >= 0, ErrorCode::invalid_argument, "max_iterations must be non-negative");
  c.leaf_values = get_or<std::string>(j, "leaf_values", "");
  c.matrices = get_or<std::vector<std::string>>(j, "matrices", {});
  c.output = get_or<std::string>(j, "output", "");
  const std::string fmt = get_or<std::string>(j, "format", "json");
  require(fmt == "json" || fmt == "csv", ErrorCode::invalid_argument, "format must be json or csv");
  c.format = fmt == "json" ? OutputFormat::json : OutputFormat::csv;
  return c;
}

std::uint64_t config_digest(const RunConfig& config) { return fnv1a64(serialize_config(config)); }

std::string hex_digest(std::uint64_t digest) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(digest));
  return buf;
}

}  // namespace tsob
