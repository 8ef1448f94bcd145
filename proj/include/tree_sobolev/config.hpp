#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "tree_sobolev/tree.hpp"

namespace tsob {

enum class WeightKind { explicit_values, dyadic, geometric, unit };

// W_k for k = 1..N: explicit list, c 2^{-k}, c beta^k, or 1.
struct WeightSpec {
  WeightKind kind = WeightKind::dyadic;
  std::vector<double> values;  // explicit only
  double scale = 1.0;
  double beta = 2.0;           // geometric only

  TreeWeights build(int height) const;
  // Short label, e.g. "dyadic", "geometric:3", "explicit".
  std::string label() const;

  bool operator==(const WeightSpec&) const = default;
};

// "unit", "dyadic[:c]", "geometric:beta[:c]", "explicit:w1,w2,...", or
// "file:path" / a path to a JSON file {"N": n, "W": [...]}.
WeightSpec parse_weight_spec(const std::string& text);

enum class OutputFormat { json, csv };

inline const std::vector<std::string>& run_commands() {
  static const std::vector<std::string> names{"extend", "simulate", "kernels", "opnorm", "report", "verify"};
  return names;
}

struct RunConfig {
  std::string command;
  int n = 4;
  std::vector<double> p{2.0};
  WeightSpec weights;
  std::vector<WeightSpec> families;  // report grid; empty means {weights}
  std::optional<std::uint64_t> seed;
  std::uint64_t trials = 0;
  int samples = 0;
  int start_depth = 0;               // simulate; 0 means every depth 1..N-1
  int max_iterations = 0;            // extend: trace solver cap, 0 means the solver default
  std::string leaf_values;           // extend: "random:seed", "delta:index" or a JSON file
  std::vector<std::string> matrices; // kernels; empty means the depth kernels only
  std::string output;
  OutputFormat format = OutputFormat::json;

  bool operator==(const RunConfig&) const = default;
};

// Canonical text: serialize(parse(serialize(c))) == serialize(c).
std::string serialize_config(const RunConfig& config);
RunConfig parse_config(const std::string& json_text);
std::uint64_t config_digest(const RunConfig& config);
// Digest rendered as 16 hex digits.
std::string hex_digest(std::uint64_t digest);

}  // namespace tsob
