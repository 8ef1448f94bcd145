// tree-sobolev: command-line front end over the C API.
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "tree_sobolev/tree_sobolev.h"

namespace {

using ordered_json = nlohmann::ordered_json;

struct Flags {
  std::string config;
  std::optional<int> n;
  std::vector<double> p;
  std::string weights;
  std::optional<std::uint64_t> seed;
  std::optional<std::uint64_t> trials;
  std::optional<int> samples;
  std::optional<int> start_depth;
  std::optional<int> max_iterations;
  std::string leaf_values;
  std::vector<std::string> families;
  std::vector<std::string> matrices;
  std::string output;
  std::string format;
};

void common_options(CLI::App* sub, Flags& f) {
  sub->add_option("--config", f.config, "JSON config file; flags override its fields");
  sub->add_option("--n", f.n, "tree height N");
  sub->add_option("--p", f.p, "exponent p > 1")->delimiter(',');
  sub->add_option("--weights", f.weights, "unit | dyadic[:c] | geometric:beta[:c] | explicit:w1,... | file");
  sub->add_option("--seed", f.seed, "RNG seed");
  sub->add_option("--output", f.output, "write the report to this file");
  sub->add_option("--format", f.format, "json or csv")->check(CLI::IsMember({"json", "csv"}));
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open config file '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

ordered_json build_config(const std::string& command, const Flags& f, const CLI::App* sub) {
  ordered_json j = ordered_json::object();
  if (!f.config.empty()) {
    j = ordered_json::parse(read_file(f.config));
    if (!j.is_object()) throw std::runtime_error("config file must hold a JSON object");
  }
  j["command"] = command;
  auto given = [&](const char* name) { return sub->get_option_no_throw(name) && sub->count(name) > 0; };
  if (f.n) j["N"] = *f.n;
  if (!f.p.empty()) j["p"] = f.p;
  if (!f.weights.empty()) j["weights"] = f.weights;
  if (f.seed) j["seed"] = *f.seed;
  if (f.trials) j["trials"] = *f.trials;
  if (f.samples) j["samples"] = *f.samples;
  if (f.start_depth) j["start_depth"] = *f.start_depth;
  if (f.max_iterations) j["max_iterations"] = *f.max_iterations;
  if (given("--leaf-values")) j["leaf_values"] = f.leaf_values;
  if (!f.families.empty()) j["families"] = f.families;
  if (!f.matrices.empty()) j["matrices"] = f.matrices;
  if (!f.output.empty()) j["output"] = f.output;
  if (!f.format.empty()) {
    j["format"] = f.format;
  } else if (!j.contains("format") && (command == "report" || command == "kernels")) {
    j["format"] = "csv";
  }
  return j;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Harmonic extension and trace norms on radially weighted binary trees"};
  app.set_version_flag("--version", std::string(tsob_version()));
  app.require_subcommand(1);
  Flags f;

  auto* extend = app.add_subcommand("extend", "harmonic extension, seminorm and trace of leaf data");
  common_options(extend, f);
  extend->add_option("--leaf-values", f.leaf_values, "JSON file with 2^N numbers | random:seed | delta:index");
  extend->add_option("--max-iterations", f.max_iterations, "trace solver iteration cap");

  auto* simulate = app.add_subcommand("simulate", "Monte-Carlo walk statistics against closed forms");
  common_options(simulate, f);
  simulate->add_option("--trials", f.trials, "walks per start depth");
  simulate->add_option("--start-depth", f.start_depth, "single start depth (default: all of 1..N-1)");

  auto* kernels = app.add_subcommand("kernels", "dump kernel matrices");
  common_options(kernels, f);
  kernels->add_option("--matrices", f.matrices, "K K0 K1 L0 L1 L_bound reversed reversed_bound P B A");

  auto* opnorm = app.add_subcommand("opnorm", "operator-norm report");
  common_options(opnorm, f);
  opnorm->add_option("--samples", f.samples, "random leaf functions for the extension ratio");

  auto* report = app.add_subcommand("report", "grid over p values and weight families");
  common_options(report, f);
  report->add_option("--samples", f.samples, "random leaf functions per cell");
  report->add_option("--families", f.families, "weight specs, space separated");

  auto* verify = app.add_subcommand("verify", "run the invariant checklist");
  common_options(verify, f);
  verify->add_option("--samples", f.samples, "random leaf functions for the ratio checks");

  try {
    app.parse(argc, argv);
  } catch (const CLI::Success& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  const CLI::App* sub = app.get_subcommands().front();
  std::string config_text;
  try {
    config_text = build_config(sub->get_name(), f, sub).dump();
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }

  char* out = nullptr;
  int code = 2;
  if (tsob_run(config_text.c_str(), &out, &code) != TSOB_OK) {
    std::cerr << "error: " << tsob_last_error() << "\n";
    return 2;
  }
  const std::string text = out ? out : "";
  tsob_string_free(out);
  if (code == 2) {
    std::cerr << text;
  } else if (code == 3 || f.output.empty()) {
    std::cout << text;
  }
  return code;
}
