#include "tree_sobolev/runner.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <exception>
#include <fstream>
#include <functional>
#include <mutex>
#include <numeric>
#include <sstream>
#include <thread>

#include "json.hpp"
#include "tree_sobolev/extension.hpp"
#include "tree_sobolev/kernels.hpp"
#include "tree_sobolev/norms.hpp"
#include "tree_sobolev/random.hpp"

namespace tsob {

using ordered_json = nlohmann::ordered_json;

namespace {

const char* code_name(ErrorCode code) {
  switch (code) {
    case ErrorCode::invalid_argument: return "invalid_argument";
    case ErrorCode::shape_mismatch: return "shape_mismatch";
    case ErrorCode::not_converged: return "not_converged";
    case ErrorCode::limit_exceeded: return "limit_exceeded";
    case ErrorCode::io: return "io";
  }
  return "unknown";
}

std::string num(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

// Runs fn(0..count-1) on the worker pool. The first failure by index is rethrown.
void parallel_for(std::size_t count, const std::function<void(std::size_t)>& fn) {
  const std::size_t workers = std::min<std::size_t>(worker_threads(), count);
  if (workers <= 1) {
    for (std::size_t i = 0; i < count; ++i) fn(i);
    return;
  }
  std::vector<std::exception_ptr> errors(count);
  std::atomic<std::size_t> next{0};
  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (std::size_t w = 0; w < workers; ++w) {
    pool.emplace_back([&] {
      for (std::size_t i = next++; i < count; i = next++) {
        try {
          fn(i);
        } catch (...) {
          errors[i] = std::current_exception();
        }
      }
    });
  }
  for (auto& t : pool) t.join();
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
}

std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t a, std::uint64_t b) {
  return splitmix64(splitmix64(splitmix64(seed) ^ a) ^ (b + 0x632be59bd9b4e019ULL));
}

double single_p(const RunConfig& c) {
  require(c.p.size() == 1, ErrorCode::invalid_argument,
          "command '" + c.command + "' takes a single p, got " + std::to_string(c.p.size()));
  return c.p.front();
}

std::uint64_t required_seed(const RunConfig& c) {
  require(c.seed.has_value(), ErrorCode::invalid_argument, "command '" + c.command + "' needs an explicit seed");
  return *c.seed;
}

ordered_json header(const RunConfig& c) {
  ordered_json j;
  j["command"] = c.command;
  j["config_digest"] = hex_digest(config_digest(c));
  j["seed"] = c.seed ? ordered_json(*c.seed) : ordered_json(nullptr);
  return j;
}

ordered_json row_json(const Matrix& m, std::size_t row, std::size_t upto) {
  ordered_json a = ordered_json::array();
  for (std::size_t j = 0; j <= upto; ++j) a.push_back(m(row, j));
  return a;
}

// ---- extend ----

ScalarField leaf_values(const RunConfig& c) {
  const int n = c.n;
  ScalarField f(FieldRole::leaves, n);
  std::string spec = c.leaf_values;
  if (spec.empty()) {
    require(c.seed.has_value(), ErrorCode::invalid_argument, "extend needs leaf values or a seed");
    spec = "random:" + std::to_string(*c.seed);
  }
  const auto colon = spec.find(':');
  const std::string head = spec.substr(0, colon);
  const std::string arg = colon == std::string::npos ? "" : spec.substr(colon + 1);
  auto parse_u64 = [&](const std::string& s) {
    require(!s.empty() && std::all_of(s.begin(), s.end(), [](char ch) { return ch >= '0' && ch <= '9'; }),
            ErrorCode::invalid_argument, "malformed leaf value spec '" + spec + "'");
    try {
      return static_cast<std::uint64_t>(std::stoull(s));
    } catch (const std::exception&) {
      fail(ErrorCode::invalid_argument, "malformed leaf value spec '" + spec + "'");
    }
  };
  if (head == "random" && colon != std::string::npos) {
    Rng rng(parse_u64(arg));
    for (auto& v : f.values) v = rng.uniform(-1.0, 1.0);
    return f;
  }
  if (head == "delta" && colon != std::string::npos) {
    const std::uint64_t idx = parse_u64(arg);
    require(idx < f.size(), ErrorCode::invalid_argument, "delta index outside [0, 2^N)");
    f[idx] = 1.0;
    return f;
  }
  std::ifstream in(spec);
  require(static_cast<bool>(in), ErrorCode::io, "cannot open leaf value file '" + spec + "'");
  ordered_json j;
  try {
    j = ordered_json::parse(in);
  } catch (const std::exception& e) {
    fail(ErrorCode::invalid_argument, "leaf value file '" + spec + "' is not valid JSON: " + e.what());
  }
  if (j.is_object() && j.contains("values")) j = j["values"];
  require(j.is_array(), ErrorCode::invalid_argument, "leaf value file must hold an array of numbers");
  require(j.size() == f.size(), ErrorCode::shape_mismatch,
          "leaf value file has " + std::to_string(j.size()) + " entries, expected 2^N = " + std::to_string(f.size()));
  for (std::size_t i = 0; i < f.size(); ++i) {
    require(j[i].is_number(), ErrorCode::invalid_argument, "leaf values must be numbers");
    f[i] = j[i].get<double>();
    require(std::isfinite(f[i]), ErrorCode::invalid_argument, "leaf values must be finite");
  }
  return f;
}

ordered_json trace_json(const TraceResult& t) {
  ordered_json j;
  j["value"] = t.value;
  j["converged"] = t.converged;
  j["iterations"] = t.iterations;
  j["kkt_residual"] = t.kkt_residual;
  j["duality_gap"] = t.duality_gap;
  j["method"] = t.method;
  return j;
}

std::string run_extend(const RunConfig& c) {
  const double p = single_p(c);
  const TreeWeights w = c.weights.build(c.n);
  const ScalarField leaves = leaf_values(c);
  const WalkProfile profile = WalkProfile::from_weights(w, p);
  const ScalarField ext = harmonic_extend(profile, leaves);
  TraceOptions opts;
  if (c.max_iterations > 0) opts.max_iterations = c.max_iterations;
  const ExtensionRatio r = extension_ratio_details(w, p, leaves, opts);

  ordered_json j = header(c);
  j["N"] = c.n;
  j["p"] = p;
  j["weights_digest"] = hex_digest(weights_digest(w));
  j["leaf_values"] = c.leaf_values;
  j["seminorm"] = r.extension_seminorm;
  j["trace"] = trace_json(r.solve);
  j["ratio"] = r.ratio;
  j["harmonicity_residual"] = harmonicity_residual(profile, ext);
  j["vertices"] = ext.values;
  return j.dump(2) + "\n";
}

// ---- simulate ----

std::string run_simulate(const RunConfig& c) {
  const double p = single_p(c);
  const std::uint64_t seed = required_seed(c);
  require(c.trials > 0, ErrorCode::invalid_argument, "simulate needs trials > 0");
  const TreeWeights w = c.weights.build(c.n);
  const WalkProfile prof = WalkProfile::from_weights(w, p);
  std::vector<int> depths;
  if (c.start_depth > 0) {
    depths.push_back(c.start_depth);
  } else {
    for (int s = 1; s < c.n; ++s) depths.push_back(s);
  }
  require(!depths.empty(), ErrorCode::invalid_argument, "N = 1 has no interior start depth; pass start_depth");

  ordered_json j = header(c);
  j["N"] = c.n;
  j["p"] = p;
  j["weights_digest"] = hex_digest(weights_digest(w));
  j["trials"] = c.trials;
  j["shards"] = simulate_shards;
  const double z = 3.0;
  const double tr = double(c.trials);
  std::uint64_t cells = 0, inside = 0;
  ordered_json rows = ordered_json::array();
  for (int s : depths) {
    const WalkStats st = simulate_sharded(prof, s, c.trials, seed);
    const auto phat = st.p_hat();
    const auto bhat = st.leaf_hit_class_hat();
    const auto bleaf = st.leaf_hit_hat();
    std::uint64_t dc = 0, di = 0;
    auto tally = [&](double hat, double truth, double n_eff) {
      ++dc;
      if (within_band(hat, truth, n_eff, z)) ++di;
    };
    tally(st.q_hat(), prof.q[s], tr);
    for (int r = 0; r <= s; ++r) tally(phat[r], prof.P(s, r), tr);
    for (int r = 0; r <= s; ++r) tally(bleaf[r], prof.B(s, r), tr);

    ordered_json d;
    d["start_depth"] = s;
    d["q"] = prof.q[s];
    d["q_hat"] = st.q_hat();
    d["q_se"] = proportion_se(prof.q[s], c.trials);
    d["P"] = row_json(prof.P, s, s);
    d["P_hat"] = phat;
    d["B"] = row_json(prof.B, s, s);
    d["B_hat_leaf"] = bleaf;
    d["B_hat_class"] = bhat;
    d["cells"] = dc;
    d["cells_within_3se"] = di;
    rows.push_back(d);
    cells += dc;
    inside += di;
  }
  j["depths"] = rows;
  j["cells"] = cells;
  j["cells_within_3se"] = inside;
  j["fraction_within_3se"] = double(inside) / double(cells);
  return j.dump(2) + "\n";
}

// ---- kernels ----

struct NamedMatrix {
  std::string name;
  Matrix m;
};

std::string run_kernels(const RunConfig& c) {
  const double p = single_p(c);
  const TreeWeights w = c.weights.build(c.n);
  const WalkProfile prof = WalkProfile::from_weights(w, p);
  static const std::vector<std::string> known{"K", "K0", "K1", "L0", "L1", "L_bound",
                                              "reversed", "reversed_bound", "P", "B", "A"};
  std::vector<std::string> names = c.matrices;
  std::vector<std::string> skipped;
  if (names.empty()) {
    names = {"L0", "L1", "reversed"};
    if (c.n <= kernel_max_height) {
      names.insert(names.begin(), {"K", "K0", "K1"});
    } else {
      skipped = {"K", "K0", "K1"};
    }
  }
  for (const auto& n : names) {
    require(std::find(known.begin(), known.end(), n) != known.end(), ErrorCode::invalid_argument,
            "unknown matrix '" + n + "'");
  }
  std::vector<NamedMatrix> out;
  const ReversedKernel rk = reversed_kernel(w, p);
  for (const auto& n : names) {
    Matrix m;
    if (n == "K" || n == "K0" || n == "K1") {
      require(c.n <= kernel_max_height, ErrorCode::limit_exceeded,
              "edge kernels are limited to N <= " + std::to_string(kernel_max_height));
      const KernelPart part = n == "K" ? KernelPart::full : n == "K0" ? KernelPart::non_ancestral : KernelPart::ancestral;
      m = edge_kernel(prof, part);
    } else if (n == "L0") {
      m = reduced_L0(prof);
    } else if (n == "L1") {
      m = reduced_L1(prof);
    } else if (n == "L_bound") {
      m = reduced_L_bound(prof);
    } else if (n == "reversed") {
      m = rk.kernel;
    } else if (n == "reversed_bound") {
      m = rk.bound;
    } else if (n == "P") {
      m = prof.P;
    } else if (n == "B") {
      m = prof.B;
    } else {
      m = prof.A;
    }
    out.push_back({n, std::move(m)});
  }

  ordered_json h = header(c);
  h["N"] = c.n;
  h["p"] = p;
  h["weights_digest"] = hex_digest(weights_digest(w));
  h["matrices"] = names;
  if (!skipped.empty()) h["skipped"] = skipped;

  if (c.format == OutputFormat::json) {
    ordered_json mats = ordered_json::object();
    for (const auto& nm : out) {
      ordered_json rows = ordered_json::array();
      for (std::size_t i = 0; i < nm.m.rows(); ++i) rows.push_back(row_json(nm.m, i, nm.m.cols() - 1));
      mats[nm.name] = rows;
    }
    h["data"] = mats;
    return h.dump(2) + "\n";
  }
  std::ostringstream os;
  os << "# " << h.dump() << "\n";
  for (const auto& nm : out) {
    os << "# matrix " << nm.name << " " << nm.m.rows() << "x" << nm.m.cols() << "\n";
    for (std::size_t i = 0; i < nm.m.rows(); ++i) {
      for (std::size_t k = 0; k < nm.m.cols(); ++k) os << (k ? "," : "") << num(nm.m(i, k));
      os << "\n";
    }
  }
  return os.str();
}

// ---- opnorm / report ----

ordered_json constants_json(const TheoreticalConstants& k) {
  ordered_json j;
  j["p"] = k.p;
  j["q"] = k.q;
  j["C_p"] = k.C_p;
  j["C_bar"] = k.C_bar;
  j["C_hat"] = k.C_hat;
  j["C_tilde"] = k.C_tilde;
  j["T1_bound"] = k.T1_bound;
  return j;
}

std::string run_opnorm(const RunConfig& c) {
  const double p = single_p(c);
  const std::uint64_t seed = required_seed(c);
  const TreeWeights w = c.weights.build(c.n);
  const NormReport r = build_norm_report(w, p, c.samples, seed);
  ordered_json j = header(c);
  j["N"] = r.height;
  j["p"] = r.p;
  j["weights_digest"] = hex_digest(r.weights_digest);
  j["samples"] = c.samples;
  j["ratio_samples"] = r.ratio_samples;
  j["max_ratio"] = r.max_ratio;
  j["T_lower"] = r.T_lower;
  j["opnorm_S0"] = r.opnorm_S0;
  j["opnorm_S0_upper"] = r.opnorm_S0_upper;
  j["bound_2S0"] = r.bound_2S0;
  j["opnorm_reversed"] = r.opnorm_reversed;
  j["opnorm_T0"] = r.opnorm_T0;
  j["opnorm_T1"] = r.opnorm_T1;
  j["muckenhoupt_A"] = r.muckenhoupt_A;
  j["constants"] = constants_json(r.constants);
  j["max_ratio_within_C_bar"] = r.max_ratio <= r.constants.C_bar;
  j["bound_2S0_within_2C_hat"] = r.bound_2S0 <= 2.0 * r.constants.C_hat;
  return j.dump(2) + "\n";
}

std::string run_report(const RunConfig& c) {
  const std::uint64_t seed = required_seed(c);
  std::vector<WeightSpec> families = c.families;
  if (families.empty()) families.push_back(c.weights);
  const std::size_t np = c.p.size();
  const std::size_t cells = families.size() * np;
  std::vector<TreeWeights> built;
  for (const auto& f : families) built.push_back(f.build(c.n));
  std::vector<NormReport> reports(cells);
  parallel_for(cells, [&](std::size_t i) {
    const std::size_t fi = i / np, pi = i % np;
    reports[i] = build_norm_report(built[fi], c.p[pi], c.samples, mix_seed(seed, fi, pi));
  });

  static const std::vector<std::string> cols{
      "family", "N", "p", "samples", "max_ratio", "T_lower", "opnorm_S0", "opnorm_S0_upper", "bound_2S0",
      "C_bar", "C_hat", "max_ratio_within_C_bar", "bound_2S0_within_2C_hat"};
  if (c.format == OutputFormat::json) {
    ordered_json j = header(c);
    j["N"] = c.n;
    ordered_json rows = ordered_json::array();
    for (std::size_t i = 0; i < cells; ++i) {
      const auto& r = reports[i];
      ordered_json row;
      row["family"] = families[i / np].label();
      row["N"] = c.n;
      row["p"] = r.p;
      row["samples"] = c.samples;
      row["max_ratio"] = r.max_ratio;
      row["T_lower"] = r.T_lower;
      row["opnorm_S0"] = r.opnorm_S0;
      row["opnorm_S0_upper"] = r.opnorm_S0_upper;
      row["bound_2S0"] = r.bound_2S0;
      row["C_bar"] = r.constants.C_bar;
      row["C_hat"] = r.constants.C_hat;
      row["max_ratio_within_C_bar"] = r.max_ratio <= r.constants.C_bar;
      row["bound_2S0_within_2C_hat"] = r.bound_2S0 <= 2.0 * r.constants.C_hat;
      rows.push_back(row);
    }
    j["rows"] = rows;
    return j.dump(2) + "\n";
  }
  ordered_json h = header(c);
  h["N"] = c.n;
  std::ostringstream os;
  os << "# " << h.dump() << "\n";
  for (std::size_t k = 0; k < cols.size(); ++k) os << (k ? "," : "") << cols[k];
  os << "\n";
  for (std::size_t i = 0; i < cells; ++i) {
    const auto& r = reports[i];
    os << families[i / np].label() << "," << c.n << "," << num(r.p) << "," << c.samples << ","
       << num(r.max_ratio) << "," << num(r.T_lower) << "," << num(r.opnorm_S0) << ","
       << num(r.opnorm_S0_upper) << "," << num(r.bound_2S0) << "," << num(r.constants.C_bar) << ","
       << num(r.constants.C_hat) << "," << (r.max_ratio <= r.constants.C_bar ? 1 : 0) << ","
       << (r.bound_2S0 <= 2.0 * r.constants.C_hat ? 1 : 0) << "\n";
  }
  return os.str();
}

// ---- verify ----

struct Checklist {
  ordered_json items = ordered_json::array();
  bool ok = true;

  // Passes when value <= tol.
  void at_most(const std::string& name, double p, double value, double tol) {
    const bool pass = std::isfinite(value) && value <= tol;
    push(name, p, value, tol, pass);
  }
  void holds(const std::string& name, double p, bool pass) { push(name, p, pass ? 0.0 : 1.0, 0.0, pass); }
  void push(const std::string& name, double p, double value, double tol, bool pass) {
    ordered_json j;
    j["check"] = name;
    j["p"] = p;
    j["value"] = value;
    j["tolerance"] = tol;
    j["passed"] = pass;
    items.push_back(j);
    ok = ok && pass;
  }
};

void verify_one_p(const RunConfig& c, const TreeWeights& w, double p, std::uint64_t seed, Checklist& out) {
  const int n = c.n;
  const TreeShape shape(n);
  const WalkProfile prof = WalkProfile::from_weights(w, p);
  Rng rng(mix_seed(seed, static_cast<std::uint64_t>(std::llround(p * 1e6)), 0));

  // walk
  bool q_ok = prof.q[0] == 1.0 && prof.q[n] == 1.0;
  for (double v : prof.q) q_ok = q_ok && v > 0.0 && v <= 1.0;
  out.holds("q_in_unit_interval", p, q_ok);
  out.at_most("hitting_product_vs_recurrence", p,
              max_abs_diff(prof.P.data(), hitting_minimum_recurrence(prof.q).data()), 1e-12);
  double row_err = 0.0, norm_err = 0.0;
  for (int s = 0; s <= n; ++s) {
    double rs = 0.0, mass = 0.0;
    for (int r = 0; r <= s; ++r) {
      rs += prof.P(s, r);
      const double cls = r < s ? std::ldexp(1.0, n - r - 1) : std::ldexp(1.0, n - s);
      mass += cls * prof.B(s, r);
    }
    row_err = std::max(row_err, std::abs(rs - 1.0));
    norm_err = std::max(norm_err, std::abs(mass - 1.0));
  }
  out.at_most("hitting_rows_sum_to_one", p, row_err, 1e-12);
  out.at_most("leaf_hits_sum_to_one", p, norm_err, 1e-12);

  // kernels
  if (n <= 6) {
    out.at_most("kernel_closed_form_vs_leaf_sum", p,
                max_abs_diff(edge_kernel(prof).data(), edge_kernel_bruteforce(prof).data()), 1e-12);
  }
  if (n <= kernel_max_height) {
    const Matrix K = edge_kernel(prof);
    const Matrix K0 = edge_kernel(prof, KernelPart::non_ancestral);
    const Matrix K1 = edge_kernel(prof, KernelPart::ancestral);
    bool signs = true;
    for (std::size_t i = 0; i < K.rows(); ++i) {
      for (std::size_t k = 0; k < K.cols(); ++k) {
        const VertexRef x = vertex_from_flat(i + 1), y = vertex_from_flat(k + 1);
        const bool related = is_descendant(x, y) || is_descendant(y, x);
        signs = signs && (related ? K(i, k) >= 0.0 && K0(i, k) == 0.0 : K(i, k) <= 0.0 && K1(i, k) == 0.0);
      }
    }
    out.holds("kernel_sign_split", p, signs);
    double op_err = 0.0, proj_err = 0.0;
    for (int t = 0; t < 5; ++t) {
      ScalarField g(FieldRole::edges, n);
      for (auto& v : g.values) v = rng.uniform(-1.0, 1.0);
      const ScalarField Tg = induced_T(prof, g);
      op_err = std::max(op_err, max_abs_diff(Tg.values, K.apply(g.values)));
      proj_err = std::max(proj_err, max_abs_diff(induced_T(prof, Tg).values, Tg.values));
    }
    out.at_most("induced_T_vs_kernel", p, op_err, 1e-12);
    out.at_most("T_is_a_projection", p, proj_err, 1e-12);
  }
  const Matrix L0 = reduced_L0(prof), L1 = reduced_L1(prof), LB = reduced_L_bound(prof);
  double sum_err = 0.0;
  bool l_signs = true;
  for (std::size_t i = 0; i < L0.data().size(); ++i) {
    sum_err = std::max(sum_err, std::abs(L0.data()[i] + L1.data()[i]));
    l_signs = l_signs && L0.data()[i] <= 0.0 && L1.data()[i] >= 0.0 && L1.data()[i] <= LB.data()[i] * (1 + 1e-12);
  }
  out.at_most("reduced_L0_plus_L1", p, sum_err, 1e-14);
  out.holds("reduced_signs_and_bound", p, l_signs);

  const ReversedKernel rk = reversed_kernel(w, p);
  double q_err = 0.0, tele_err = 0.0;
  for (int s = 1; s <= n; ++s) {
    q_err = std::max(q_err, std::abs(rk.Q[s - 1] - prof.q[n + 1 - s]));
    double prod = rk.Q[s - 1], denom = 0.0;
    for (int k = 1; k <= s; ++k) denom += rk.alpha[k - 1];
    for (int t = s + 1; t <= n; ++t) {
      prod *= 1.0 - rk.Q[t - 1];
      denom += rk.alpha[t - 1];
      tele_err = std::max(tele_err, std::abs(prod - rk.alpha[s - 1] / denom));
    }
  }
  out.at_most("reversed_Q_matches_q", p, q_err, 1e-14);
  out.at_most("reversed_telescoping", p, tele_err, 1e-14);

  // extension
  ScalarField f(FieldRole::leaves, n);
  for (auto& v : f.values) v = rng.uniform(-1.0, 1.0);
  const ScalarField H = harmonic_extend(prof, f);
  out.at_most("extension_matches_leaves", p, max_abs_diff(restrict_to_leaves(H).values, f.values), 0.0);
  const double cst = rng.uniform(-2.0, 2.0);
  const ScalarField Hc = harmonic_extend(prof, ScalarField(FieldRole::leaves, n, std::vector<double>(f.size(), cst)));
  double cst_err = 0.0;
  for (double v : Hc.values) cst_err = std::max(cst_err, std::abs(v - cst));
  out.at_most("constants_to_constants", p, cst_err, 1e-14 * std::max(1.0, std::abs(cst)));
  out.at_most("harmonicity_residual", p, harmonicity_residual(prof, H), 1e-11);
  double eq_err = 0.0;
  for (int t = 0; t < 10; ++t) {
    const auto sigma = random_symmetry(shape, rng.next());
    eq_err = std::max(eq_err, max_abs_diff(harmonic_extend(prof, sigma.pullback(f)).values, sigma.pullback(H).values));
  }
  out.at_most("equivariance", p, eq_err, 1e-12);

  // norms
  const TheoreticalConstants k = theoretical_constants(p);
  const int samples = c.samples > 0 ? c.samples : 4;
  double worst_ratio = 0.0, worst_dev = 0.0;
  for (int i = 0; i < samples; ++i) {
    const ScalarField g = sample_leaf_function(w, p, static_cast<LeafSample>(i % leaf_sample_kinds), rng);
    const double r = extension_ratio(w, p, g);
    worst_ratio = std::max(worst_ratio, r);
    worst_dev = std::max(worst_dev, 1.0 - r);
  }
  if (p == 2.0) {
    out.at_most("extension_ratio_is_one", p, std::max(std::abs(worst_ratio - 1.0), worst_dev), 1e-6);
  } else {
    out.at_most("extension_ratio_at_least_one", p, worst_dev, 1e-6);
    out.at_most("extension_ratio_within_C_bar", p, worst_ratio, k.C_bar);
  }
  const auto s0 = opnorm_power_iteration(L1, depth_measure(w), p);
  out.at_most("reduced_norm_within_C_hat", p, s0.value, k.C_hat);
  out.at_most("script_T0_within_C_tilde", p, opnorm_power_iteration(script_T0_matrix(rk.Q), rk.w, p).value, k.C_tilde);
  out.at_most("script_T1_within_T1_bound", p, opnorm_power_iteration(script_T1_matrix(rk.Q), rk.w, p).value,
              k.T1_bound);

  // Hardy inequalities with the best Muckenhoupt constant
  double hardy_excess = 0.0;
  for (int t = 0; t < 50; ++t) {
    const std::size_t len = 1 + rng.below(static_cast<std::uint64_t>(n));
    std::vector<double> U(len), V(len), g(len);
    for (std::size_t i = 0; i < len; ++i) {
      U[i] = std::pow(10.0, rng.uniform(-2.0, 2.0));
      V[i] = std::pow(10.0, rng.uniform(-2.0, 2.0));
      g[i] = rng.uniform(-1.0, 1.0);
    }
    for (auto dir : {HardyDirection::forward, HardyDirection::reversed}) {
      const double A = muckenhoupt_best_A(U, V, p, dir);
      const HardySides hs = hardy_sides(U, V, g, p, dir);
      hardy_excess = std::max(hardy_excess, hs.lhs / (k.C_p * A * hs.rhs) - 1.0);
    }
  }
  out.at_most("hardy_with_muckenhoupt_constant", p, hardy_excess, 1e-12);
}

std::string run_verify(const RunConfig& c) {
  const TreeWeights w = c.weights.build(c.n);
  const std::uint64_t seed = c.seed.value_or(0);
  Checklist list;
  for (double p : c.p) verify_one_p(c, w, p, seed, list);
  ordered_json j = header(c);
  j["N"] = c.n;
  j["p"] = c.p;
  j["weights_digest"] = hex_digest(weights_digest(w));
  j["passed"] = list.ok;
  j["checks"] = list.items;
  return j.dump(2) + "\n";
}

std::string diagnostic(const Error& e, const RunConfig* c) {
  ordered_json j;
  j["error"] = code_name(e.code());
  j["exit_code"] = exit_code_for(e.code());
  j["message"] = e.what();
  if (c != nullptr) {
    j["command"] = c->command;
    j["config_digest"] = hex_digest(config_digest(*c));
    j["seed"] = c->seed ? ordered_json(*c->seed) : ordered_json(nullptr);
  }
  return j.dump(2) + "\n";
}

}  // namespace

int exit_code_for(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::not_converged: return 3;
    case ErrorCode::invalid_argument:
    case ErrorCode::shape_mismatch:
    case ErrorCode::limit_exceeded:
    case ErrorCode::io: return 2;
  }
  return 2;
}

int verify_exit_code(const std::string& report_json) {
  const auto j = ordered_json::parse(report_json, nullptr, false);
  if (!j.is_object() || !j.contains("checks") || !j["checks"].is_array()) return 2;
  for (const auto& item : j["checks"]) {
    if (!item.is_object() || !item.contains("passed") || item["passed"] != true) return 1;
  }
  return 0;
}

unsigned worker_threads() {
  if (const char* env = std::getenv("TREE_SOBOLEV_THREADS")) {
    char* end = nullptr;
    const long v = std::strtol(env, &end, 10);
    if (end != env && *end == '\0' && v >= 1 && v <= 256) return static_cast<unsigned>(v);
  }
  const unsigned hw = std::thread::hardware_concurrency();
  return std::clamp(hw, 1u, 16u);
}

WalkStats simulate_sharded(const WalkProfile& profile, int start_depth, std::uint64_t trials,
                           std::uint64_t seed) {
  const std::uint64_t shards = simulate_shards;
  std::vector<WalkStats> parts(shards);
  parallel_for(shards, [&](std::size_t i) {
    const std::uint64_t share = trials / shards + (i < trials % shards ? 1 : 0);
    parts[i] = collect_walk_stats(profile, start_depth, share, mix_seed(seed, std::uint64_t(start_depth), i));
  });
  WalkStats total = parts.front();
  for (std::size_t i = 1; i < parts.size(); ++i) total.merge(parts[i]);
  return total;
}

RunResult run(const RunConfig& c) {
  RunResult res;
  try {
    if (c.command == "extend") {
      res.output = run_extend(c);
    } else if (c.command == "simulate") {
      res.output = run_simulate(c);
    } else if (c.command == "kernels") {
      res.output = run_kernels(c);
    } else if (c.command == "opnorm") {
      res.output = run_opnorm(c);
    } else if (c.command == "report") {
      res.output = run_report(c);
    } else if (c.command == "verify") {
      res.output = run_verify(c);
    } else {
      fail(ErrorCode::invalid_argument, "unknown command '" + c.command + "'");
    }
    res.exit_code = c.command == "verify" ? verify_exit_code(res.output) : 0;
    if (!c.output.empty()) {
      std::ofstream os(c.output, std::ios::binary);
      require(static_cast<bool>(os), ErrorCode::io, "cannot write '" + c.output + "'");
      os << res.output;
      require(static_cast<bool>(os), ErrorCode::io, "write to '" + c.output + "' failed");
    }
  } catch (const Error& e) {
    res.exit_code = exit_code_for(e.code());
    res.output = diagnostic(e, &c);
  } catch (const std::bad_alloc&) {
    res.exit_code = 2;
    res.output = diagnostic(Error(ErrorCode::limit_exceeded, "out of memory"), &c);
  } catch (const std::exception& e) {
    res.exit_code = 2;
    res.output = diagnostic(Error(ErrorCode::invalid_argument, e.what()), &c);
  }
  return res;
}

RunResult run_config_text(const std::string& config_json) {
  RunConfig c;
  try {
    c = parse_config(config_json);
  } catch (const Error& e) {
    return {exit_code_for(e.code()), diagnostic(e, nullptr)};
  } catch (const std::exception& e) {
    return {2, diagnostic(Error(ErrorCode::invalid_argument, e.what()), nullptr)};
  }
  return run(c);
}

}  // namespace tsob
