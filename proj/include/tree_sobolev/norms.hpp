#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "tree_sobolev/common.hpp"
#include "tree_sobolev/random.hpp"
#include "tree_sobolev/tree.hpp"
#include "tree_sobolev/walk.hpp"

namespace tsob {

// (sum_k W_k sum_{d(x)=k} |F(x) - F(parent x)|^p)^{1/p}
double sobolev_seminorm(const TreeWeights& weights, const ScalarField& vertices, double p);
// (sum_k W_k sum_{d(x)=k} |g(x)|^p)^{1/p}
double lp_edge_norm(const TreeWeights& weights, const ScalarField& edges, double p);

enum class DepthMeasure {
  tree,      // 2^k W_k at depth k
  reversed,  // w_k = 2^{N+1-k} W_{N+1-k}
};

double weighted_lp(std::span<const double> values, std::span<const double> measure, double p);
double weighted_lp(std::span<const double> values, const TreeWeights& weights, DepthMeasure which,
                   double p);

// Minimizes 1/2 sum_e h_e (F(e) - F(parent e))^2 + sum_v g_v F(v) over the
// internal vertices with the leaves clamped to `leaves`, by one bottom-up
// elimination and one top-down substitution. `h` is edge indexed; `g` holds
// one entry per internal vertex or is empty.
std::vector<double> solve_tree_quadratic(int height, std::span<const double> h,
                                         std::span<const double> g, std::span<const double> leaves);

struct TraceOptions {
  int max_iterations = 500;
  double relative_decrease_tol = 1e-12;
  double kkt_tol = 1e-8;         // relative to kkt_scale()
  double regularization = 1e-12; // floor on |edge difference|, relative to the data range
  double gap_tol = 1e-10;        // relative duality gap accepted when the KKT test is out of reach
};

struct TraceResult {
  double value = 0.0;            // trace seminorm
  ScalarField extension{FieldRole::vertices, 1};
  int iterations = 0;
  bool converged = false;
  double kkt_residual = 0.0;     // max |dJ/dF(v)| / scale over internal v
  double duality_gap = 0.0;      // (J - dual bound) / J at the returned extension
  std::string method;            // "exact", "newton-irls", "coordinate-descent"
};

// p-th power of the seminorm and its gradient with respect to the internal values.
double sobolev_objective(const TreeWeights& weights, std::span<const double> vertices, double p);
std::vector<double> objective_gradient(const TreeWeights& weights, std::span<const double> vertices,
                                       double p);
double kkt_scale(const TreeWeights& weights, std::span<const double> leaves, double p);

// Lower bound on the minimal p-th power from the flux of `vertices`, made
// divergence-free by pushing each internal imbalance down to the leaves.
// Equals the objective at the exact minimizer.
double trace_dual_bound(const TreeWeights& weights, std::span<const double> vertices, double p);

TraceResult trace_seminorm(const TreeWeights& weights, const ScalarField& leaves, double p,
                           const TraceOptions& options = {});

struct PowerIterationOptions {
  double tol = 1e-12;
  int max_iterations = 1'000'000;
  // eta * max|M| added to every entry when M has zero entries, so iterates
  // stay strictly positive. Only ever increases the estimate.
  double perturbation = 1e-14;
};

struct PowerIterationResult {
  double value = 0.0;  // ||M F|| / ||F|| at the final iterate (lower bound)
  double upper = 0.0;  // max_t (M*(MF)^{p-1})(t) / F(t)^{p-1}, to the 1/p (upper bound)
  int iterations = 0;
  bool converged = false;
  std::vector<double> maximizer;
};

// p -> p operator norm of a non-negative matrix on L^p(measure) by the
// nonlinear power iteration F <- (M*(MF)^{p-1})^{1/(p-1)}; M* is the adjoint
// for <F, G> = sum_k measure_k F_k G_k.
PowerIterationResult opnorm_power_iteration(const Matrix& M, std::span<const double> measure,
                                            double p, const PowerIterationOptions& options = {});

double operator_ratio(const Matrix& M, std::span<const double> F, std::span<const double> measure,
                      double p);

enum class HardyDirection {
  forward,   // partial sums sum_{l<=k} f(l)
  reversed,  // tail sums sum_{l>=k} f(l)
};

double muckenhoupt_best_A(std::span<const double> U, std::span<const double> V, double p,
                          HardyDirection direction);

struct HardySides {
  double lhs = 0.0;  // (sum_k |U_k (partial or tail sum of f)_k|^p)^{1/p}
  double rhs = 0.0;  // (sum_k |V_k f_k|^p)^{1/p}
};
HardySides hardy_sides(std::span<const double> U, std::span<const double> V,
                       std::span<const double> f, double p, HardyDirection direction);

// script-T0 F(s) = Q_s sum_{t<=s} F(t).
std::vector<double> script_T0_apply(std::span<const double> Q, std::span<const double> F);
// script-T1 F(s) = alpha_s sum_{t>s} F(t) / sum_{j<=t} alpha_j.
std::vector<double> script_T1_apply(std::span<const double> alpha, std::span<const double> F);
Matrix script_T0_matrix(std::span<const double> Q);
// Product form Q_s prod_{k=s+1}^{t} (1 - Q_k) for t > s.
Matrix script_T1_matrix(std::span<const double> Q);

struct TheoreticalConstants {
  double p = 0.0;
  double q = 0.0;
  double C_p = 0.0;        // p^{1/p} q^{1/q}
  double C_bar = 0.0;      // bound on the extension operator
  double C_hat = 0.0;      // bound on the reduced operator, C_bar / 2
  double C_tilde = 0.0;    // bound on script-T0
  double T1_bound = 0.0;   // bound on script-T1
};

TheoreticalConstants theoretical_constants(double p);

// ||H f|| / trace(f); 1 when the trace seminorm vanishes (constant f).
struct ExtensionRatio {
  double ratio = 1.0;
  double extension_seminorm = 0.0;
  double trace = 0.0;
  TraceResult solve;
};

ExtensionRatio extension_ratio_details(const TreeWeights& weights, double p,
                                       const ScalarField& leaves, const TraceOptions& options = {});
double extension_ratio(const TreeWeights& weights, double p, const ScalarField& leaves,
                       const TraceOptions& options = {});

enum class LeafSample { uniform, spiky, multiscale, bit_linear };
inline constexpr int leaf_sample_kinds = 4;

// Random test data on the leaves; kind cycles through generic and structured shapes.
ScalarField sample_leaf_function(const TreeWeights& weights, double p, LeafSample kind, Rng& rng);

struct NormReport {
  int height = 0;
  double p = 0.0;
  std::uint64_t weights_digest = 0;
  std::vector<double> ratio_samples;
  double max_ratio = 0.0;
  double opnorm_S0 = 0.0;        // power-iteration value for ||S0|| on L^p over depths
  double opnorm_S0_upper = 0.0;  // certified upper bound for ||S0||
  double opnorm_reversed = 0.0;  // same operator after depth reversal, on the w-norm
  double bound_2S0 = 0.0;        // 2 ||S0||, upper bound for ||T||
  double T_lower = 0.0;          // best observed ||T g|| / ||g||
  double opnorm_T0 = 0.0;
  double opnorm_T1 = 0.0;
  double muckenhoupt_A = 0.0;    // best A for the script-T0 Hardy setup
  TheoreticalConstants constants;
};

NormReport build_norm_report(const TreeWeights& weights, double p, int samples, std::uint64_t seed);

}  // namespace tsob
