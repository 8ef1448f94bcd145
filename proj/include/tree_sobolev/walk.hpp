#pragma once

// The p-adapted invariant random walk on the tree.
//
// The walk only sees depths: from depth s < N it moves to a child with
// probability x[s] (each child equally likely) and to the parent otherwise;
// it stops at the leaves. Everything an extension needs is a function of the
// escape probabilities q[s]:
//
//   q[s]      P(walk from depth s reaches a leaf before depth s-1)
//   P(s, r)   P(minimum depth visited is r | start at depth s)
//   B(s, r)   P(walk from x, d(x) = s, ends at a fixed leaf w with dlca(x, w) = r)
//   A(s, r)   B(s, r) - B(s-1, min(s-1, r)), the gradient of B along an edge

#include <cstdint>
#include <vector>

#include "tree_sobolev/common.hpp"
#include "tree_sobolev/random.hpp"
#include "tree_sobolev/tree.hpp"

namespace tsob {

// q[s] = (2^s W_s)^{-1/(p-1)} / sum_{k>=s} (2^k W_k)^{-1/(p-1)}, q[0] = 1.
std::vector<double> q_from_weights(const TreeWeights& weights, double p);

// Step-down probabilities solving q_s = x_s (q_{s+1} + (1 - q_{s+1}) q_s).
std::vector<double> transitions_from_q(const std::vector<double>& q);

// Product form P(s, r) = q_r prod_{k=r+1}^{s} (1 - q_k), with P(N, r) = [r = N].
Matrix hitting_minimum(const std::vector<double>& q);
// Same matrix from P(s, r) = q_s [s = r] + (1 - q_s) P(s-1, r).
Matrix hitting_minimum_recurrence(const std::vector<double>& q);

// B(s, r) = sum_{k <= r} 2^{k-N} P(s, k).
Matrix leaf_hit_coeffs(const Matrix& P);
// A(s, r) for 1 <= s <= N, 0 <= r <= s (row 0 unused and zero).
Matrix increment_coeffs(const Matrix& B);

void validate_q(const std::vector<double>& q);

struct WalkProfile {
  double p = 2.0;
  int height = 0;
  std::vector<double> q;  // q[0..N]
  std::vector<double> x;  // x[0..N-1]
  Matrix P;               // (N+1) x (N+1), lower triangular
  Matrix B;
  Matrix A;

  static WalkProfile from_weights(const TreeWeights& weights, double p);
  // Arbitrary escape probabilities (q[0] = q[N] = 1, others in (0, 1]).
  // `p` is carried along for reporting only.
  static WalkProfile from_q(std::vector<double> q, double p = 2.0);
  // q == 1 everywhere: the subtree-averaging walk.
  static WalkProfile averaging(int height);
};

void require_p(double p);

struct WalkOutcome {
  std::uint64_t leaf = 0;  // index among the leaves
  int min_depth = 0;
  std::uint64_t steps = 0;
};

inline constexpr std::uint64_t max_walk_steps = 10'000'000;

WalkOutcome simulate_walk(const WalkProfile& profile, const VertexRef& start, Rng& rng);
WalkOutcome simulate_walk(const WalkProfile& profile, const VertexRef& start, std::uint64_t seed);

// Counts from repeated walks started at the leftmost vertex of `start_depth`.
struct WalkStats {
  int height = 0;
  int start_depth = 0;
  std::uint64_t trials = 0;
  std::vector<std::uint64_t> min_depth_counts;  // [0..N]
  std::vector<std::uint64_t> leaf_counts;       // per leaf

  // Empirical P(start_depth, r).
  std::vector<double> p_hat() const;
  double q_hat() const;
  // Hit frequency of one fixed leaf in each dlca class r = 0..start_depth.
  std::vector<double> leaf_hit_hat() const;
  // Class-averaged per-leaf hit frequency, a lower-variance estimate of B(s, r).
  std::vector<double> leaf_hit_class_hat() const;
  // Leaf whose dlca with the start vertex equals r.
  std::uint64_t representative_leaf(int r) const;
  std::uint64_t class_size(int r) const;

  void merge(const WalkStats& other);
};

WalkStats collect_walk_stats(const WalkProfile& profile, int start_depth, std::uint64_t trials,
                             std::uint64_t seed);

// Standard error of a Bernoulli proportion.
double proportion_se(double prob, std::uint64_t trials);
// Wilson score interval [lo, hi] for `successes` out of `trials` at z.
std::pair<double, double> wilson_interval(double successes, double trials, double z);
// |hat - truth| within z standard errors of the true proportion, or truth inside
// the Wilson interval around hat (covers probabilities at or near 0 and 1).
bool within_band(double hat, double truth, double trials, double z);

}  // namespace tsob
