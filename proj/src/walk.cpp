#include "tree_sobolev/walk.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace tsob {

void require_p(double p) {
  require(std::isfinite(p) && p > 1.0, ErrorCode::invalid_argument,
          "p must lie in (1, inf), got " + std::to_string(p));
}

std::vector<double> q_from_weights(const TreeWeights& weights, double p) {
  require_p(p);
  const int n = weights.height();
  // log of (2^k W_k)^{-1/(p-1)}, k = 1..N
  std::vector<double> log_terms(static_cast<std::size_t>(n + 1), 0.0);
  for (int k = 1; k <= n; ++k) {
    log_terms[k] = -(k * std::log(2.0) + std::log(weights.at(k))) / (p - 1.0);
  }
  std::vector<double> q(static_cast<std::size_t>(n + 1), 1.0);
  for (int s = 1; s <= n; ++s) {
    const double top = *std::max_element(log_terms.begin() + s, log_terms.end());
    double denom = 0.0;
    for (int k = s; k <= n; ++k) denom += std::exp(log_terms[k] - top);
    q[s] = std::exp(log_terms[s] - top) / denom;
  }
  q[n] = 1.0;
  return q;
}

void validate_q(const std::vector<double>& q) {
  require(q.size() >= 2, ErrorCode::invalid_argument, "q needs at least two entries");
  require(q.front() == 1.0 && q.back() == 1.0, ErrorCode::invalid_argument,
          "q[0] and q[N] must equal 1");
  for (double v : q) {
    require(std::isfinite(v) && v > 0.0 && v <= 1.0, ErrorCode::invalid_argument,
            "q entries must lie in (0, 1]");
  }
}

std::vector<double> transitions_from_q(const std::vector<double>& q) {
  validate_q(q);
  const std::size_t n = q.size() - 1;
  std::vector<double> x(n);
  for (std::size_t s = 0; s < n; ++s) {
    const double denom = q[s + 1] + (1.0 - q[s + 1]) * q[s];
    require(denom > 0.0, ErrorCode::invalid_argument, "corrupted q: non-positive denominator");
    x[s] = q[s] / denom;
  }
  return x;
}

Matrix hitting_minimum(const std::vector<double>& q) {
  validate_q(q);
  const std::size_t n = q.size() - 1;
  Matrix P(n + 1, n + 1);
  for (std::size_t s = 0; s < n; ++s) {
    for (std::size_t r = 0; r <= s; ++r) {
      double prod = q[r];
      for (std::size_t k = r + 1; k <= s; ++k) prod *= 1.0 - q[k];
      P(s, r) = prod;
    }
  }
  P(n, n) = 1.0;
  return P;
}

Matrix hitting_minimum_recurrence(const std::vector<double>& q) {
  validate_q(q);
  const std::size_t n = q.size() - 1;
  Matrix P(n + 1, n + 1);
  P(0, 0) = 1.0;
  for (std::size_t s = 1; s <= n; ++s) {
    for (std::size_t r = 0; r < s; ++r) P(s, r) = (1.0 - q[s]) * P(s - 1, r);
    P(s, s) = q[s];
  }
  return P;
}

Matrix leaf_hit_coeffs(const Matrix& P) {
  require(P.rows() == P.cols() && P.rows() >= 2, ErrorCode::shape_mismatch,
          "hitting matrix must be square");
  const std::size_t n = P.rows() - 1;
  Matrix B(n + 1, n + 1);
  for (std::size_t s = 0; s <= n; ++s) {
    double acc = 0.0;
    for (std::size_t r = 0; r <= s; ++r) {
      acc += std::ldexp(P(s, r), static_cast<int>(r) - static_cast<int>(n));
      B(s, r) = acc;
    }
  }
  return B;
}

Matrix increment_coeffs(const Matrix& B) {
  const std::size_t n = B.rows() - 1;
  Matrix A(n + 1, n + 1);
  for (std::size_t s = 1; s <= n; ++s) {
    for (std::size_t r = 0; r <= s; ++r) A(s, r) = B(s, r) - B(s - 1, std::min(s - 1, r));
  }
  return A;
}

WalkProfile WalkProfile::from_q(std::vector<double> q, double p) {
  validate_q(q);
  WalkProfile prof;
  prof.p = p;
  prof.height = static_cast<int>(q.size()) - 1;
  TreeShape check(prof.height);
  prof.x = transitions_from_q(q);
  prof.P = hitting_minimum(q);
  prof.B = leaf_hit_coeffs(prof.P);
  prof.A = increment_coeffs(prof.B);
  prof.q = std::move(q);
  return prof;
}

WalkProfile WalkProfile::from_weights(const TreeWeights& weights, double p) {
  return from_q(q_from_weights(weights, p), p);
}

WalkProfile WalkProfile::averaging(int height) {
  return from_q(std::vector<double>(static_cast<std::size_t>(height + 1), 1.0));
}

WalkOutcome simulate_walk(const WalkProfile& profile, const VertexRef& start, Rng& rng) {
  const int n = profile.height;
  require(valid_vertex(TreeShape(n), start), ErrorCode::shape_mismatch,
          "start vertex outside the tree");
  WalkOutcome out;
  int depth = start.depth;
  std::uint64_t index = start.index;
  out.min_depth = depth;
  while (depth < n) {
    require(out.steps < max_walk_steps, ErrorCode::limit_exceeded,
            "walk exceeded the trajectory cap; transition probabilities are degenerate");
    ++out.steps;
    const double u = rng.uniform();
    const double down = profile.x[static_cast<std::size_t>(depth)];
    if (u < down) {
      index = (index << 1) | (u < 0.5 * down ? 0u : 1u);
      ++depth;
    } else {
      index >>= 1;
      --depth;
      out.min_depth = std::min(out.min_depth, depth);
    }
  }
  out.leaf = index;
  return out;
}

WalkOutcome simulate_walk(const WalkProfile& profile, const VertexRef& start, std::uint64_t seed) {
  Rng rng(seed);
  return simulate_walk(profile, start, rng);
}

std::vector<double> WalkStats::p_hat() const {
  std::vector<double> out(min_depth_counts.size(), 0.0);
  if (trials == 0) return out;
  for (std::size_t r = 0; r < out.size(); ++r) out[r] = double(min_depth_counts[r]) / double(trials);
  return out;
}

double WalkStats::q_hat() const {
  return trials == 0 ? 0.0 : double(min_depth_counts[start_depth]) / double(trials);
}

std::uint64_t WalkStats::representative_leaf(int r) const {
  if (r >= start_depth) return 0;
  return std::uint64_t{1} << (height - r - 1);
}

std::uint64_t WalkStats::class_size(int r) const {
  if (r >= start_depth) return std::uint64_t{1} << (height - start_depth);
  return std::uint64_t{1} << (height - r - 1);
}

std::vector<double> WalkStats::leaf_hit_hat() const {
  std::vector<double> out(static_cast<std::size_t>(start_depth + 1), 0.0);
  if (trials == 0) return out;
  for (int r = 0; r <= start_depth; ++r) {
    out[r] = double(leaf_counts[representative_leaf(r)]) / double(trials);
  }
  return out;
}

std::vector<double> WalkStats::leaf_hit_class_hat() const {
  std::vector<double> hits(static_cast<std::size_t>(start_depth + 1), 0.0);
  if (trials == 0) return hits;
  const VertexRef start{start_depth, 0};
  for (std::uint64_t w = 0; w < leaf_counts.size(); ++w) {
    hits[dlca(start, VertexRef{height, w})] += double(leaf_counts[w]);
  }
  for (int r = 0; r <= start_depth; ++r) hits[r] /= double(trials) * double(class_size(r));
  return hits;
}

void WalkStats::merge(const WalkStats& other) {
  require(other.height == height && other.start_depth == start_depth, ErrorCode::shape_mismatch,
          "cannot merge walk statistics of different configurations");
  trials += other.trials;
  for (std::size_t i = 0; i < min_depth_counts.size(); ++i) min_depth_counts[i] += other.min_depth_counts[i];
  for (std::size_t i = 0; i < leaf_counts.size(); ++i) leaf_counts[i] += other.leaf_counts[i];
}

WalkStats collect_walk_stats(const WalkProfile& profile, int start_depth, std::uint64_t trials,
                             std::uint64_t seed) {
  const TreeShape shape(profile.height);
  require(start_depth >= 0 && start_depth <= shape.height(), ErrorCode::invalid_argument,
          "start depth outside [0, N]");
  WalkStats stats;
  stats.height = shape.height();
  stats.start_depth = start_depth;
  stats.trials = trials;
  stats.min_depth_counts.assign(static_cast<std::size_t>(shape.height() + 1), 0);
  stats.leaf_counts.assign(shape.leaf_count(), 0);
  Rng rng(seed);
  const VertexRef start{start_depth, 0};
  for (std::uint64_t t = 0; t < trials; ++t) {
    const WalkOutcome o = simulate_walk(profile, start, rng);
    ++stats.min_depth_counts[o.min_depth];
    ++stats.leaf_counts[o.leaf];
  }
  return stats;
}

double proportion_se(double prob, std::uint64_t trials) {
  if (trials == 0) return 0.0;
  return std::sqrt(std::max(prob * (1.0 - prob), 0.0) / double(trials));
}

std::pair<double, double> wilson_interval(double successes, double trials, double z) {
  if (trials <= 0) return {0.0, 1.0};
  const double phat = successes / trials;
  const double z2 = z * z;
  const double denom = 1.0 + z2 / trials;
  const double center = (phat + z2 / (2.0 * trials)) / denom;
  const double half =
      z / denom * std::sqrt(phat * (1.0 - phat) / trials + z2 / (4.0 * trials * trials));
  return {std::max(0.0, center - half), std::min(1.0, center + half)};
}

bool within_band(double hat, double truth, double trials, double z) {
  const double se = std::sqrt(std::max(truth * (1.0 - truth), 0.0) / trials);
  if (std::abs(hat - truth) <= z * se + 1e-15) return true;
  const auto [lo, hi] = wilson_interval(hat * trials, trials, z);
  return truth >= lo - 1e-15 && truth <= hi + 1e-15;
}

}  // namespace tsob
