#pragma once

#include <cmath>
#include <vector>

#include "tree_sobolev/random.hpp"
#include "tree_sobolev/tree.hpp"

namespace tsob::testing {

// Log-uniform weights in [1e-2, 1e2].
inline TreeWeights random_weights(int height, Rng& rng) {
  std::vector<double> w(static_cast<std::size_t>(height));
  for (auto& v : w) v = std::pow(10.0, rng.uniform(-2.0, 2.0));
  return TreeWeights(std::move(w));
}

inline double random_p(Rng& rng) { return rng.uniform(1.2, 5.0); }

// Escape probabilities with q[0] = q[N] = 1 and interior values in (0.05, 0.95).
inline std::vector<double> random_q(int height, Rng& rng) {
  std::vector<double> q(static_cast<std::size_t>(height + 1), 1.0);
  for (int s = 1; s < height; ++s) q[s] = rng.uniform(0.05, 0.95);
  return q;
}

inline ScalarField random_field(FieldRole role, int height, Rng& rng) {
  ScalarField f(role, height);
  for (auto& v : f.values) v = rng.uniform(-1.0, 1.0);
  return f;
}

inline double rel_diff(double a, double b) {
  const double scale = std::max({std::abs(a), std::abs(b), 1e-300});
  return std::abs(a - b) / scale;
}

}  // namespace tsob::testing
