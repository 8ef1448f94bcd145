#include "tree_sobolev/kernels.hpp"

#include <algorithm>
#include <cmath>

namespace tsob {

namespace {

void require_edge(const WalkProfile& profile, const VertexRef& v) {
  const TreeShape shape(profile.height);
  require(valid_vertex(shape, v), ErrorCode::shape_mismatch, "vertex outside the tree");
  require(v.depth >= 1, ErrorCode::invalid_argument, "the root is not an edge");
}

void require_kernel_height(int height) {
  require(height <= kernel_max_height, ErrorCode::limit_exceeded,
          "edge kernels are only materialized for N <= " + std::to_string(kernel_max_height));
}

}  // namespace

double kernel_closed_form(const WalkProfile& profile, const VertexRef& x, const VertexRef& y) {
  require_edge(profile, x);
  require_edge(profile, y);
  const int s = x.depth;
  const int t = y.depth;
  const int r = dlca(x, y);
  const double qs = profile.q[static_cast<std::size_t>(s)];
  double acc = 0.0;
  if (r < std::min(s, t)) {
    for (int k = 0; k <= r; ++k) acc += std::ldexp(profile.P(s - 1, k), k);
    return -qs * std::ldexp(acc, -t);
  }
  for (int k = 0; k < r; ++k) acc += (std::ldexp(1.0, r) - std::ldexp(1.0, k)) * profile.P(s - 1, k);
  return qs * std::ldexp(acc, -t);
}

double kernel_bruteforce(const WalkProfile& profile, const VertexRef& x, const VertexRef& y) {
  require_edge(profile, x);
  require_edge(profile, y);
  const int n = profile.height;
  const std::uint64_t first = y.index << (n - y.depth);
  const std::uint64_t last = (y.index + 1) << (n - y.depth);
  double acc = 0.0;
  for (std::uint64_t w = first; w < last; ++w) {
    acc += profile.A(x.depth, dlca(x, VertexRef{n, w}));
  }
  return acc;
}

Matrix edge_kernel(const WalkProfile& profile, KernelPart part) {
  require_kernel_height(profile.height);
  const TreeShape shape(profile.height);
  const std::size_t m = shape.edge_count();
  Matrix K(m, m);
  for (std::size_t i = 0; i < m; ++i) {
    const VertexRef x = vertex_from_flat(i + 1);
    for (std::size_t j = 0; j < m; ++j) {
      const VertexRef y = vertex_from_flat(j + 1);
      if (part != KernelPart::full) {
        const bool ancestral = dlca(x, y) == std::min(x.depth, y.depth);
        if (ancestral != (part == KernelPart::ancestral)) continue;
      }
      K(i, j) = kernel_closed_form(profile, x, y);
    }
  }
  return K;
}

Matrix edge_kernel_bruteforce(const WalkProfile& profile) {
  require_kernel_height(profile.height);
  const TreeShape shape(profile.height);
  const std::size_t m = shape.edge_count();
  Matrix K(m, m);
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t j = 0; j < m; ++j) {
      K(i, j) = kernel_bruteforce(profile, vertex_from_flat(i + 1), vertex_from_flat(j + 1));
    }
  }
  return K;
}

Matrix reduced_L0(const WalkProfile& profile) {
  const int n = profile.height;
  Matrix L(n, n);
  for (int s = 1; s <= n; ++s) {
    for (int t = 1; t <= n; ++t) {
      const int m = std::min(s, t);
      double acc = 0.0;
      for (int k = 0; k < m; ++k) acc += (1.0 - std::ldexp(1.0, k - m)) * profile.P(s - 1, k);
      L(s - 1, t - 1) = -profile.q[s] * acc;
    }
  }
  return L;
}

Matrix reduced_L1(const WalkProfile& profile) {
  const int n = profile.height;
  Matrix L(n, n);
  for (int s = 1; s <= n; ++s) {
    for (int t = 1; t <= n; ++t) {
      const int m = std::min(s, t);
      // 2^{-m} sum_{k<m} (2^m - 2^k) P(s-1, k), as in the ancestral row sum
      double acc = 0.0;
      for (int k = 0; k < m; ++k) acc += (std::ldexp(1.0, m) - std::ldexp(1.0, k)) * profile.P(s - 1, k);
      L(s - 1, t - 1) = profile.q[s] * std::ldexp(acc, -m);
    }
  }
  return L;
}

Matrix reduced_L_bound(const WalkProfile& profile) {
  const int n = profile.height;
  Matrix bound(n, n);
  for (int s = 1; s <= n; ++s) {
    for (int t = 1; t <= n; ++t) {
      const int m = std::min(s, t);
      double prod = profile.q[s];
      for (int k = m; k <= s - 1; ++k) prod *= 1.0 - profile.q[k];
      bound(s - 1, t - 1) = prod;
    }
  }
  return bound;
}

Matrix reduced_from_edge_kernel(const WalkProfile& profile, KernelPart part) {
  require_kernel_height(profile.height);
  const int n = profile.height;
  Matrix L(n, n);
  for (int s = 1; s <= n; ++s) {
    const VertexRef x{s, 0};
    for (int t = 1; t <= n; ++t) {
      double acc = 0.0;
      for (std::uint64_t j = 0; j < (std::uint64_t{1} << t); ++j) {
        const VertexRef y{t, j};
        if (part != KernelPart::full) {
          const bool ancestral = dlca(x, y) == std::min(s, t);
          if (ancestral != (part == KernelPart::ancestral)) continue;
        }
        acc += kernel_bruteforce(profile, x, y);
      }
      L(s - 1, t - 1) = acc;
    }
  }
  return L;
}

std::vector<double> depth_measure(const TreeWeights& weights) {
  std::vector<double> mu(weights.values().size());
  for (int k = 1; k <= weights.height(); ++k) mu[k - 1] = std::ldexp(weights.at(k), k);
  return mu;
}

std::vector<double> reversed_measure(const TreeWeights& weights) {
  std::vector<double> mu = depth_measure(weights);
  std::reverse(mu.begin(), mu.end());
  return mu;
}

ReversedKernel reversed_kernel(const TreeWeights& weights, double p) {
  require_p(p);
  const int n = weights.height();
  ReversedKernel out;
  out.w = reversed_measure(weights);
  // alpha is kept up to a common positive factor: Q and every identity that
  // uses alpha are invariant under rescaling, and w^{-1/(p-1)} overflows
  // easily near p = 1.
  std::vector<double> log_alpha(static_cast<std::size_t>(n));
  for (int s = 0; s < n; ++s) log_alpha[s] = -std::log(out.w[s]) / (p - 1.0);
  const double top = *std::max_element(log_alpha.begin(), log_alpha.end());
  out.alpha.resize(static_cast<std::size_t>(n));
  for (int s = 0; s < n; ++s) out.alpha[s] = std::exp(log_alpha[s] - top);

  out.Q.resize(static_cast<std::size_t>(n));
  for (int s = 1; s <= n; ++s) {
    const double local = *std::max_element(log_alpha.begin(), log_alpha.begin() + s);
    double denom = 0.0;
    for (int k = 1; k <= s; ++k) denom += std::exp(log_alpha[k - 1] - local);
    out.Q[s - 1] = std::exp(log_alpha[s - 1] - local) / denom;
  }
  out.Q[0] = 1.0;

  const Matrix L = reduced_L1(WalkProfile::from_weights(weights, p));
  out.kernel = Matrix(n, n);
  out.bound = Matrix(n, n);
  for (int s = 1; s <= n; ++s) {
    for (int t = 1; t <= n; ++t) {
      out.kernel(s - 1, t - 1) = L(n - s, n - t);
      double b = out.Q[s - 1];
      for (int k = s + 1; k <= t; ++k) b *= 1.0 - out.Q[k - 1];
      out.bound(s - 1, t - 1) = b;
    }
  }
  return out;
}

}  // namespace tsob
