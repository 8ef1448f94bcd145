#include "tree_sobolev/norms.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "tree_sobolev/extension.hpp"
#include "tree_sobolev/kernels.hpp"

namespace tsob {

namespace {

void require_weights_match(const TreeWeights& weights, int height, const char* who) {
  require(weights.height() == height, ErrorCode::shape_mismatch,
          std::string(who) + ": weights have " + std::to_string(weights.height()) +
              " depths, field has height " + std::to_string(height));
}

// |d|^{p-1} sign(d)
double signed_pow(double d, double e) { return std::copysign(std::pow(std::abs(d), e), d); }

std::vector<double> edge_weight_vector(const TreeWeights& weights) {
  const TreeShape shape(weights.height());
  std::vector<double> h(shape.edge_count());
  for (int k = 1; k <= shape.height(); ++k) {
    const std::size_t off = TreeShape::level_offset(k) - 1;
    std::fill_n(h.begin() + static_cast<std::ptrdiff_t>(off), shape.level_size(k), weights.at(k));
  }
  return h;
}

double max_abs(std::span<const double> v) {
  double m = 0.0;
  for (double x : v) m = std::max(m, std::abs(x));
  return m;
}

}  // namespace

double lp_edge_norm(const TreeWeights& weights, const ScalarField& g, double p) {
  require_p(p);
  require_role(g, FieldRole::edges, "lp_edge_norm");
  require_weights_match(weights, g.height, "lp_edge_norm");
  double total = 0.0;
  for (int k = 1; k <= g.height; ++k) {
    const std::size_t off = TreeShape::level_offset(k) - 1;
    double level = 0.0;
    for (std::size_t j = 0; j < (std::size_t{1} << k); ++j) level += std::pow(std::abs(g[off + j]), p);
    total += weights.at(k) * level;
  }
  return std::pow(total, 1.0 / p);
}

double sobolev_seminorm(const TreeWeights& weights, const ScalarField& f, double p) {
  require_role(f, FieldRole::vertices, "sobolev_seminorm");
  return lp_edge_norm(weights, gradient(f), p);
}

double weighted_lp(std::span<const double> values, std::span<const double> measure, double p) {
  require_p(p);
  require(values.size() == measure.size(), ErrorCode::shape_mismatch,
          "weighted_lp: values and measure lengths differ");
  double total = 0.0;
  for (std::size_t k = 0; k < values.size(); ++k) total += measure[k] * std::pow(std::abs(values[k]), p);
  return std::pow(total, 1.0 / p);
}

double weighted_lp(std::span<const double> values, const TreeWeights& weights, DepthMeasure which,
                   double p) {
  const std::vector<double> mu =
      which == DepthMeasure::tree ? depth_measure(weights) : reversed_measure(weights);
  return weighted_lp(values, mu, p);
}

namespace {

// Below each internal v the reduced objective is A_v/2 x^2 - B_v x.
struct TreeElimination {
  std::vector<double> A;
  std::vector<double> B;
};

TreeElimination eliminate(int height, std::span<const double> h, std::span<const double> g,
                          std::span<const double> leaves) {
  const TreeShape shape(height);
  const std::size_t internal = TreeShape::level_offset(height);
  require(h.size() == shape.edge_count(), ErrorCode::shape_mismatch, "one weight per edge required");
  require(g.empty() || g.size() == internal, ErrorCode::shape_mismatch,
          "linear term needs one entry per internal vertex");
  require(leaves.size() == shape.leaf_count(), ErrorCode::shape_mismatch,
          "one boundary value per leaf required");
  TreeElimination e{std::vector<double>(internal, 0.0), std::vector<double>(internal, 0.0)};
  auto& A = e.A;
  auto& B = e.B;
  if (!g.empty()) {
    for (std::size_t v = 0; v < internal; ++v) B[v] = -g[v];
  }
  for (std::size_t v = internal; v-- > 0;) {
    for (std::size_t c = 2 * v + 1; c <= 2 * v + 2; ++c) {
      const double hc = h[c - 1];
      if (c >= internal) {
        A[v] += hc;
        B[v] += hc * leaves[c - internal];
      } else {
        const double denom = hc + A[c];
        A[v] += hc * A[c] / denom;
        B[v] += hc * B[c] / denom;
      }
    }
  }
  return e;
}

// Edge fluxes h_c (x_c - x_parent) of the minimizer with zero leaf values,
// computed from the elimination so that stiff edges lose no precision.
std::vector<double> tree_quadratic_fluxes(int height, std::span<const double> h,
                                          std::span<const double> g) {
  const TreeShape shape(height);
  const std::size_t internal = TreeShape::level_offset(height);
  const std::vector<double> zeros(shape.leaf_count(), 0.0);
  const TreeElimination e = eliminate(height, h, g, zeros);
  std::vector<double> x(internal);
  x[0] = e.B[0] / e.A[0];
  std::vector<double> tau(shape.vertex_count(), 0.0);
  for (std::size_t c = 1; c < shape.vertex_count(); ++c) {
    const double hc = h[c - 1];
    const double xp = x[(c - 1) / 2];
    if (c < internal) {
      tau[c] = hc * (e.B[c] - e.A[c] * xp) / (hc + e.A[c]);
      x[c] = (hc * xp + e.B[c]) / (hc + e.A[c]);
    } else {
      tau[c] = -hc * xp;
    }
  }
  return tau;
}

}  // namespace

std::vector<double> solve_tree_quadratic(int height, std::span<const double> h,
                                         std::span<const double> g, std::span<const double> leaves) {
  const TreeShape shape(height);
  const std::size_t internal = TreeShape::level_offset(height);
  const TreeElimination e = eliminate(height, h, g, leaves);
  std::vector<double> x(shape.vertex_count());
  x[0] = e.B[0] / e.A[0];
  for (std::size_t c = 1; c < internal; ++c) {
    const double hc = h[c - 1];
    x[c] = (hc * x[(c - 1) / 2] + e.B[c]) / (hc + e.A[c]);
  }
  std::copy(leaves.begin(), leaves.end(), x.begin() + static_cast<std::ptrdiff_t>(internal));
  return x;
}

double sobolev_objective(const TreeWeights& weights, std::span<const double> f, double p) {
  const int n = weights.height();
  double total = 0.0;
  for (int k = 1; k <= n; ++k) {
    const std::size_t off = TreeShape::level_offset(k);
    double level = 0.0;
    for (std::size_t j = 0; j < (std::size_t{1} << k); ++j) {
      const std::size_t v = off + j;
      level += std::pow(std::abs(f[v] - f[(v - 1) / 2]), p);
    }
    total += weights.at(k) * level;
  }
  return total;
}

std::vector<double> objective_gradient(const TreeWeights& weights, std::span<const double> f,
                                       double p) {
  const int n = weights.height();
  const std::size_t internal = TreeShape::level_offset(n);
  std::vector<double> grad(internal, 0.0);
  for (std::size_t v = 1; v < f.size(); ++v) {
    const VertexRef x = vertex_from_flat(v);
    const double flux = p * weights.at(x.depth) * signed_pow(f[v] - f[(v - 1) / 2], p - 1.0);
    if (v < internal) grad[v] += flux;
    grad[(v - 1) / 2] -= flux;
  }
  return grad;
}

double kkt_scale(const TreeWeights& weights, std::span<const double> leaves, double p) {
  const auto [lo, hi] = std::minmax_element(leaves.begin(), leaves.end());
  const double range = *hi - *lo;
  const double wmax = *std::max_element(weights.values().begin(), weights.values().end());
  return p * wmax * std::pow(range, p - 1.0);
}

double trace_dual_bound(const TreeWeights& weights, std::span<const double> f, double p) {
  require_p(p);
  const int n = weights.height();
  const TreeShape shape(n);
  require(f.size() == shape.vertex_count(), ErrorCode::shape_mismatch,
          "trace_dual_bound: vertex field has the wrong size");
  const std::size_t internal = TreeShape::level_offset(n);
  const double q = p / (p - 1.0);
  const auto [lo, hi] = std::minmax_element(f.begin() + static_cast<std::ptrdiff_t>(internal), f.end());
  const double floor = (p < 2.0 ? 1e-12 : 1e-4) * (*hi - *lo);

  // sigma[v] is the flux on the edge into v, sigma[0] = 0. Its imbalance at
  // internal vertices is the objective gradient; one Newton step of the flux
  // problem removes it, routing through stiff edges where that is cheap.
  std::vector<double> sigma(f.size(), 0.0);
  std::vector<double> h(shape.edge_count());
  for (std::size_t v = 1; v < f.size(); ++v) {
    const double w = weights.at(vertex_from_flat(v).depth);
    const double d = f[v] - f[(v - 1) / 2];
    sigma[v] = p * w * signed_pow(d, p - 1.0);
    h[v - 1] = p * (p - 1.0) * w * std::pow(std::max(std::abs(d), floor), p - 2.0);
  }
  if (floor > 0.0) {
    const std::vector<double> tau = tree_quadratic_fluxes(n, h, objective_gradient(weights, f, p));
    for (std::size_t v = 1; v < f.size(); ++v) sigma[v] += tau[v];
  }
  // Whatever imbalance is left goes straight down to the leaves.
  for (std::size_t v = 0; v < internal; ++v) {
    const double excess = sigma[v] - sigma[2 * v + 1] - sigma[2 * v + 2];
    sigma[2 * v + 1] += 0.5 * excess;
    sigma[2 * v + 2] += 0.5 * excess;
  }
  // With a divergence-free flux only the leaves carry boundary terms.
  double linear = 0.0;
  for (std::size_t v = internal; v < f.size(); ++v) linear += sigma[v] * f[v];
  double conjugate = 0.0;
  for (std::size_t v = 1; v < f.size(); ++v) {
    const double w = weights.at(vertex_from_flat(v).depth);
    conjugate += std::pow(std::abs(sigma[v]), q) * std::pow(p * w, 1.0 - q) / q;
  }
  return linear - conjugate;
}

namespace {

struct Minimizer {
  const TreeWeights& weights;
  std::span<const double> leaves;
  double p;
  double delta_floor;
  std::size_t internal;
  std::vector<double> edge_w;

  // Smoothing: |d|^p is replaced by (d^2 + eps^2)^{p/2} while eps > 0.
  double eps = 0.0;

  double objective(const std::vector<double>& f) const {
    if (eps == 0.0) return sobolev_objective(weights, f, p);
    double total = 0.0;
    for (std::size_t v = 1; v < f.size(); ++v) {
      const double d = f[v] - f[(v - 1) / 2];
      total += edge_w[v - 1] * std::pow(d * d + eps * eps, 0.5 * p);
    }
    return total;
  }

  std::vector<double> gradient(const std::vector<double>& f) const {
    if (eps == 0.0) return objective_gradient(weights, f, p);
    std::vector<double> grad(internal, 0.0);
    for (std::size_t v = 1; v < f.size(); ++v) {
      const double d = f[v] - f[(v - 1) / 2];
      const double flux = p * edge_w[v - 1] * d * std::pow(d * d + eps * eps, 0.5 * p - 1.0);
      if (v < internal) grad[v] += flux;
      grad[(v - 1) / 2] -= flux;
    }
    return grad;
  }

  double kkt(const std::vector<double>& f, double scale) const {
    return max_abs(gradient(f)) / scale;
  }

  std::vector<double> reweighted(const std::vector<double>& f, double factor) const {
    std::vector<double> h(edge_w.size());
    for (std::size_t v = 1; v < f.size(); ++v) {
      const double d = std::max(std::abs(f[v] - f[(v - 1) / 2]), delta_floor);
      h[v - 1] = factor * edge_w[v - 1] * std::pow(d, p - 2.0);
    }
    return h;
  }

  // Newton direction from the tree Hessian (edge differences floored when unsmoothed).
  std::vector<double> newton_direction(const std::vector<double>& f,
                                       const std::vector<double>& grad) const {
    std::vector<double> h;
    if (eps == 0.0) {
      h = reweighted(f, p * (p - 1.0));
    } else {
      h.resize(edge_w.size());
      for (std::size_t v = 1; v < f.size(); ++v) {
        const double d2 = std::pow(f[v] - f[(v - 1) / 2], 2);
        h[v - 1] = p * edge_w[v - 1] * std::pow(d2 + eps * eps, 0.5 * p - 2.0) * ((p - 1.0) * d2 + eps * eps);
      }
    }
    const std::vector<double> zeros(leaves.size(), 0.0);
    return solve_tree_quadratic(weights.height(), h, grad, zeros);
  }

  // Damped Newton on the smoothed objective for the current eps.
  void smoothed_newton(std::vector<double>& f, double scale, int max_steps) const {
    double J = objective(f);
    for (int it = 0; it < max_steps; ++it) {
      const std::vector<double> grad = gradient(f);
      if (max_abs(grad) < 1e-13 * scale) return;
      const double J_prev = J;
      if (!line_search(f, J, grad, newton_direction(f, grad), scale)) return;
      if (J_prev - J <= 1e-15 * J_prev) return;
    }
  }

  // Classical IRLS update direction: weighted p = 2 solve minus current iterate.
  std::vector<double> irls_direction(const std::vector<double>& f) const {
    const std::vector<double> h = reweighted(f, 1.0);
    std::vector<double> next = solve_tree_quadratic(weights.height(), h, {}, leaves);
    for (std::size_t v = 0; v < next.size(); ++v) next[v] -= f[v];
    return next;
  }

  // Minimizes the convex objective along `dir`: bracket by doubling, then golden
  // section. Returns false when no decrease is found.
  bool line_search(std::vector<double>& f, double& J, const std::vector<double>& grad,
                   const std::vector<double>& dir, double scale) const {
    double slope = 0.0;
    for (std::size_t v = 0; v < internal; ++v) slope += grad[v] * dir[v];
    if (!(slope < 0.0)) return false;
    std::vector<double> trial(f.size());
    auto phi = [&](double t) {
      for (std::size_t v = 0; v < f.size(); ++v) trial[v] = f[v] + t * dir[v];
      return objective(trial);
    };
    double hi = 1.0;
    double J_hi = phi(hi);
    if (J_hi < J) {
      for (int k = 0; k < 20; ++k) {
        const double J_next = phi(2.0 * hi);
        if (!(J_next < J_hi)) break;
        hi *= 2.0;
        J_hi = J_next;
      }
      hi *= 2.0;
    } else if (J_hi <= J * (1.0 + 4e-16) && kkt(trial, scale) < kkt(f, scale)) {
      // At round-off level the objective cannot certify progress; accept a
      // full step that does not increase it and improves stationarity.
      f.swap(trial);
      J = J_hi;
      return true;
    }
    constexpr double golden = 0.6180339887498949;
    double a = 0.0, b = hi;
    double c = b - golden * (b - a), d = a + golden * (b - a);
    double Jc = phi(c), Jd = phi(d);
    for (int it = 0; it < 80 && b - a > 1e-12 * hi; ++it) {
      if (Jc <= Jd) {
        b = d;
        d = c;
        Jd = Jc;
        c = b - golden * (b - a);
        Jc = phi(c);
      } else {
        a = c;
        c = d;
        Jc = Jd;
        d = a + golden * (b - a);
        Jd = phi(d);
      }
    }
    double t = Jc <= Jd ? c : d;
    double Jt = phi(t);
    if (!(Jt < J)) {
      // Minimum sits below golden-section resolution near t = 0.
      for (t = 1e-12 * hi; t > 1e-30; t *= 0.5) {
        Jt = phi(t);
        if (Jt < J) break;
      }
      if (!(Jt < J)) return false;
    }
    f.swap(trial);
    J = Jt;
    return true;
  }

  // Exact one-dimensional minimization at every internal vertex.
  void coordinate_sweep(std::vector<double>& f) const {
    for (std::size_t v = 0; v < internal; ++v) {
      double nb[3];
      double wt[3];
      int cnt = 0;
      for (std::size_t c = 2 * v + 1; c <= 2 * v + 2; ++c) {
        nb[cnt] = f[c];
        wt[cnt++] = edge_w[c - 1];
      }
      if (v > 0) {
        nb[cnt] = f[(v - 1) / 2];
        wt[cnt++] = edge_w[v - 1];
      }
      double lo = *std::min_element(nb, nb + cnt);
      double hi = *std::max_element(nb, nb + cnt);
      for (int it = 0; it < 200 && hi - lo > 0.0; ++it) {
        const double mid = 0.5 * (lo + hi);
        if (mid == lo || mid == hi) break;
        double deriv = 0.0;
        for (int i = 0; i < cnt; ++i) deriv += wt[i] * signed_pow(mid - nb[i], p - 1.0);
        (deriv > 0.0 ? hi : lo) = mid;
      }
      f[v] = 0.5 * (lo + hi);
    }
  }
};

}  // namespace

TraceResult trace_seminorm(const TreeWeights& weights, const ScalarField& leaves, double p,
                           const TraceOptions& options) {
  require_p(p);
  require_role(leaves, FieldRole::leaves, "trace_seminorm");
  require_weights_match(weights, leaves.height, "trace_seminorm");
  const int n = leaves.height;
  const std::size_t internal = TreeShape::level_offset(n);

  TraceResult result;
  const auto [lo, hi] = std::minmax_element(leaves.values.begin(), leaves.values.end());
  const double range = *hi - *lo;
  if (!(range > 0.0)) {
    std::vector<double> f(ScalarField::expected_size(FieldRole::vertices, n), leaves[0]);
    std::copy(leaves.values.begin(), leaves.values.end(), f.begin() + static_cast<std::ptrdiff_t>(internal));
    result.extension = ScalarField(FieldRole::vertices, n, std::move(f));
    result.converged = true;
    result.method = "exact";
    return result;
  }

  Minimizer mini{weights, leaves.values, p, options.regularization * range, internal,
                 edge_weight_vector(weights)};
  const double scale = kkt_scale(weights, leaves.values, p);

  // The weighted p = 2 solution is exact for p = 2 and the starting point otherwise.
  std::vector<double> f = solve_tree_quadratic(n, mini.edge_w, {}, leaves.values);
  double J = mini.objective(f);
  std::vector<double> grad = objective_gradient(weights, f, p);
  double kkt = max_abs(grad) / scale;

  auto relative_gap = [&](const std::vector<double>& F, double J_now) {
    return J_now > 0.0 ? (J_now - trace_dual_bound(weights, F, p)) / J_now : 0.0;
  };
  double gap = relative_gap(f, J);

  if (p == 2.0) {
    result.method = "exact";
    result.converged = kkt < options.kkt_tol || gap < options.gap_tol;
  } else {
    result.method = "newton-irls";
    if (p < 2.0) {
      // Continuation in the smoothing parameter keeps Newton's quadratic model
      // valid while edges flatten.
      for (double e = 0.1 * range; e > 1e-16 * range; e *= 0.1) {
        mini.eps = e;
        mini.smoothed_newton(f, scale, 100);
      }
      mini.eps = 0.0;
      J = mini.objective(f);
      grad = objective_gradient(weights, f, p);
      kkt = max_abs(grad) / scale;
      gap = relative_gap(f, J);
    }
    double rel_decrease = 1.0;
    int stalls = 0;
    auto kkt_ok = [&] {
      return kkt < options.kkt_tol &&
             (rel_decrease < options.relative_decrease_tol || kkt < 1e-3 * options.kkt_tol);
    };
    for (int it = 0; it < options.max_iterations && !kkt_ok(); ++it) {
      result.iterations = it + 1;
      const double J_prev = J;
      bool moved = mini.line_search(f, J, grad, mini.newton_direction(f, grad), scale);
      if (!moved) moved = mini.line_search(f, J, grad, mini.irls_direction(f), scale);
      if (!moved) {
        const std::vector<double> before = f;
        mini.coordinate_sweep(f);
        const double Jc = mini.objective(f);
        if (Jc <= J) {
          J = Jc;
          moved = true;
          result.method = "coordinate-descent";
        } else {
          f = before;
        }
      }
      grad = objective_gradient(weights, f, p);
      kkt = max_abs(grad) / scale;
      gap = relative_gap(f, J);
      rel_decrease = (J_prev - J) / J_prev;
      if (!moved || rel_decrease <= 0.0) {
        if (++stalls >= 3) break;
      } else {
        stalls = 0;
      }
      // Machine resolution reached on a certified optimum: further steps only
      // reshuffle edge differences below the spacing of doubles.
      if (gap < 1e-3 * options.gap_tol && rel_decrease < options.relative_decrease_tol) break;
    }
    result.converged = kkt_ok() || gap < options.gap_tol;
  }
  result.kkt_residual = kkt;
  result.duality_gap = gap;
  result.value = std::pow(J, 1.0 / p);
  result.extension = ScalarField(FieldRole::vertices, n, std::move(f));
  return result;
}

double operator_ratio(const Matrix& M, std::span<const double> F, std::span<const double> measure,
                      double p) {
  const std::vector<double> x(F.begin(), F.end());
  const std::vector<double> y = M.apply(x);
  const double denom = weighted_lp(F, measure, p);
  return denom == 0.0 ? 0.0 : weighted_lp(y, measure, p) / denom;
}

PowerIterationResult opnorm_power_iteration(const Matrix& M_in, std::span<const double> measure,
                                            double p, const PowerIterationOptions& options) {
  require_p(p);
  const std::size_t n = M_in.rows();
  require(M_in.cols() == n && measure.size() == n, ErrorCode::shape_mismatch,
          "power iteration needs a square matrix matching the measure");
  for (double v : M_in.data()) {
    require(v >= 0.0 && std::isfinite(v), ErrorCode::invalid_argument,
            "power iteration needs a non-negative kernel");
  }
  for (double m : measure) {
    require(m > 0.0 && std::isfinite(m), ErrorCode::invalid_argument, "measure must be positive");
  }
  PowerIterationResult res;
  const double top = M_in.max_abs();
  if (top == 0.0) {
    res.converged = true;
    res.maximizer.assign(n, 1.0);
    return res;
  }
  Matrix M = M_in;
  const bool has_zero = std::any_of(M.data().begin(), M.data().end(), [](double v) { return v == 0.0; });
  if (has_zero && options.perturbation > 0.0) {
    for (double& v : M.data()) v += options.perturbation * top;
  }

  std::vector<double> F(n, 1.0);
  {
    const double nf = weighted_lp(F, measure, p);
    for (double& v : F) v /= nf;
  }
  std::vector<double> G(n), H(n);
  double prev = -1.0;
  for (int it = 1; it <= options.max_iterations; ++it) {
    res.iterations = it;
    const std::vector<double> y = M.apply(F);
    const double est = weighted_lp(y, measure, p);  // ||F|| = 1
    for (std::size_t s = 0; s < n; ++s) G[s] = std::pow(y[s], p - 1.0);
    double lam_up = 0.0;
    for (std::size_t t = 0; t < n; ++t) {
      double acc = 0.0;
      for (std::size_t s = 0; s < n; ++s) acc += measure[s] * M(s, t) * G[s];
      H[t] = acc / measure[t];
      if (F[t] > 0.0) {
        lam_up = std::max(lam_up, H[t] / std::pow(F[t], p - 1.0));
      } else if (H[t] > 0.0) {
        lam_up = std::numeric_limits<double>::infinity();
      }
    }
    // The perturbed kernel dominates M_in, so its upper bound carries over;
    // the lower estimate is taken on the original kernel.
    res.value = has_zero ? weighted_lp(M_in.apply(F), measure, p) : est;
    res.upper = std::pow(lam_up, 1.0 / p);
    res.maximizer = F;
    if (prev >= 0.0 && std::abs(est - prev) <= options.tol * est) {
      res.converged = true;
      break;
    }
    if (res.upper - est <= options.tol * est) {
      res.converged = true;
      break;
    }
    prev = est;
    for (std::size_t t = 0; t < n; ++t) F[t] = std::pow(H[t], 1.0 / (p - 1.0));
    const double nf = weighted_lp(F, measure, p);
    require(nf > 0.0 && std::isfinite(nf), ErrorCode::not_converged, "power iteration degenerated");
    for (double& v : F) v /= nf;
  }
  return res;
}

double muckenhoupt_best_A(std::span<const double> U, std::span<const double> V, double p,
                          HardyDirection direction) {
  require_p(p);
  require(U.size() == V.size() && !U.empty(), ErrorCode::shape_mismatch,
          "U and V must have the same positive length");
  const double q = p / (p - 1.0);
  const std::size_t n = U.size();
  double best = 0.0;
  for (std::size_t r = 0; r < n; ++r) {
    double su = 0.0;
    double sv = 0.0;
    if (direction == HardyDirection::forward) {
      for (std::size_t k = r; k < n; ++k) su += std::pow(U[k], p);
      for (std::size_t k = 0; k <= r; ++k) sv += std::pow(V[k], -q);
    } else {
      for (std::size_t k = 0; k <= r; ++k) su += std::pow(U[k], p);
      for (std::size_t k = r; k < n; ++k) sv += std::pow(V[k], -q);
    }
    best = std::max(best, std::pow(su, 1.0 / p) * std::pow(sv, 1.0 / q));
  }
  return best;
}

HardySides hardy_sides(std::span<const double> U, std::span<const double> V,
                       std::span<const double> f, double p, HardyDirection direction) {
  require(U.size() == V.size() && V.size() == f.size(), ErrorCode::shape_mismatch,
          "U, V and f must have equal lengths");
  const std::size_t n = f.size();
  std::vector<double> acc(n);
  if (direction == HardyDirection::forward) {
    double run = 0.0;
    for (std::size_t k = 0; k < n; ++k) acc[k] = run += f[k];
  } else {
    double run = 0.0;
    for (std::size_t k = n; k-- > 0;) acc[k] = run += f[k];
  }
  double lhs = 0.0;
  double rhs = 0.0;
  for (std::size_t k = 0; k < n; ++k) {
    lhs += std::pow(std::abs(U[k] * acc[k]), p);
    rhs += std::pow(std::abs(V[k] * f[k]), p);
  }
  return {std::pow(lhs, 1.0 / p), std::pow(rhs, 1.0 / p)};
}

std::vector<double> script_T0_apply(std::span<const double> Q, std::span<const double> F) {
  require(Q.size() == F.size(), ErrorCode::shape_mismatch, "script_T0: length mismatch");
  std::vector<double> out(F.size());
  double run = 0.0;
  for (std::size_t s = 0; s < F.size(); ++s) {
    run += F[s];
    out[s] = Q[s] * run;
  }
  return out;
}

std::vector<double> script_T1_apply(std::span<const double> alpha, std::span<const double> F) {
  require(alpha.size() == F.size(), ErrorCode::shape_mismatch, "script_T1: length mismatch");
  const std::size_t n = F.size();
  std::vector<double> prefix(n);
  double run = 0.0;
  for (std::size_t t = 0; t < n; ++t) prefix[t] = run += alpha[t];
  std::vector<double> out(n, 0.0);
  double tail = 0.0;
  for (std::size_t s = n; s-- > 0;) {
    out[s] = alpha[s] * tail;
    tail += F[s] / prefix[s];
  }
  return out;
}

Matrix script_T0_matrix(std::span<const double> Q) {
  const std::size_t n = Q.size();
  Matrix M(n, n);
  for (std::size_t s = 0; s < n; ++s) {
    for (std::size_t t = 0; t <= s; ++t) M(s, t) = Q[s];
  }
  return M;
}

Matrix script_T1_matrix(std::span<const double> Q) {
  const std::size_t n = Q.size();
  Matrix M(n, n);
  for (std::size_t s = 0; s < n; ++s) {
    double prod = Q[s];
    for (std::size_t t = s + 1; t < n; ++t) {
      prod *= 1.0 - Q[t];
      M(s, t) = prod;
    }
  }
  return M;
}

TheoreticalConstants theoretical_constants(double p) {
  require_p(p);
  TheoreticalConstants c;
  c.p = p;
  c.q = p / (p - 1.0);
  c.C_p = std::pow(p, 1.0 / p) * std::pow(c.q, 1.0 / c.q);
  const double a = std::pow(p - 1.0, -1.0 / p);
  const double b = std::pow(c.q - 1.0, -1.0 / c.q);
  c.C_bar = 4.0 * c.C_p * (1.0 + std::max(a, b));
  c.C_hat = 0.5 * c.C_bar;
  c.C_tilde = std::pow(2.0, 1.0 / p) * c.C_p * std::max(1.0, a);
  c.T1_bound = std::pow(2.0, 1.0 / c.q) * c.C_p * std::max(1.0, b);
  return c;
}

ExtensionRatio extension_ratio_details(const TreeWeights& weights, double p,
                                       const ScalarField& leaves, const TraceOptions& options) {
  ExtensionRatio out;
  const WalkProfile profile = WalkProfile::from_weights(weights, p);
  out.extension_seminorm = sobolev_seminorm(weights, harmonic_extend(profile, leaves), p);
  out.solve = trace_seminorm(weights, leaves, p, options);
  if (!out.solve.converged) {
    fail(ErrorCode::not_converged,
         "trace minimization did not converge (kkt residual " + std::to_string(out.solve.kkt_residual) +
             ", duality gap " + std::to_string(out.solve.duality_gap) + ")");
  }
  out.trace = out.solve.value;
  // Constant data: both seminorms vanish.
  const double tiny = 1e-13 * std::max(out.extension_seminorm, 1e-300);
  out.ratio = out.trace > 0.0 && out.extension_seminorm > tiny ? out.extension_seminorm / out.trace : 1.0;
  return out;
}

double extension_ratio(const TreeWeights& weights, double p, const ScalarField& leaves,
                       const TraceOptions& options) {
  return extension_ratio_details(weights, p, leaves, options).ratio;
}

ScalarField sample_leaf_function(const TreeWeights& weights, double p, LeafSample kind, Rng& rng) {
  const int n = weights.height();
  const TreeShape shape(n);
  ScalarField f(FieldRole::leaves, n);
  // Per-depth amplitude making every depth contribute comparably to ||.||_{L^p(E)}.
  auto amplitude = [&](int k) { return std::pow(std::ldexp(weights.at(k), k), -1.0 / p); };
  switch (kind) {
    case LeafSample::uniform:
      for (auto& v : f.values) v = rng.uniform(-1.0, 1.0);
      break;
    case LeafSample::spiky: {
      for (auto& v : f.values) v = 1e-3 * rng.uniform(-1.0, 1.0);
      const int spikes = 1 + static_cast<int>(rng.below(3));
      for (int i = 0; i < spikes; ++i) {
        f[rng.below(shape.leaf_count())] += (rng.coin() ? 1.0 : -1.0) * rng.uniform(0.5, 1.5);
      }
      break;
    }
    case LeafSample::multiscale: {
      ScalarField g(FieldRole::edges, n);
      for (std::size_t e = 0; e < g.size(); ++e) {
        g[e] = rng.uniform(-1.0, 1.0) * amplitude(vertex_from_flat(e + 1).depth);
      }
      f = restrict_to_leaves(integrate(g));
      break;
    }
    case LeafSample::bit_linear: {
      std::vector<double> c(static_cast<std::size_t>(n));
      for (int k = 1; k <= n; ++k) c[k - 1] = rng.uniform(-1.0, 1.0) * amplitude(k);
      const double noise = 1e-3 * *std::max_element(c.begin(), c.end(), [](double a, double b) {
        return std::abs(a) < std::abs(b);
      });
      for (std::uint64_t w = 0; w < f.size(); ++w) {
        double v = 0.0;
        for (int k = 1; k <= n; ++k) v += c[k - 1] * ((((w >> (n - k)) & 1u) != 0) ? 0.5 : -0.5);
        f[w] = v + std::abs(noise) * rng.uniform(-1.0, 1.0);
      }
      break;
    }
  }
  return f;
}

NormReport build_norm_report(const TreeWeights& weights, double p, int samples, std::uint64_t seed) {
  require(samples >= 0, ErrorCode::invalid_argument, "samples must be non-negative");
  NormReport rep;
  rep.height = weights.height();
  rep.p = p;
  rep.weights_digest = weights_digest(weights);
  rep.constants = theoretical_constants(p);

  const WalkProfile profile = WalkProfile::from_weights(weights, p);
  const std::vector<double> mu = depth_measure(weights);
  const PowerIterationResult s0 = opnorm_power_iteration(reduced_L1(profile), mu, p);
  rep.opnorm_S0 = s0.value;
  rep.opnorm_S0_upper = s0.upper;
  rep.bound_2S0 = 2.0 * s0.value;

  const ReversedKernel rk = reversed_kernel(weights, p);
  rep.opnorm_reversed = opnorm_power_iteration(rk.kernel, rk.w, p).value;
  rep.opnorm_T0 = opnorm_power_iteration(script_T0_matrix(rk.Q), rk.w, p).value;
  rep.opnorm_T1 = opnorm_power_iteration(script_T1_matrix(rk.Q), rk.w, p).value;
  {
    std::vector<double> U(rk.w.size()), V(rk.w.size());
    for (std::size_t k = 0; k < U.size(); ++k) {
      V[k] = std::pow(rk.w[k], 1.0 / p);
      U[k] = V[k] * rk.Q[k];
    }
    rep.muckenhoupt_A = muckenhoupt_best_A(U, V, p, HardyDirection::forward);
  }

  Rng rng(seed);
  rep.ratio_samples.reserve(static_cast<std::size_t>(samples));
  for (int i = 0; i < samples; ++i) {
    const auto kind = static_cast<LeafSample>(i % leaf_sample_kinds);
    const ScalarField f = sample_leaf_function(weights, p, kind, rng);
    rep.ratio_samples.push_back(extension_ratio(weights, p, f));
  }
  rep.max_ratio = rep.ratio_samples.empty()
                      ? 0.0
                      : *std::max_element(rep.ratio_samples.begin(), rep.ratio_samples.end());

  // Each sampled ratio is ||T g|| / ||g|| at the optimal gradient g, so a lower bound for ||T||.
  rep.T_lower = rep.max_ratio;
  const int edge_probes = std::max(1, samples / 4);
  for (int i = 0; i < edge_probes; ++i) {
    ScalarField g(FieldRole::edges, rep.height);
    for (std::size_t e = 0; e < g.size(); ++e) g[e] = rng.uniform(-1.0, 1.0);
    const double ng = lp_edge_norm(weights, g, p);
    if (ng > 0.0) rep.T_lower = std::max(rep.T_lower, lp_edge_norm(weights, induced_T(profile, g), p) / ng);
  }
  return rep;
}

}  // namespace tsob
