#include <cmath>

#include "doctest.h"
#include "helpers.hpp"
#include "tree_sobolev/kernels.hpp"

using namespace tsob;
using tsob::testing::random_p;
using tsob::testing::random_q;
using tsob::testing::random_weights;

namespace {

std::vector<double> symmetric_q(int n) {
  std::vector<double> q(n + 1, 1.0);
  for (int s = 1; s <= n; ++s) q[s] = 1.0 / (n - s + 1);
  return q;
}

std::vector<double> two_speed_q(int n, double delta) {
  std::vector<double> q(n + 1, 1.0);
  for (int s = 1; s < n; ++s) q[s] = 1.0 / (n - s + 1.0 / delta - 1.0);
  return q;
}

VertexRef edge(std::size_t e) { return vertex_from_flat(e + 1); }

}  // namespace

TEST_CASE("closed-form kernel equals the leaf sum") {
  Rng rng(12);
  for (int n = 1; n <= 6; ++n) {
    for (int trial = 0; trial < 4; ++trial) {
      const auto prof = trial % 2 ? WalkProfile::from_q(random_q(n, rng))
                                  : WalkProfile::from_weights(random_weights(n, rng), random_p(rng));
      const auto K = edge_kernel(prof);
      const auto Kb = edge_kernel_bruteforce(prof);
      CHECK(max_abs_diff(K.data(), Kb.data()) < 1e-12);
    }
  }
}

TEST_CASE("hand-evaluated kernel entries") {
  Rng rng(14);
  const auto prof = WalkProfile::from_q(random_q(4, rng));
  const VertexRef a{1, 0}, b{1, 1};
  CHECK(kernel_closed_form(prof, a, a) == doctest::Approx(prof.q[1] / 2).epsilon(1e-15));
  CHECK(kernel_closed_form(WalkProfile::averaging(4), a, b) == doctest::Approx(-0.5).epsilon(1e-15));
  const VertexRef leaf{4, 9};
  CHECK(kernel_bruteforce(prof, leaf, leaf) == doctest::Approx(prof.A(4, 4)).epsilon(1e-15));
  CHECK(kernel_closed_form(prof, leaf, leaf) == doctest::Approx(prof.A(4, 4)).epsilon(1e-13));
  CHECK_THROWS_AS(kernel_closed_form(prof, VertexRef{0, 0}, a), Error);
  CHECK_THROWS_AS(kernel_bruteforce(prof, a, VertexRef{0, 0}), Error);
}

TEST_CASE("kernel sign pattern and split") {
  Rng rng(16);
  for (int trial = 0; trial < 1000; ++trial) {
    const int n = 1 + static_cast<int>(rng.below(5));
    const auto prof = WalkProfile::from_q(random_q(n, rng));
    const auto K = edge_kernel(prof);
    const auto K0 = edge_kernel(prof, KernelPart::non_ancestral);
    const auto K1 = edge_kernel(prof, KernelPart::ancestral);
    bool ok = true;
    for (std::size_t i = 0; i < K.rows(); ++i) {
      for (std::size_t j = 0; j < K.cols(); ++j) {
        const VertexRef x = edge(i), y = edge(j);
        const bool related = is_descendant(x, y) || is_descendant(y, x);
        ok = ok && (related ? K(i, j) >= 0.0 : K(i, j) <= 0.0);
        ok = ok && (related ? K0(i, j) == 0.0 : K1(i, j) == 0.0);
        ok = ok && K(i, j) == K0(i, j) + K1(i, j);
      }
    }
    REQUIRE(ok);
  }
}

TEST_CASE("edge kernel size cap") {
  CHECK_THROWS_AS(edge_kernel(WalkProfile::averaging(kernel_max_height + 1)), Error);
}

TEST_CASE("reduced kernels") {
  Rng rng(18);
  SUBCASE("averaging profile") {
    const int n = 5;
    const auto prof = WalkProfile::averaging(n);
    const auto L0 = reduced_L0(prof), L1 = reduced_L1(prof);
    for (int s = 1; s <= n; ++s) {
      for (int t = 1; t <= n; ++t) {
        CHECK(L0(s - 1, t - 1) == (s <= t ? -0.5 : 0.0));
        CHECK(L1(s - 1, t - 1) == (s <= t ? 0.5 : 0.0));
      }
    }
  }
  SUBCASE("symmetric-walk and two-speed bounds") {
    const int n = 6;
    const auto sym = WalkProfile::from_q(symmetric_q(n));
    const auto B = reduced_L_bound(sym), L0 = reduced_L0(sym);
    for (int s = 1; s <= n; ++s) {
      for (int t = 1; t <= n; ++t) {
        const int m = std::min(s, t);
        CHECK(std::abs(B(s - 1, t - 1) - 1.0 / (n - m + 1)) < 1e-14);
        CHECK(std::abs(L0(s - 1, t - 1)) <= 1.0 / (n - m + 1) + 1e-15);
      }
    }
    const double delta = 1.0 / 3.0;
    const auto two = WalkProfile::from_q(two_speed_q(n, delta));
    const auto B2 = reduced_L_bound(two), L2 = reduced_L1(two);
    for (int s = 1; s <= n; ++s) {
      for (int t = 1; t <= n; ++t) {
        const int m = std::min(s, t);
        // the bottom row has q_N = 1 instead of the interior formula
        const double expected = (s < n ? 1.0 : 1.0 / delta - 1.0) / (n - m + 1.0 / delta - 1.0);
        CHECK(std::abs(B2(s - 1, t - 1) - expected) < 1e-14);
        CHECK(L2(s - 1, t - 1) <= B2(s - 1, t - 1) + 1e-15);
      }
    }
  }
  SUBCASE("L0 + L1 = 0, signs, bound, and the (1,1) entry") {
    for (int trial = 0; trial < 100; ++trial) {
      const int n = 1 + static_cast<int>(rng.below(8));
      const auto prof = WalkProfile::from_q(random_q(n, rng));
      const auto L0 = reduced_L0(prof), L1 = reduced_L1(prof), B = reduced_L_bound(prof);
      for (std::size_t i = 0; i < L0.data().size(); ++i) {
        CHECK(std::abs(L0.data()[i] + L1.data()[i]) <= 1e-14);
        CHECK(L0.data()[i] <= 0.0);
        CHECK(L1.data()[i] >= 0.0);
        CHECK(L1.data()[i] <= B.data()[i] + 1e-15);
      }
      CHECK(L1(0, 0) == doctest::Approx(prof.q[1] / 2).epsilon(1e-15));
    }
  }
  SUBCASE("row sums of the edge kernel parts") {
    for (int n = 1; n <= 5; ++n) {
      for (int trial = 0; trial < 4; ++trial) {
        const auto prof = WalkProfile::from_q(random_q(n, rng));
        CHECK(max_abs_diff(reduced_from_edge_kernel(prof, KernelPart::non_ancestral).data(),
                           reduced_L0(prof).data()) < 1e-12);
        CHECK(max_abs_diff(reduced_from_edge_kernel(prof, KernelPart::ancestral).data(),
                           reduced_L1(prof).data()) < 1e-12);
      }
    }
  }
  SUBCASE("depth-invariant fields reduce to depth kernels") {
    for (int n = 1; n <= 6; ++n) {
      const auto prof = WalkProfile::from_q(random_q(n, rng));
      std::vector<double> G(n);
      for (auto& v : G) v = rng.uniform(-1, 1);
      const auto g = edge_field_from_depths(n, G);
      const auto SG0 = reduced_L0(prof).apply(G), SG1 = reduced_L1(prof).apply(G);
      const auto T0g = edge_kernel(prof, KernelPart::non_ancestral).apply(g.values);
      const auto T1g = edge_kernel(prof, KernelPart::ancestral).apply(g.values);
      for (std::size_t e = 0; e < g.size(); ++e) {
        const int d = edge(e).depth;
        CHECK(std::abs(T0g[e] - SG0[d - 1]) < 1e-12);
        CHECK(std::abs(T1g[e] - SG1[d - 1]) < 1e-12);
      }
    }
  }
}

TEST_CASE("reversed kernel") {
  Rng rng(20);
  for (int trial = 0; trial < 100; ++trial) {
    const int n = 1 + static_cast<int>(rng.below(12));
    const auto w = random_weights(n, rng);
    const double p = random_p(rng);
    const auto rk = reversed_kernel(w, p);
    const auto q = q_from_weights(w, p);
    CHECK(rk.Q[0] == 1.0);
    for (int s = 1; s <= n; ++s) {
      CHECK(std::abs(rk.Q[s - 1] - q[n + 1 - s]) <= 1e-14);
      CHECK(rk.w[s - 1] == doctest::Approx(std::ldexp(w.at(n + 1 - s), n + 1 - s)).epsilon(1e-15));
    }
    // product form against alpha_s / sum_{k<=t} alpha_k
    for (int s = 1; s <= n; ++s) {
      double prod = rk.Q[s - 1];
      double denom = 0.0;
      for (int k = 1; k <= s; ++k) denom += rk.alpha[k - 1];
      for (int t = s + 1; t <= n; ++t) {
        prod *= 1.0 - rk.Q[t - 1];
        denom += rk.alpha[t - 1];
        CHECK(std::abs(prod - rk.alpha[s - 1] / denom) <= 1e-14);
        CHECK(rk.bound(s - 1, t - 1) == doctest::Approx(prod).epsilon(1e-13));
      }
      for (int t = 1; t <= s; ++t) CHECK(rk.bound(s - 1, t - 1) == rk.Q[s - 1]);
    }
    for (std::size_t i = 0; i < rk.kernel.data().size(); ++i) {
      CHECK(rk.kernel.data()[i] >= 0.0);
      CHECK(rk.kernel.data()[i] <= rk.bound.data()[i] * (1 + 1e-12) + 1e-300);
    }
    if (n <= 8) {
      const auto L = reduced_L1(WalkProfile::from_weights(w, p));
      for (int s = 1; s <= n; ++s)
        for (int t = 1; t <= n; ++t) CHECK(rk.kernel(s - 1, t - 1) == L(n - s, n - t));
    }
  }
}

TEST_CASE("depth measures") {
  const TreeWeights w({3.0, 0.5, 2.0});
  const auto m = depth_measure(w);
  CHECK(m == std::vector<double>{6.0, 2.0, 16.0});
  const auto r = reversed_measure(w);
  CHECK(r == std::vector<double>{16.0, 2.0, 6.0});
}
