#include <Eigen/Dense>

#include "doctest.h"
#include "helpers.hpp"
#include "tree_sobolev/extension.hpp"
#include "tree_sobolev/kernels.hpp"

using namespace tsob;
using tsob::testing::random_field;
using tsob::testing::random_q;
using tsob::testing::random_weights;

namespace {

// Weighted Laplace system at internal vertices with Dirichlet leaf data, dense.
std::vector<double> dense_harmonic(const TreeWeights& w, const ScalarField& leaves) {
  const int n = leaves.height;
  const TreeShape shape(n);
  const auto internal = static_cast<Eigen::Index>(TreeShape::level_offset(n));
  const std::size_t leaf0 = TreeShape::level_offset(n);
  Eigen::MatrixXd L = Eigen::MatrixXd::Zero(internal, internal);
  Eigen::VectorXd rhs = Eigen::VectorXd::Zero(internal);
  for (std::size_t v = 1; v < shape.vertex_count(); ++v) {
    const VertexRef x = vertex_from_flat(v);
    const double c = w.at(x.depth);
    const auto u = static_cast<Eigen::Index>(x.parent().flat());
    L(u, u) += c;
    if (v < leaf0) {
      const auto i = static_cast<Eigen::Index>(v);
      L(i, i) += c;
      L(i, u) -= c;
      L(u, i) -= c;
    } else {
      rhs(u) += c * leaves[v - leaf0];
    }
  }
  const Eigen::VectorXd sol = L.ldlt().solve(rhs);
  std::vector<double> out(sol.data(), sol.data() + sol.size());
  out.insert(out.end(), leaves.values.begin(), leaves.values.end());
  return out;
}

}  // namespace

TEST_CASE("harmonic extension basics") {
  Rng rng(2);
  SUBCASE("constants map to constants") {
    for (int n = 1; n <= 8; ++n) {
      const auto prof = WalkProfile::from_q(random_q(n, rng));
      ScalarField c(FieldRole::leaves, n, std::vector<double>(std::size_t{1} << n, -2.75));
      for (double v : harmonic_extend(prof, c).values) CHECK(v == doctest::Approx(-2.75).epsilon(1e-14));
    }
  }
  SUBCASE("leaf values are copied exactly") {
    for (int n = 1; n <= 8; ++n) {
      const auto prof = WalkProfile::from_q(random_q(n, rng));
      const auto f = random_field(FieldRole::leaves, n, rng);
      CHECK(restrict_to_leaves(harmonic_extend(prof, f)).values == f.values);
    }
  }
  SUBCASE("fast path equals the double sum") {
    for (int n = 1; n <= 6; ++n) {
      for (int trial = 0; trial < 5; ++trial) {
        const auto prof = WalkProfile::from_q(random_q(n, rng));
        const auto f = random_field(FieldRole::leaves, n, rng);
        CHECK(max_abs_diff(harmonic_extend(prof, f).values, harmonic_extend_naive(prof, f).values) < 1e-12);
      }
    }
  }
  SUBCASE("shape mismatch") {
    const auto prof = WalkProfile::averaging(3);
    CHECK_THROWS_AS(harmonic_extend(prof, ScalarField(FieldRole::leaves, 4)), Error);
    CHECK_THROWS_AS(harmonic_extend(prof, ScalarField(FieldRole::vertices, 3)), Error);
  }
}

TEST_CASE("averaging extension") {
  SUBCASE("delta at a leaf, N = 2") {
    ScalarField f(FieldRole::leaves, 2, {0.0, 0.0, 1.0, 0.0});
    const auto F = averaging_extend(f);
    CHECK(F[0] == 0.25);
    CHECK(F[2] == 0.5);
    CHECK(F[1] == 0.0);
    CHECK(F[5] == 1.0);
  }
  SUBCASE("equals the extension for q = 1") {
    Rng rng(4);
    for (int n = 1; n <= 8; ++n) {
      const auto f = random_field(FieldRole::leaves, n, rng);
      CHECK(max_abs_diff(averaging_extend(f).values,
                         harmonic_extend(WalkProfile::averaging(n), f).values) < 1e-14);
    }
  }
}

TEST_CASE("p = 2 extension solves the weighted Laplace problem") {
  Rng rng(6);
  for (int n = 1; n <= 6; ++n) {
    for (int trial = 0; trial < 5; ++trial) {
      const auto w = random_weights(n, rng);
      const auto f = random_field(FieldRole::leaves, n, rng);
      const auto H = harmonic_extend(WalkProfile::from_weights(w, 2.0), f);
      CHECK(max_abs_diff(H.values, dense_harmonic(w, f)) < 1e-10);
    }
  }
}

TEST_CASE("structural properties") {
  Rng rng(8);
  SUBCASE("linearity") {
    for (int n = 1; n <= 7; ++n) {
      const auto prof = WalkProfile::from_q(random_q(n, rng));
      const auto f = random_field(FieldRole::leaves, n, rng);
      const auto g = random_field(FieldRole::leaves, n, rng);
      const double a = rng.uniform(-3, 3), b = rng.uniform(-3, 3);
      ScalarField combo(FieldRole::leaves, n);
      for (std::size_t i = 0; i < combo.size(); ++i) combo[i] = a * f[i] + b * g[i];
      const auto Hf = harmonic_extend(prof, f), Hg = harmonic_extend(prof, g), Hc = harmonic_extend(prof, combo);
      for (std::size_t v = 0; v < Hc.size(); ++v) CHECK(std::abs(Hc[v] - (a * Hf[v] + b * Hg[v])) < 1e-12);
    }
  }
  SUBCASE("equivariance under tree symmetries") {
    for (int n = 1; n <= 7; ++n) {
      const auto prof = WalkProfile::from_q(random_q(n, rng));
      const auto f = random_field(FieldRole::leaves, n, rng);
      for (std::uint64_t seed = 0; seed < 10; ++seed) {
        const auto sigma = random_symmetry(TreeShape(n), seed);
        const auto lhs = harmonic_extend(prof, sigma.pullback(f));
        const auto rhs = sigma.pullback(harmonic_extend(prof, f));
        CHECK(max_abs_diff(lhs.values, rhs.values) < 1e-12);
      }
    }
  }
  SUBCASE("mean-value property") {
    for (int n = 1; n <= 10; ++n) {
      const auto prof = WalkProfile::from_q(random_q(n, rng));
      const auto F = harmonic_extend(prof, random_field(FieldRole::leaves, n, rng));
      CHECK(harmonicity_residual(prof, F) <= 1e-11);
    }
    const auto prof = WalkProfile::from_q(random_q(4, rng));
    CHECK(harmonicity_residual(prof, ScalarField(FieldRole::vertices, 4, std::vector<double>(31, 1.5))) == 0.0);
  }
  SUBCASE("depth is harmonic for the symmetric walk away from the root") {
    const int n = 6;
    std::vector<double> q(n + 1, 1.0);
    for (int s = 1; s <= n; ++s) q[s] = 1.0 / (n - s + 1);
    const auto prof = WalkProfile::from_q(q);
    ScalarField F(FieldRole::vertices, n);
    for (std::size_t v = 0; v < F.size(); ++v) F[v] = vertex_from_flat(v).depth;
    for (std::size_t v = 1; v < TreeShape::level_offset(n); ++v) {
      const VertexRef x = vertex_from_flat(v);
      const double xs = prof.x[x.depth];
      const double mean = (1 - xs) * F[x.parent().flat()] + xs / 2 * (F[x.child(0).flat()] + F[x.child(1).flat()]);
      CHECK(std::abs(F[v] - mean) < 1e-15);
    }
    // the root always steps down, so depth fails the mean-value test there
    CHECK(harmonicity_residual(prof, F) == doctest::Approx(1.0));
  }
}

TEST_CASE("induced edge operator") {
  Rng rng(10);
  SUBCASE("zero in, zero out") {
    const auto prof = WalkProfile::from_q(random_q(4, rng));
    for (double v : induced_T(prof, ScalarField(FieldRole::edges, 4)).values) CHECK(v == 0.0);
  }
  SUBCASE("projection") {
    for (int n = 1; n <= 8; ++n) {
      const auto prof = WalkProfile::from_q(random_q(n, rng));
      const auto Tg = induced_T(prof, random_field(FieldRole::edges, n, rng));
      CHECK(max_abs_diff(induced_T(prof, Tg).values, Tg.values) < 1e-12);
    }
  }
  SUBCASE("matches the closed-form kernel") {
    for (int n = 1; n <= 6; ++n) {
      const auto prof = WalkProfile::from_q(random_q(n, rng));
      const auto g = random_field(FieldRole::edges, n, rng);
      const auto K = edge_kernel(prof);
      CHECK(max_abs_diff(induced_T(prof, g).values, K.apply(g.values)) < 1e-12);
    }
  }
  SUBCASE("annihilates depth-invariant fields") {
    for (int n = 1; n <= 7; ++n) {
      const auto prof = WalkProfile::from_q(random_q(n, rng));
      std::vector<double> G(n);
      for (auto& v : G) v = rng.uniform(-1, 1);
      for (double v : induced_T(prof, edge_field_from_depths(n, G)).values) CHECK(std::abs(v) < 1e-12);
    }
  }
}
