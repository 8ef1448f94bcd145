#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <cmath>
#include <cstring>
#include <string>
#include <vector>

#include "doctest.h"
#include "tree_sobolev/tree_sobolev.h"

namespace {

struct ProfileGuard {
  tsob_profile* p = nullptr;
  ~ProfileGuard() { tsob_profile_destroy(p); }
};

}  // namespace

TEST_CASE("version and error state") {
  CHECK(std::string(tsob_version()) == "0.1.0");
  tsob_profile* p = nullptr;
  CHECK(tsob_profile_from_weights(nullptr, 3, 2.0, &p) == TSOB_INVALID_ARGUMENT);
  CHECK(p == nullptr);
  CHECK(std::strlen(tsob_last_error()) > 0);
  const double w[] = {1.0, 1.0};
  CHECK(tsob_profile_from_weights(w, 2, 0.5, &p) == TSOB_INVALID_ARGUMENT);
  CHECK(tsob_profile_from_weights(w, 2, 2.0, &p) == TSOB_OK);
  CHECK(std::string(tsob_last_error()).empty());
  tsob_profile_destroy(p);
  tsob_profile_destroy(nullptr);
  CHECK(tsob_profile_height(nullptr) == -1);
}

TEST_CASE("profile accessors") {
  // Symmetric walk on N = 4: q = [1, 1/4, 1/3, 1/2, 1].
  const double q[] = {1.0, 0.25, 1.0 / 3.0, 0.5, 1.0};
  ProfileGuard g;
  REQUIRE(tsob_profile_from_q(q, 4, &g.p) == TSOB_OK);
  CHECK(tsob_profile_height(g.p) == 4);
  std::vector<double> back(5);
  REQUIRE(tsob_profile_q(g.p, back.data(), back.size()) == TSOB_OK);
  for (int i = 0; i < 5; ++i) CHECK(back[i] == q[i]);
  CHECK(tsob_profile_q(g.p, back.data(), 4) == TSOB_SHAPE_MISMATCH);
  std::vector<double> x(4);
  REQUIRE(tsob_profile_x(g.p, x.data(), x.size()) == TSOB_OK);
  for (int s = 1; s < 4; ++s) CHECK(x[s] == doctest::Approx(0.5).epsilon(1e-14));
  std::vector<double> P(25), B(25), A(25);
  REQUIRE(tsob_profile_hitting(g.p, P.data(), P.size()) == TSOB_OK);
  REQUIRE(tsob_profile_leaf_hits(g.p, B.data(), B.size()) == TSOB_OK);
  REQUIRE(tsob_profile_increments(g.p, A.data(), A.size()) == TSOB_OK);
  for (int s = 0; s <= 4; ++s) {
    double sum = 0.0;
    for (int r = 0; r <= s; ++r) sum += P[s * 5 + r];
    CHECK(sum == doctest::Approx(1.0).epsilon(1e-14));
  }
  CHECK(P[4 * 5 + 4] == 1.0);
  CHECK(tsob_profile_hitting(g.p, P.data(), 24) == TSOB_SHAPE_MISMATCH);
  const double bad_q[] = {1.0, 0.0, 1.0};
  tsob_profile* bad = nullptr;
  CHECK(tsob_profile_from_q(bad_q, 2, &bad) == TSOB_INVALID_ARGUMENT);
}

TEST_CASE("extension, T, seminorm and trace") {
  const double w[] = {0.5, 0.25, 0.125};
  ProfileGuard g;
  REQUIRE(tsob_profile_from_weights(w, 3, 2.0, &g.p) == TSOB_OK);
  const std::vector<double> leaves{1, -1, 0.5, 2, 0, 0, 3, -2};
  std::vector<double> verts(15);
  REQUIRE(tsob_extend(g.p, leaves.data(), leaves.size(), verts.data(), verts.size()) == TSOB_OK);
  for (int i = 0; i < 8; ++i) CHECK(verts[7 + i] == leaves[i]);
  CHECK(tsob_extend(g.p, leaves.data(), 7, verts.data(), verts.size()) == TSOB_SHAPE_MISMATCH);

  std::vector<double> edges(14), Tedges(14), TT(14);
  for (int e = 0; e < 14; ++e) edges[e] = std::sin(1.0 + e);
  REQUIRE(tsob_induced_T(g.p, edges.data(), edges.size(), Tedges.data()) == TSOB_OK);
  REQUIRE(tsob_induced_T(g.p, Tedges.data(), Tedges.size(), TT.data()) == TSOB_OK);
  for (int e = 0; e < 14; ++e) CHECK(std::abs(TT[e] - Tedges[e]) < 1e-12);

  double semi = 0.0;
  REQUIRE(tsob_seminorm(w, 3, verts.data(), verts.size(), 2.0, &semi) == TSOB_OK);
  tsob_trace_result tr{};
  std::vector<double> opt(15);
  REQUIRE(tsob_trace(w, 3, leaves.data(), leaves.size(), 2.0, opt.data(), &tr) == TSOB_OK);
  CHECK(tr.converged == 1);
  // At p = 2 the harmonic extension is the minimizer.
  CHECK(tr.value == doctest::Approx(semi).epsilon(1e-10));
  for (int i = 0; i < 15; ++i) CHECK(opt[i] == doctest::Approx(verts[i]).epsilon(1e-9));
  REQUIRE(tsob_trace(w, 3, leaves.data(), leaves.size(), 3.0, nullptr, &tr) == TSOB_OK);
  CHECK(tr.duality_gap < 1e-10);
  CHECK(tsob_trace(w, 3, leaves.data(), leaves.size(), 1.0, nullptr, &tr) == TSOB_INVALID_ARGUMENT);
}

TEST_CASE("constants") {
  tsob_constants c{};
  REQUIRE(tsob_theoretical_constants(2.0, &c) == TSOB_OK);
  CHECK(c.C_p == doctest::Approx(2.0));
  CHECK(c.C_bar == doctest::Approx(16.0));
  CHECK(c.C_hat == doctest::Approx(8.0));
  CHECK(tsob_theoretical_constants(1.0, &c) == TSOB_INVALID_ARGUMENT);
}

TEST_CASE("run through the C API") {
  char* out = nullptr;
  int code = -1;
  REQUIRE(tsob_run(R"({"command":"verify","N":4,"p":2,"weights":"dyadic"})", &out, &code) == TSOB_OK);
  CHECK(code == 0);
  REQUIRE(out != nullptr);
  CHECK(std::string(out).find("\"passed\": true") != std::string::npos);
  tsob_string_free(out);
  REQUIRE(tsob_run("{oops", &out, &code) == TSOB_OK);
  CHECK(code == 2);
  CHECK(std::string(out).find("invalid_argument") != std::string::npos);
  tsob_string_free(out);
  CHECK(tsob_run(nullptr, &out, &code) == TSOB_INVALID_ARGUMENT);
}
