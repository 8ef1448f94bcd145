#include "tree_sobolev/extension.hpp"

#include <algorithm>
#include <cmath>

namespace tsob {

namespace {

void require_same_height(const WalkProfile& profile, const ScalarField& f, const char* who) {
  require(profile.height == f.height, ErrorCode::shape_mismatch,
          std::string(who) + ": profile height " + std::to_string(profile.height) +
              " does not match field height " + std::to_string(f.height));
}

// S(v) = sum of leaf values below v, as a vertex field.
std::vector<double> subtree_sums(const ScalarField& leaves) {
  const TreeShape shape(leaves.height);
  std::vector<double> sums(shape.vertex_count(), 0.0);
  const std::size_t off = TreeShape::level_offset(shape.height());
  std::copy(leaves.values.begin(), leaves.values.end(), sums.begin() + static_cast<std::ptrdiff_t>(off));
  for (std::size_t v = off; v-- > 0;) sums[v] = sums[2 * v + 1] + sums[2 * v + 2];
  return sums;
}

}  // namespace

ScalarField harmonic_extend(const WalkProfile& profile, const ScalarField& leaves) {
  require_role(leaves, FieldRole::leaves, "harmonic_extend");
  require_same_height(profile, leaves, "harmonic_extend");
  const int n = leaves.height;
  const std::vector<double> sums = subtree_sums(leaves);
  ScalarField out(FieldRole::vertices, n);
  for (int s = 0; s < n; ++s) {
    const std::size_t off = TreeShape::level_offset(s);
    for (std::uint64_t j = 0; j < (std::uint64_t{1} << s); ++j) {
      const VertexRef x{s, j};
      // Leaves with dlca(x, w) = r < s sit below pi_r x but not below pi_{r+1} x.
      double acc = 0.0;
      for (int r = 0; r < s; ++r) {
        const double ring = sums[x.ancestor(r).flat()] - sums[x.ancestor(r + 1).flat()];
        acc += profile.B(s, r) * ring;
      }
      acc += profile.B(s, s) * sums[off + j];
      out[off + j] = acc;
    }
  }
  const std::size_t off = TreeShape::level_offset(n);
  std::copy(leaves.values.begin(), leaves.values.end(), out.values.begin() + static_cast<std::ptrdiff_t>(off));
  return out;
}

ScalarField harmonic_extend_naive(const WalkProfile& profile, const ScalarField& leaves) {
  require_role(leaves, FieldRole::leaves, "harmonic_extend_naive");
  require_same_height(profile, leaves, "harmonic_extend_naive");
  const int n = leaves.height;
  ScalarField out(FieldRole::vertices, n);
  for (std::size_t v = 0; v < out.size(); ++v) {
    const VertexRef x = vertex_from_flat(v);
    double acc = 0.0;
    for (std::uint64_t w = 0; w < leaves.size(); ++w) {
      acc += profile.B(x.depth, dlca(x, VertexRef{n, w})) * leaves[w];
    }
    out[v] = acc;
  }
  return out;
}

ScalarField induced_T(const WalkProfile& profile, const ScalarField& edges) {
  require_role(edges, FieldRole::edges, "induced_T");
  require_same_height(profile, edges, "induced_T");
  return gradient(harmonic_extend(profile, restrict_to_leaves(integrate(edges))));
}

double harmonicity_residual(const WalkProfile& profile, const ScalarField& f) {
  require_role(f, FieldRole::vertices, "harmonicity_residual");
  require_same_height(profile, f, "harmonicity_residual");
  const std::size_t internal = TreeShape::level_offset(f.height);
  double worst = 0.0;
  for (std::size_t v = 0; v < internal; ++v) {
    const VertexRef x = vertex_from_flat(v);
    const double down = profile.x[static_cast<std::size_t>(x.depth)];
    double mean = 0.5 * down * (f[2 * v + 1] + f[2 * v + 2]);
    if (v > 0) mean += (1.0 - down) * f[(v - 1) / 2];
    worst = std::max(worst, std::abs(f[v] - mean));
  }
  return worst;
}

ScalarField averaging_extend(const ScalarField& leaves) {
  require_role(leaves, FieldRole::leaves, "averaging_extend");
  const std::vector<double> sums = subtree_sums(leaves);
  ScalarField out(FieldRole::vertices, leaves.height);
  for (std::size_t v = 0; v < out.size(); ++v) {
    const VertexRef x = vertex_from_flat(v);
    out[v] = std::ldexp(sums[v], x.depth - leaves.height);
  }
  const std::size_t off = TreeShape::level_offset(leaves.height);
  std::copy(leaves.values.begin(), leaves.values.end(), out.values.begin() + static_cast<std::ptrdiff_t>(off));
  return out;
}

}  // namespace tsob
