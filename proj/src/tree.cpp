#include "tree_sobolev/tree.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <string>

#include "tree_sobolev/random.hpp"

namespace tsob {

std::vector<double> Matrix::apply(const std::vector<double>& v) const {
  require(v.size() == cols_, ErrorCode::shape_mismatch, "matrix/vector size mismatch");
  std::vector<double> out(rows_, 0.0);
  for (std::size_t i = 0; i < rows_; ++i) {
    const double* row = &data_[i * cols_];
    double acc = 0.0;
    for (std::size_t j = 0; j < cols_; ++j) acc += row[j] * v[j];
    out[i] = acc;
  }
  return out;
}

double Matrix::max_abs() const noexcept {
  double m = 0.0;
  for (double x : data_) m = std::max(m, std::abs(x));
  return m;
}

double max_abs_diff(const std::vector<double>& a, const std::vector<double>& b) {
  require(a.size() == b.size(), ErrorCode::shape_mismatch, "vector size mismatch");
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

int max_height() {
  if (const char* env = std::getenv("TREE_SOBOLEV_NMAX")) {
    char* end = nullptr;
    long v = std::strtol(env, &end, 10);
    // 2^{N+1} must stay addressable; 40 is far beyond anything practical.
    if (end != env && *end == '\0' && v >= 1 && v <= 40) return static_cast<int>(v);
  }
  return default_max_height;
}

TreeShape::TreeShape(int height) : height_(height) {
  require(height >= 1, ErrorCode::invalid_argument, "tree height must be >= 1");
  require(height <= max_height(), ErrorCode::limit_exceeded,
          "tree height " + std::to_string(height) + " exceeds cap " + std::to_string(max_height()));
}

VertexRef vertex_from_flat(std::size_t flat) {
  int depth = std::bit_width(flat + 1) - 1;
  return {depth, flat + 1 - (std::size_t{1} << depth)};
}

bool valid_vertex(const TreeShape& shape, const VertexRef& v) {
  return v.depth >= 0 && v.depth <= shape.height() && v.index < (std::uint64_t{1} << v.depth);
}

int dlca(const VertexRef& x, const VertexRef& y) noexcept {
  int m = std::min(x.depth, y.depth);
  std::uint64_t a = x.index >> (x.depth - m);
  std::uint64_t b = y.index >> (y.depth - m);
  return m - std::bit_width(a ^ b);
}

int dlca(const TreeShape& shape, const VertexRef& x, const VertexRef& y) {
  require(valid_vertex(shape, x) && valid_vertex(shape, y), ErrorCode::shape_mismatch,
          "vertex does not belong to a tree of height " + std::to_string(shape.height()));
  return dlca(x, y);
}

TreeWeights::TreeWeights(std::vector<double> values) : values_(std::move(values)) {
  require(!values_.empty(), ErrorCode::invalid_argument, "weights must be non-empty");
  for (double w : values_) {
    require(std::isfinite(w) && w > 0.0, ErrorCode::invalid_argument,
            "edge weights must be positive and finite");
  }
}

TreeWeights TreeWeights::unit(int height) {
  return TreeWeights(std::vector<double>(static_cast<std::size_t>(std::max(height, 0)), 1.0));
}

TreeWeights TreeWeights::dyadic(int height, double scale) {
  std::vector<double> w(static_cast<std::size_t>(std::max(height, 0)));
  for (int k = 1; k <= height; ++k) w[k - 1] = scale * std::ldexp(1.0, -k);
  return TreeWeights(std::move(w));
}

TreeWeights TreeWeights::geometric(int height, double beta, double scale) {
  require(std::isfinite(beta) && beta > 0.0, ErrorCode::invalid_argument, "beta must be positive");
  std::vector<double> w(static_cast<std::size_t>(std::max(height, 0)));
  for (int k = 1; k <= height; ++k) w[k - 1] = scale * std::pow(beta, k);
  return TreeWeights(std::move(w));
}

const char* to_string(FieldRole role) noexcept {
  switch (role) {
    case FieldRole::vertices: return "vertices";
    case FieldRole::edges: return "edges";
    case FieldRole::leaves: return "leaves";
  }
  return "?";
}

std::size_t ScalarField::expected_size(FieldRole r, int n) noexcept {
  switch (r) {
    case FieldRole::vertices: return (std::size_t{2} << n) - 1;
    case FieldRole::edges: return (std::size_t{2} << n) - 2;
    case FieldRole::leaves: return std::size_t{1} << n;
  }
  return 0;
}

ScalarField::ScalarField(FieldRole r, int n) : role(r), height(n) {
  TreeShape check(n);
  values.assign(expected_size(r, n), 0.0);
}

ScalarField::ScalarField(FieldRole r, int n, std::vector<double> v)
    : role(r), height(n), values(std::move(v)) {
  TreeShape check(n);
  require(values.size() == expected_size(r, n), ErrorCode::shape_mismatch,
          std::string(to_string(r)) + " field for height " + std::to_string(n) + " needs " +
              std::to_string(expected_size(r, n)) + " values, got " +
              std::to_string(values.size()));
}

void require_role(const ScalarField& f, FieldRole role, const char* who) {
  require(f.role == role, ErrorCode::shape_mismatch,
          std::string(who) + ": expected a " + to_string(role) + " field, got " +
              to_string(f.role));
}

ScalarField integrate(const ScalarField& g) {
  require_role(g, FieldRole::edges, "integrate");
  ScalarField out(FieldRole::vertices, g.height);
  // Level by level so each value is parent + edge, summed root to leaf.
  for (std::size_t v = 1; v < out.size(); ++v) out[v] = out[(v - 1) / 2] + g[v - 1];
  return out;
}

ScalarField gradient(const ScalarField& f) {
  require_role(f, FieldRole::vertices, "gradient");
  ScalarField out(FieldRole::edges, f.height);
  for (std::size_t v = 1; v < f.size(); ++v) out[v - 1] = f[v] - f[(v - 1) / 2];
  return out;
}

ScalarField restrict_to_leaves(const ScalarField& f) {
  require_role(f, FieldRole::vertices, "restrict_to_leaves");
  const std::size_t off = TreeShape::level_offset(f.height);
  return ScalarField(FieldRole::leaves, f.height,
                     std::vector<double>(f.values.begin() + static_cast<std::ptrdiff_t>(off),
                                         f.values.end()));
}

ScalarField edge_field_from_depths(int height, std::span<const double> by_depth) {
  require(by_depth.size() == static_cast<std::size_t>(height), ErrorCode::shape_mismatch,
          "depth profile length must equal the tree height");
  ScalarField out(FieldRole::edges, height);
  for (int k = 1; k <= height; ++k) {
    const std::size_t off = TreeShape::level_offset(k) - 1;
    std::fill_n(out.values.begin() + static_cast<std::ptrdiff_t>(off), std::size_t{1} << k,
                by_depth[k - 1]);
  }
  return out;
}

ScalarField TreeAutomorphism::pullback(const ScalarField& f) const {
  require(f.height == height, ErrorCode::shape_mismatch, "automorphism/field height mismatch");
  ScalarField out(f.role, f.height);
  const std::size_t shift = f.role == FieldRole::vertices ? 0
                            : f.role == FieldRole::edges  ? 1
                                                          : TreeShape::level_offset(height);
  for (std::size_t i = 0; i < f.size(); ++i) out[i] = f[image[i + shift] - shift];
  return out;
}

TreeAutomorphism automorphism_from_swaps(const TreeShape& shape, const std::vector<bool>& swaps) {
  const std::size_t internal = TreeShape::level_offset(shape.height());
  require(swaps.size() == internal, ErrorCode::shape_mismatch,
          "one swap decision per internal vertex required");
  TreeAutomorphism sigma{shape.height(), std::vector<std::uint64_t>(shape.vertex_count())};
  sigma.image[0] = 0;
  for (std::size_t v = 0; v < internal; ++v) {
    const std::uint64_t img = sigma.image[v];
    const bool swap = swaps[v];
    sigma.image[2 * v + 1] = 2 * img + (swap ? 2 : 1);
    sigma.image[2 * v + 2] = 2 * img + (swap ? 1 : 2);
  }
  return sigma;
}

TreeAutomorphism random_symmetry(const TreeShape& shape, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<bool> swaps(TreeShape::level_offset(shape.height()));
  for (std::size_t i = 0; i < swaps.size(); ++i) swaps[i] = rng.coin();
  return automorphism_from_swaps(shape, swaps);
}

std::uint64_t fnv1a64(std::string_view bytes) noexcept {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::uint64_t weights_digest(const TreeWeights& weights) {
  std::string text;
  char buf[32];
  for (double w : weights.values()) {
    std::snprintf(buf, sizeof buf, "%.17g,", w);
    text += buf;
  }
  return fnv1a64(text);
}

}  // namespace tsob
