#pragma once

// Complete binary tree of height N with depth-dependent edge weights.
//
// Vertices are stored in level order: depth k occupies the flat range
// [2^k - 1, 2^{k+1} - 1), and within a level the index bits are the vertex's
// binary string read from the root. An edge is identified with its lower
// endpoint, so edge fields use the vertex layout shifted by one (the root has
// no edge).

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "tree_sobolev/common.hpp"

namespace tsob {

inline constexpr int default_max_height = 20;
// Full edge kernels are (2^{N+1}-2)^2 dense; beyond this they are not built.
inline constexpr int kernel_max_height = 10;

// Height cap, honouring TREE_SOBOLEV_NMAX when set to a positive integer.
int max_height();

class TreeShape {
 public:
  explicit TreeShape(int height);

  int height() const noexcept { return height_; }
  std::size_t vertex_count() const noexcept { return (std::size_t{2} << height_) - 1; }
  std::size_t edge_count() const noexcept { return (std::size_t{2} << height_) - 2; }
  std::size_t leaf_count() const noexcept { return std::size_t{1} << height_; }
  std::size_t level_size(int depth) const noexcept { return std::size_t{1} << depth; }
  // Flat offset of the first vertex at `depth`.
  static std::size_t level_offset(int depth) noexcept { return (std::size_t{1} << depth) - 1; }

  friend bool operator==(const TreeShape&, const TreeShape&) = default;

 private:
  int height_;
};

struct VertexRef {
  int depth = 0;
  std::uint64_t index = 0;

  std::size_t flat() const noexcept { return TreeShape::level_offset(depth) + index; }
  // Edge slot of a non-root vertex.
  std::size_t edge_flat() const noexcept { return flat() - 1; }
  VertexRef parent() const noexcept { return {depth - 1, index >> 1}; }
  VertexRef child(int bit) const noexcept { return {depth + 1, (index << 1) | std::uint64_t(bit)}; }
  // Prefix of length `k` <= depth.
  VertexRef ancestor(int k) const noexcept { return {k, index >> (depth - k)}; }

  friend bool operator==(const VertexRef&, const VertexRef&) = default;
};

VertexRef vertex_from_flat(std::size_t flat);
bool valid_vertex(const TreeShape& shape, const VertexRef& v);

// Depth of the least common ancestor (length of the common prefix).
int dlca(const VertexRef& x, const VertexRef& y) noexcept;
int dlca(const TreeShape& shape, const VertexRef& x, const VertexRef& y);

// True when y lies in the subtree of x (x itself included).
inline bool is_descendant(const VertexRef& y, const VertexRef& x) noexcept {
  return y.depth >= x.depth && dlca(x, y) == x.depth;
}

class TreeWeights {
 public:
  // values[k-1] is the weight of every edge at depth k.
  explicit TreeWeights(std::vector<double> values);

  static TreeWeights unit(int height);
  static TreeWeights dyadic(int height, double scale = 1.0);
  static TreeWeights geometric(int height, double beta, double scale = 1.0);

  int height() const noexcept { return static_cast<int>(values_.size()); }
  double at(int depth) const { return values_.at(static_cast<std::size_t>(depth - 1)); }
  const std::vector<double>& values() const noexcept { return values_; }

 private:
  std::vector<double> values_;
};

enum class FieldRole { vertices, edges, leaves };

const char* to_string(FieldRole role) noexcept;

struct ScalarField {
  FieldRole role;
  int height;
  std::vector<double> values;

  ScalarField(FieldRole r, int n);
  ScalarField(FieldRole r, int n, std::vector<double> v);

  static std::size_t expected_size(FieldRole r, int n) noexcept;
  TreeShape shape() const { return TreeShape(height); }

  double& operator[](std::size_t i) noexcept { return values[i]; }
  double operator[](std::size_t i) const noexcept { return values[i]; }
  std::size_t size() const noexcept { return values.size(); }
};

void require_role(const ScalarField& f, FieldRole role, const char* who);

// f̃(x) = sum of g along the root-to-x path, f̃(root) = 0.
ScalarField integrate(const ScalarField& edge_field);
// Edge value F(x) - F(parent(x)).
ScalarField gradient(const ScalarField& vertex_field);
ScalarField restrict_to_leaves(const ScalarField& vertex_field);
// Depth-invariant edge field x -> values[d(x)-1].
ScalarField edge_field_from_depths(int height, std::span<const double> by_depth);

// Automorphism as a permutation of flat vertex indices.
struct TreeAutomorphism {
  int height;
  std::vector<std::uint64_t> image;

  VertexRef operator()(const VertexRef& v) const { return vertex_from_flat(image[v.flat()]); }
  // Pull-back of a field: (F o sigma)(x) = F(sigma x).
  ScalarField pullback(const ScalarField& f) const;
};

// `swaps[flat(v)]` says whether the children of internal vertex v are exchanged.
TreeAutomorphism automorphism_from_swaps(const TreeShape& shape, const std::vector<bool>& swaps);
TreeAutomorphism random_symmetry(const TreeShape& shape, std::uint64_t seed);

std::uint64_t fnv1a64(std::string_view bytes) noexcept;
// Hash of the weight values printed with %.17g.
std::uint64_t weights_digest(const TreeWeights& weights);

}  // namespace tsob
