#pragma once

#include "tree_sobolev/tree.hpp"
#include "tree_sobolev/walk.hpp"

namespace tsob {

// Harmonic extension of leaf data with respect to the walk:
//   (Hf)(x) = sum_w B(d(x), dlca(x, w)) f(w).
// O(N 2^N) via subtree sums; leaf values are copied verbatim.
ScalarField harmonic_extend(const WalkProfile& profile, const ScalarField& leaves);

// Direct double sum over (vertex, leaf) pairs. O(4^N); reference only.
ScalarField harmonic_extend_naive(const WalkProfile& profile, const ScalarField& leaves);

// Edge operator T g = gradient(H(integrate(g) on the leaves)).
ScalarField induced_T(const WalkProfile& profile, const ScalarField& edges);

// Largest violation of the one-step mean-value property at internal vertices.
double harmonicity_residual(const WalkProfile& profile, const ScalarField& vertices);

// Mean of the leaf descendants at every vertex.
ScalarField averaging_extend(const ScalarField& leaves);

}  // namespace tsob
