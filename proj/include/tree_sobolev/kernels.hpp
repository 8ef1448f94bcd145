#pragma once

// Kernels of the edge operator T and their depth reductions.
//
// For edges x, y with s = d(x), t = d(y), r = dlca(x, y):
//   neither descends from the other:  K = -q_s 2^{-t} sum_{k<=r} 2^k P(s-1, k)        (<= 0)
//   otherwise (r = min(s, t)):         K =  q_s 2^{-t} sum_{k<r} (2^r - 2^k) P(s-1, k) (>= 0)
// K0 keeps the first case (non-ancestral), K1 the second (ancestral).

#include <vector>

#include "tree_sobolev/common.hpp"
#include "tree_sobolev/tree.hpp"
#include "tree_sobolev/walk.hpp"

namespace tsob {

double kernel_closed_form(const WalkProfile& profile, const VertexRef& x, const VertexRef& y);
// Sum of A(d(x), dlca(x, w)) over the leaves w below y.
double kernel_bruteforce(const WalkProfile& profile, const VertexRef& x, const VertexRef& y);

enum class KernelPart { full, non_ancestral, ancestral };

// Dense (2^{N+1}-2)^2 edge kernel in edge flat order; N <= kernel_max_height.
Matrix edge_kernel(const WalkProfile& profile, KernelPart part = KernelPart::full);
Matrix edge_kernel_bruteforce(const WalkProfile& profile);

// N x N depth kernels, entry (s-1, t-1) for s, t = 1..N.
Matrix reduced_L0(const WalkProfile& profile);
Matrix reduced_L1(const WalkProfile& profile);
// Upper bound q_s prod_{k=m}^{s-1} (1 - q_k), m = min(s, t), on L = L1 = -L0.
Matrix reduced_L_bound(const WalkProfile& profile);

// L0 / L1 from the full edge kernel: row sums over {y : d(y) = t} of K0 / K1
// at the leftmost edge of depth s.
Matrix reduced_from_edge_kernel(const WalkProfile& profile, KernelPart part);

// Depth reversal s -> N+1-s of the one-dimensional problem.
struct ReversedKernel {
  std::vector<double> w;        // w_s = 2^{N+1-s} W_{N+1-s}, index s-1
  std::vector<double> alpha;    // w_s^{-1/(p-1)}
  std::vector<double> Q;        // Q_s = alpha_s / sum_{k<=s} alpha_k
  Matrix kernel;                // script-K(s, t) = L(N+1-s, N+1-t)
  Matrix bound;                 // Q_s for t <= s, Q_s prod_{k=s+1}^t (1 - Q_k) for t > s
};

ReversedKernel reversed_kernel(const TreeWeights& weights, double p);

// Depth weights 2^k W_k of L^p over depths, index k-1.
std::vector<double> depth_measure(const TreeWeights& weights);
// w_s = 2^{N+1-s} W_{N+1-s}.
std::vector<double> reversed_measure(const TreeWeights& weights);

}  // namespace tsob
