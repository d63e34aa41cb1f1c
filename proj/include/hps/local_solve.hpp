// Copyright (c) 2026 the hpsolve authors. All rights reserved.
// SPDX-License-Identifier: Apache-2.0

#ifndef HPSOLVE_LOCAL_SOLVE_HPP
#define HPSOLVE_LOCAL_SOLVE_HPP

#include <functional>
#include <vector>

#include "hps/mesh.hpp"
#include "hps/spectral.hpp"

namespace hps {

/// One term of the differential operator, with a spatially varying real
/// coefficient.
struct CoefficientField {
  enum class Role { laplacian, gradient, zeroth, second_order };
  Role role = Role::laplacian;
  int axis = -1;   // gradient / second_order first axis
  int axis2 = -1;  // second_order second axis (axis2 == axis gives a pure term)
  std::function<Real(const Point&)> eval;
};

/// Collocation matrix of the operator on a leaf's Chebyshev grid; per-axis
/// derivative scaling 2/side per order.
MatR discretize_operator(const Box& leaf_box, int leaf_id,
                         const std::vector<CoefficientField>& terms, int p, int dim);

template <class S>
struct LeafSolution {
  Mat<S> Y;  // boundary Gauss data -> interior values, p^d x (2d)q^(d-1)
  Vec<S> v;  // particular solution on the Chebyshev grid
  Mat<S> T;  // Poincare--Steklov matrix on the Gauss boundary
  Vec<S> h;  // outgoing boundary data on the Gauss boundary
  Eigen::PartialPivLU<Mat<S>> fac;  // DtN: L(Ii,Ii); ItI: [G; L(Ii,:)]
  double rcond = 1.0;
  bool ill_conditioned = false;
};

/// DtN local solve (2D and 3D); builds Y, v, T, h per the boundary-bordered
/// collocation system. Throws on factorization failure, carrying a condition
/// estimate; sets ill_conditioned when rcond < 1e-12.
LeafSolution<Real> local_solve_dtn(const MatR& lmat, const VecR& fvec, const LeafOperatorSet& ops);

/// ItI local solve (2D). B = [G; L(Ii,:)], Y = B^-1(:,Ie) P, T = Q H Y.
LeafSolution<Complex> local_solve_iti(const MatR& lmat, const VecC& fvec, const LeafOperatorSet& ops);

/// Batched local solves over a list of leaves; output order matches input
/// order and each entry is bit-identical to the single-leaf call. Per-leaf
/// failures are aggregated into one error naming the leaves.
template <class S>
std::vector<LeafSolution<S>> local_solve_batch(
    const DiscretizationTree& tree, const std::vector<int>& leaf_ids,
    const std::vector<CoefficientField>& terms,
    const std::function<Complex(const Point&)>& source, const LeafOperatorSet& ops);

/// Particular-solution refresh for a new source, reusing the stored
/// factorization. Returns (v, h).
std::pair<VecR, VecR> leaf_resolve_source(const LeafSolution<Real>& sol, const VecR& f,
                                          const LeafOperatorSet& ops);
std::pair<VecC, VecC> leaf_resolve_source(const LeafSolution<Complex>& sol, const VecC& f,
                                          const LeafOperatorSet& ops);

}  // namespace hps

#endif
