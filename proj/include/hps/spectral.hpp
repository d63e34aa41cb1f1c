// Copyright (c) 2026 the hpsolve authors. All rights reserved.
// SPDX-License-Identifier: Apache-2.0

#ifndef HPSOLVE_SPECTRAL_HPP
#define HPSOLVE_SPECTRAL_HPP

#include <vector>

#include "hps/core.hpp"

namespace hps {

/// Chebyshev--Lobatto nodes on [-1,1], descending from +1. p >= 2.
VecR cheb_lobatto_1d(int p);

/// Clenshaw--Curtis quadrature weights matching cheb_lobatto_1d(p); exact for
/// polynomials of degree <= p-1 on [-1,1].
VecR cheb_lobatto_weights(int p);

struct GaussRule {
  VecR nodes;    // ascending on (-1,1)
  VecR weights;  // positive, sum to 2
};

/// Order-q Gauss--Legendre rule, exact for degree <= 2q-1.
GaussRule gauss_legendre_1d(int q);

/// Spectral differentiation matrix on cheb_lobatto_1d(p).
MatR cheb_diff_matrix(int p);

/// Barycentric Lagrange interpolation matrix, src nodes -> dst points.
/// Exact on polynomials of degree <= |src|-1; rows sum to 1.
MatR barycentric_interp_matrix(const VecR& src, const VecR& dst);

/// Interior/exterior point index sets of the p^d tensor Chebyshev grid.
/// Tensor index is axis-1 major: 2D idx = i1*p + i2, 3D idx = (i1*p + i2)*p + i3,
/// where axis node k carries coordinate cheb_lobatto_1d(p)[k].
struct IndexSets {
  std::vector<int> interior;  // (p-2)^d points, increasing tensor index
  std::vector<int> exterior;  // the rest, increasing tensor index
};
IndexSets leaf_index_sets(int p, int dim);

/// Precomputed leaf-level interpolation/differentiation operators.
/// Built on the reference element [-1,1]^d; derivative rows carry the 2/side
/// scale so the set is specific to one leaf side length.
struct LeafOperatorSet {
  int dim = 0;
  int p = 0;
  int q = 0;
  double side = 2.0;  // physical leaf side length
  double eta = 0.0;   // ItI impedance parameter

  MatR P;       // Gauss boundary data -> boundary Chebyshev values
  MatR Q;       // DtN: leaf values -> outward normal derivative at Gauss points
  MatR N;       // ItI: leaf values -> normal derivative, 4p rows (corners twice)
  MatR Ntilde;  // ItI: leaf values -> normal derivative, 4p-4 rows (corners once)
  MatC H;       // ItI: N - i*eta*(boundary sampling), 4p rows
  MatC G;       // ItI: Ntilde + i*eta*(boundary sampling), 4p-4 rows
  MatC QH;      // ItI: (per-side Chebyshev->Gauss interpolation) * H

  IndexSets idx;
};

/// 2D DtN operators: P is (4p-4) x 4q with corner rows averaging the two
/// adjoining side panels; Q is 4q x p^2.
LeafOperatorSet assemble_dtn_ops_2d(int p, int q, double side);

/// 2D ItI operators; boundary-Chebyshev rows of P/Ntilde/G follow the cyclic
/// side walk (S,E,N,W) with the last point of each side dropped.
LeafOperatorSet assemble_iti_ops_2d(int p, int q, double eta, double side);

/// 3D DtN operators: P is (p^3-(p-2)^3) x 6q^2; edge rows average two faces,
/// corner rows three.
LeafOperatorSet assemble_dtn_ops_3d(int p, int q, double side);

/// Parent-to-children Chebyshev interpolant, 8p^3 x p^3, children stacked in
/// the fixed octant order.
MatR refinement_interpolant(int p);

/// Transfer operators between one coarse and four fine Gauss face panels.
struct FaceProjection {
  MatR refine;   // 4q^2 x q^2, coarse panel -> four quadrant panels
  MatR coarsen;  // q^2 x 4q^2, interpolate fine panels at coarse points
};
FaceProjection face_projection_ops(int q);

enum class Variant { dtn, iti };

/// Memoized operator sets keyed on (variant, dim, p, q, eta, side).
/// Returned reference stays valid for the process lifetime.
const LeafOperatorSet& leaf_ops_cache(Variant v, int dim, int p, int q, double eta, double side);

/// Kronecker product helper (dense).
MatR kron(const MatR& a, const MatR& b);

}  // namespace hps

#endif
