// Copyright (c) 2026 the hpsolve authors. All rights reserved.
// SPDX-License-Identifier: Apache-2.0

#ifndef HPSOLVE_LAYOUT_HPP
#define HPSOLVE_LAYOUT_HPP

#include <vector>

#include "hps/mesh.hpp"
#include "hps/spectral.hpp"

namespace hps {

/// Recursive description of how one boundary section (a side in 2D, a face in
/// 3D) is discretized: a single Gauss panel, or 2^(dim-1) sub-layouts in the
/// fixed quadrant order (lexicographic in the face's local axes).
struct PanelLayout {
  int q = 0;        // points per direction of a single panel
  int fdim = 1;     // 1 for 2D sides, 2 for 3D faces
  bool split = false;
  std::vector<PanelLayout> sub;

  int panel_pts() const { return fdim == 1 ? q : q * q; }
  int npts() const;
  int max_level() const;
  bool operator==(const PanelLayout& other) const;

  static PanelLayout panel(int q, int fdim) {
    PanelLayout l;
    l.q = q;
    l.fdim = fdim;
    return l;
  }
  static PanelLayout split_of(std::vector<PanelLayout> kids);
};

/// Pointwise-coarser combination of two layouts covering the same section.
PanelLayout layout_meet(const PanelLayout& a, const PanelLayout& b);

/// Dense interpolation matrix mapping values on `from` to values on `to`.
/// Exact for per-panel polynomials of degree <= q-1 per direction. Level
/// differences are bridged with the one-level 4-to-1 face operators.
MatR layout_transfer(const PanelLayout& from, const PanelLayout& to, const FaceProjection& proj);

/// Physical coordinates of the layout's points over the section of `box` given
/// by face index f (2D side order S,E,N,W; 3D face order -x1..+x3).
std::vector<Point> section_points(const Box& box, int dim, int face, const PanelLayout& layout);

}  // namespace hps

#endif
