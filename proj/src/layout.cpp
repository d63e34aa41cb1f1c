// Copyright (c) 2026 the hpsolve authors. All rights reserved.
// SPDX-License-Identifier: Apache-2.0

#include "hps/layout.hpp"

#include <algorithm>

namespace hps {

int PanelLayout::npts() const {
  if (!split) return panel_pts();
  int n = 0;
  for (const auto& s : sub) n += s.npts();
  return n;
}

int PanelLayout::max_level() const {
  if (!split) return 0;
  int m = 0;
  for (const auto& s : sub) m = std::max(m, s.max_level());
  return m + 1;
}

bool PanelLayout::operator==(const PanelLayout& other) const {
  if (split != other.split || q != other.q || fdim != other.fdim) return false;
  if (!split) return true;
  for (size_t i = 0; i < sub.size(); ++i)
    if (!(sub[i] == other.sub[i])) return false;
  return true;
}

PanelLayout PanelLayout::split_of(std::vector<PanelLayout> kids) {
  PanelLayout l;
  require(!kids.empty(), "PanelLayout::split_of: empty");
  l.q = kids[0].q;
  l.fdim = kids[0].fdim;
  l.split = true;
  l.sub = std::move(kids);
  return l;
}

PanelLayout layout_meet(const PanelLayout& a, const PanelLayout& b) {
  if (!a.split || !b.split) {
    // the coarser of the two sets of discretization points
    return a.split ? b : a;
  }
  std::vector<PanelLayout> kids;
  kids.reserve(a.sub.size());
  for (size_t i = 0; i < a.sub.size(); ++i) kids.push_back(layout_meet(a.sub[i], b.sub[i]));
  return PanelLayout::split_of(std::move(kids));
}

namespace {

MatR blockdiag_transfer(const PanelLayout& from, const PanelLayout& to, const FaceProjection& proj) {
  MatR out = MatR::Zero(to.npts(), from.npts());
  int ro = 0, co = 0;
  for (size_t i = 0; i < from.sub.size(); ++i) {
    const MatR blk = layout_transfer(from.sub[i], to.sub[i], proj);
    out.block(ro, co, blk.rows(), blk.cols()) = blk;
    ro += static_cast<int>(blk.rows());
    co += static_cast<int>(blk.cols());
  }
  return out;
}

}  // namespace

MatR layout_transfer(const PanelLayout& from, const PanelLayout& to, const FaceProjection& proj) {
  require(from.fdim == 2, "layout_transfer: only face (2D-panel) transfers are needed");
  if (!from.split && !to.split) return MatR::Identity(from.panel_pts(), from.panel_pts());
  if (from.split && to.split) return blockdiag_transfer(from, to, proj);
  if (!from.split) {
    // refine one level, then recurse into the sub-layouts
    PanelLayout one = PanelLayout::split_of(std::vector<PanelLayout>(4, PanelLayout::panel(from.q, 2)));
    const MatR rest = blockdiag_transfer(one, to, proj);
    return rest * proj.refine;
  }
  // from is split, to is a panel: interpolate each quadrant onto a panel first
  PanelLayout one = PanelLayout::split_of(std::vector<PanelLayout>(4, PanelLayout::panel(to.q, 2)));
  const MatR inner = blockdiag_transfer(from, one, proj);
  return proj.coarsen * inner;
}

namespace {

void collect_points(const Box& box, int dim, int face, const PanelLayout& layout,
                    std::vector<Point>& out) {
  if (!layout.split) {
    // single panel over this (sub)section
    const auto pts = leaf_gauss_boundary_points(box, layout.q, dim);
    const int per = layout.panel_pts();
    for (int i = 0; i < per; ++i) out.push_back(pts[face * per + i]);
    return;
  }
  const Point mid = 0.5 * (box.lo + box.hi);
  if (dim == 2) {
    // two halves along the side's running axis, ascending
    const int axis = (face == 0 || face == 2) ? 0 : 1;
    for (int h = 0; h < 2; ++h) {
      Box sb = box;
      (h ? sb.lo : sb.hi)[axis] = mid[axis];
      collect_points(sb, dim, face, layout.sub[h], out);
    }
  } else {
    const int fa = face / 2;
    const int ua = (fa == 0) ? 1 : 0;
    const int va = (fa == 2) ? 1 : 2;
    for (int hu = 0; hu < 2; ++hu)
      for (int hv = 0; hv < 2; ++hv) {
        Box sb = box;
        (hu ? sb.lo : sb.hi)[ua] = mid[ua];
        (hv ? sb.lo : sb.hi)[va] = mid[va];
        collect_points(sb, dim, face, layout.sub[hu * 2 + hv], out);
      }
  }
}

}  // namespace

std::vector<Point> section_points(const Box& box, int dim, int face, const PanelLayout& layout) {
  std::vector<Point> out;
  out.reserve(layout.npts());
  collect_points(box, dim, face, layout, out);
  return out;
}

}  // namespace hps
