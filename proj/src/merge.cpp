// Copyright (c) 2026 the hpsolve authors. All rights reserved.
// SPDX-License-Identifier: Apache-2.0

#include "hps/merge.hpp"

#include <sstream>

namespace hps {

namespace {

// Interface between two children: the low child's high-side face meets the
// high child's low-side face. Interface ids follow the boundary-section
// numbering used for the block matrices (2D: sections 5..8, 3D: 9..20).
struct Interface {
  int clo, flo;  // low child and its face
  int chi, fhi;  // high child and its face
};

const std::vector<Interface>& interfaces(int dim) {
  static const std::vector<Interface> if2d = {
      {0, 1, 1, 3},  // a|b
      {1, 2, 2, 0},  // b|c
      {3, 1, 2, 3},  // d|c
      {0, 2, 3, 0},  // a|d
  };
  static const std::vector<Interface> if3d = {
      {0, 1, 1, 0}, {1, 3, 2, 2}, {3, 1, 2, 0}, {0, 3, 3, 2},
      {4, 1, 5, 0}, {5, 3, 6, 2}, {7, 1, 6, 0}, {4, 3, 7, 2},
      {0, 5, 4, 4}, {1, 5, 5, 4}, {2, 5, 6, 4}, {3, 5, 7, 4},
  };
  return dim == 2 ? if2d : if3d;
}

struct ExtDest {
  int pface;  // parent face
  int qpos;   // quadrant/half position within the parent face
};

// exterior destination of (child, face); {-1,-1} when the face is interior
ExtDest ext_dest(int dim, int child, int face) {
  const int* off = child_offset[child];
  if (dim == 2) {
    const int axis = (face == 1 || face == 3) ? 0 : 1;
    const int high = (face == 1 || face == 2) ? 1 : 0;
    if (off[axis] != high) return {-1, -1};
    const int run = axis == 0 ? 1 : 0;
    return {face, off[run]};
  }
  const int axis = face / 2;
  const int high = face % 2;
  if (off[axis] != high) return {-1, -1};
  const int ua = (axis == 0) ? 1 : 0;
  const int va = (axis == 2) ? 1 : 2;
  return {face, off[ua] * 2 + off[va]};
}

int interface_of(int dim, int child, int face) {
  const auto& ifs = interfaces(dim);
  for (size_t t = 0; t < ifs.size(); ++t)
    if ((ifs[t].clo == child && ifs[t].flo == face) || (ifs[t].chi == child && ifs[t].fhi == face))
      return static_cast<int>(t);
  return -1;
}

template <class S>
std::array<int, 7> face_offsets(const ChildView<S>& c, int nface) {
  std::array<int, 7> off{};
  off[0] = 0;
  for (int f = 0; f < nface; ++f) off[f + 1] = off[f] + (*c.sections)[f].npts();
  return off;
}

void check_restriction(const PanelLayout& a, const PanelLayout& b) {
  if (!a.split && !b.split) return;
  if (!a.split) {
    require(b.max_level() <= 1,
            "merge: level restriction violated at an interface; run enforce_level_restriction");
    return;
  }
  if (!b.split) {
    require(a.max_level() <= 1,
            "merge: level restriction violated at an interface; run enforce_level_restriction");
    return;
  }
  for (size_t i = 0; i < a.sub.size(); ++i) check_restriction(a.sub[i], b.sub[i]);
}

// Geometry shared by the assembly paths.
template <class S>
struct MergeGeom {
  int dim, nchild, nface;
  std::vector<std::array<int, 7>> child_off;
  std::vector<PanelLayout> meets;           // per interface
  std::vector<int> int_off;                 // per interface
  int n_int = 0;
  std::vector<PanelLayout> parent_sections; // per parent face
  std::vector<int> parent_face_off;
  // canonical exterior offset per (child, face); -1 when interior
  std::vector<std::array<int, 6>> ext_off;
  int n_ext = 0;

  MergeGeom(int d, const std::vector<ChildView<S>>& ch, bool need_meets) {
    dim = d;
    nchild = d == 2 ? 4 : 8;
    nface = 2 * d;
    require(static_cast<int>(ch.size()) == nchild, "merge: wrong number of children");
    child_off.resize(nchild);
    for (int k = 0; k < nchild; ++k) {
      require(static_cast<int>(ch[k].sections->size()) == nface, "merge: bad child sections");
      child_off[k] = face_offsets(ch[k], nface);
      require(ch[k].T->rows() == child_off[k][nface] && ch[k].T->cols() == child_off[k][nface],
              "merge: child T shape does not match its boundary layout");
    }
    const auto& ifs = interfaces(d);
    meets.resize(ifs.size());
    int_off.resize(ifs.size());
    for (size_t t = 0; t < ifs.size(); ++t) {
      const PanelLayout& la = (*ch[ifs[t].clo].sections)[ifs[t].flo];
      const PanelLayout& lb = (*ch[ifs[t].chi].sections)[ifs[t].fhi];
      if (need_meets) check_restriction(la, lb);
      require(need_meets || la == lb, "merge: interface layout mismatch at section " +
                                          std::to_string(t) + " (children " +
                                          std::to_string(ifs[t].clo) + "," + std::to_string(ifs[t].chi) + ")");
      meets[t] = layout_meet(la, lb);
      int_off[t] = n_int;
      n_int += meets[t].npts();
    }
    parent_sections.resize(nface);
    parent_face_off.assign(nface + 1, 0);
    ext_off.assign(nchild, {-1, -1, -1, -1, -1, -1});
    const int nquad = d == 2 ? 2 : 4;
    for (int f = 0; f < nface; ++f) {
      std::vector<PanelLayout> quads(nquad);
      std::vector<int> owner(nquad, -1);
      for (int k = 0; k < nchild; ++k) {
        const ExtDest e = ext_dest(d, k, f);
        if (e.pface != f) continue;
        quads[e.qpos] = (*ch[k].sections)[f];
        owner[e.qpos] = k;
      }
      int pos = parent_face_off[f];
      for (int qv = 0; qv < nquad; ++qv) {
        ext_off[owner[qv]][f] = pos;
        pos += quads[qv].npts();
      }
      parent_sections[f] = PanelLayout::split_of(std::move(quads));
      parent_face_off[f + 1] = pos;
    }
    n_ext = parent_face_off[nface];
  }
};

}  // namespace

template <class S>
Vec<S> MergeArtifact<S>::apply_Dinv(const Vec<S>& x) const {
  if (!iti) return Dfac.solve(x);
  const int half = n_int / 2;
  Vec<S> y(n_int);
  y.head(half) = Wfac.solve((x.head(half) - D12 * x.tail(half)).eval());
  y.tail(half) = x.tail(half) - D21 * y.head(half);
  return y;
}

template <class S>
Mat<S> MergeArtifact<S>::apply_Dinv(const Mat<S>& x) const {
  if (!iti) return Dfac.solve(x);
  const int half = n_int / 2;
  Mat<S> y(n_int, x.cols());
  y.topRows(half) = Wfac.solve((x.topRows(half) - D12 * x.bottomRows(half)).eval());
  y.bottomRows(half) = x.bottomRows(half) - D21 * y.topRows(half);
  return y;
}

namespace {

// ---------------------------------------------------------------------------
// DtN merge: sum-of-normal-derivative continuity rows on each interface,
// discretized on the coarser side.
// ---------------------------------------------------------------------------

template <class S>
MergeOutput<S> merge_dtn(int dim, const std::vector<ChildView<S>>& children,
                         const FaceProjection* proj, const MergeOptions& opts) {
  require(dim == 2 || proj != nullptr, "merge_dtn: face projection operators required in 3D");
  MergeGeom<S> geom(dim, children, dim == 3);
  const auto& ifs = interfaces(dim);
  const int nface = geom.nface;

  MergeOutput<S> out;
  MergeArtifact<S>& art = out.art;
  art.iti = false;
  art.n_ext = geom.n_ext;
  art.n_int = geom.n_int;
  art.implicit = opts.implicit_S;
  art.child_face_off = geom.child_off;
  for (const auto& c : children) art.child_ids.push_back(c.node_id);

  // interface transfers per (child, face)
  std::vector<std::array<MatR, 6>> row_tr(geom.nchild), col_tr(geom.nchild);
  for (size_t t = 0; t < ifs.size(); ++t) {
    auto setup = [&](int k, int f) {
      const PanelLayout& lay = (*children[k].sections)[f];
      if (lay == geom.meets[t]) return;
      row_tr[k][f] = layout_transfer(lay, geom.meets[t], *proj);
      col_tr[k][f] = layout_transfer(geom.meets[t], lay, *proj);
    };
    setup(ifs[t].clo, ifs[t].flo);
    setup(ifs[t].chi, ifs[t].fhi);
  }

  Mat<S> a, b, c, d;
  d.setZero(geom.n_int, geom.n_int);
  const bool need_c = !art.implicit;
  const bool need_ab = !opts.is_root;
  if (need_ab) {
    a.setZero(geom.n_ext, geom.n_ext);
    b.setZero(geom.n_ext, geom.n_int);
  }
  if (need_c) c.setZero(geom.n_int, geom.n_ext);

  Vec<S> h_ext = Vec<S>::Zero(geom.n_ext);
  art.h_int = Vec<S>::Zero(geom.n_int);

  for (int k = 0; k < geom.nchild; ++k) {
    const Mat<S>& tk = *children[k].T;
    const Vec<S>& hk = *children[k].h;
    for (int rf = 0; rf < nface; ++rf) {
      const int r0 = geom.child_off[k][rf];
      const int rn = geom.child_off[k][rf + 1] - r0;
      const bool rext = geom.ext_off[k][rf] >= 0;
      const int roff = rext ? geom.ext_off[k][rf] : geom.int_off[interface_of(dim, k, rf)];
      const MatR& R = row_tr[k][rf];
      // outgoing data rows
      if (rext) {
        h_ext.segment(roff, rn) += hk.segment(r0, rn);
      } else if (R.size() == 0) {
        art.h_int.segment(roff, rn) += hk.segment(r0, rn);
      } else {
        art.h_int.segment(roff, R.rows()) += R.cast<S>() * hk.segment(r0, rn);
      }
      for (int cf = 0; cf < nface; ++cf) {
        const int c0 = geom.child_off[k][cf];
        const int cn = geom.child_off[k][cf + 1] - c0;
        const bool cext = geom.ext_off[k][cf] >= 0;
        const int coff = cext ? geom.ext_off[k][cf] : geom.int_off[interface_of(dim, k, cf)];
        const MatR& E = col_tr[k][cf];

        if ((rext && !cext) || (!rext && cext)) {
          typename MergeArtifact<S>::Block blk;
          blk.child = k;
          blk.rface = rf;
          blk.cface = cf;
          blk.roff = roff;
          blk.coff = coff;
          blk.rext = rext;
          blk.cext = cext;
          blk.R = R;
          blk.E = E;
          art.blocks.push_back(blk);
        }

        Mat<S> blkm = tk.block(r0, c0, rn, cn);
        if (R.size()) blkm = (R.cast<S>() * blkm).eval();
        if (E.size()) blkm = (blkm * E.cast<S>()).eval();
        if (rext && cext) {
          if (need_ab) a.block(roff, coff, blkm.rows(), blkm.cols()) += blkm;
        } else if (rext && !cext) {
          if (need_ab) b.block(roff, coff, blkm.rows(), blkm.cols()) += blkm;
        } else if (!rext && cext) {
          if (need_c) c.block(roff, coff, blkm.rows(), blkm.cols()) += blkm;
        } else {
          d.block(roff, coff, blkm.rows(), blkm.cols()) += blkm;
        }
      }
    }
  }

  art.Dfac.compute(d);
  for (Eigen::Index i = 0; i < d.rows(); ++i) {
    const double piv = std::abs(art.Dfac.matrixLU()(i, i));
    if (!(piv > 0.0) || !std::isfinite(piv)) {
      std::ostringstream os;
      os << "merge_dtn: singular interface matrix D (pivot " << i << ")";
      fail(os.str());
    }
  }

  art.gtilde = -art.Dfac.solve(art.h_int);
  if (!art.implicit) {
    Mat<S> x = art.Dfac.solve(c);
    if (need_ab) {
      out.T = a - b * x;
      out.h = h_ext + b * art.gtilde;
    }
    art.S_mat = -x;
  } else if (need_ab) {
    fail("merge_dtn: implicit_S requires is_root");
  }

  // downward-pass gather maps
  art.child_maps.resize(geom.nchild);
  for (int k = 0; k < geom.nchild; ++k)
    for (int f = 0; f < nface; ++f) {
      auto& m = art.child_maps[k][f];
      m.dst_len = geom.child_off[k][f + 1] - geom.child_off[k][f];
      if (geom.ext_off[k][f] >= 0) {
        m.ext = true;
        m.offset = geom.ext_off[k][f];
        m.src_len = m.dst_len;
      } else {
        const int t = interface_of(dim, k, f);
        m.ext = false;
        m.offset = geom.int_off[t];
        m.src_len = geom.meets[t].npts();
        m.E = col_tr[k][f];
        m.R = row_tr[k][f];
      }
    }

  out.sections = geom.parent_sections;
  return out;
}

// ---------------------------------------------------------------------------
// ItI merge: one incoming-impedance unknown per interface side; the row for a
// slot states that the neighbor's outgoing data cancels the slot's incoming
// data. Uniform 2D only.
// ---------------------------------------------------------------------------

struct Slot {
  int owner, oface;
  int nb, nbface;
  int off, len;
};

template <class S>
MergeOutput<S> merge_iti(const std::vector<ChildView<S>>& children, const MergeOptions& opts) {
  const int dim = 2;
  MergeGeom<S> geom(dim, children, false);
  const int nface = geom.nface;
  require(!opts.implicit_S, "merge_iti: implicit S is not supported");

  MergeOutput<S> out;
  MergeArtifact<S>& art = out.art;
  art.iti = true;
  art.n_ext = geom.n_ext;
  art.child_face_off = geom.child_off;
  for (const auto& c : children) art.child_ids.push_back(c.node_id);

  // slots grouped as {a, c} then {b, d}, each child's interfaces by id
  std::vector<Slot> slots;
  std::vector<std::array<int, 6>> slot_off(4, {-1, -1, -1, -1, -1, -1});
  int pos = 0;
  const auto& ifs = interfaces(dim);
  for (int k : {0, 2, 1, 3}) {
    for (size_t t = 0; t < ifs.size(); ++t) {
      int of = -1, nb = -1, nbf = -1;
      if (ifs[t].clo == k) {
        of = ifs[t].flo;
        nb = ifs[t].chi;
        nbf = ifs[t].fhi;
      } else if (ifs[t].chi == k) {
        of = ifs[t].fhi;
        nb = ifs[t].clo;
        nbf = ifs[t].flo;
      } else {
        continue;
      }
      const int len = geom.child_off[k][of + 1] - geom.child_off[k][of];
      slots.push_back({k, of, nb, nbf, pos, len});
      slot_off[k][of] = pos;
      pos += len;
    }
  }
  art.n_int = pos;

  Mat<S> a = Mat<S>::Zero(geom.n_ext, geom.n_ext);
  Mat<S> b = Mat<S>::Zero(geom.n_ext, art.n_int);
  Mat<S> c = Mat<S>::Zero(art.n_int, geom.n_ext);
  Mat<S> d = Mat<S>::Zero(art.n_int, art.n_int);
  Vec<S> h_ext = Vec<S>::Zero(geom.n_ext);
  art.h_int = Vec<S>::Zero(art.n_int);

  // exterior rows: each child's outgoing data on its exterior faces
  for (int k = 0; k < 4; ++k) {
    const Mat<S>& tk = *children[k].T;
    const Vec<S>& hk = *children[k].h;
    for (int rf = 0; rf < nface; ++rf) {
      if (geom.ext_off[k][rf] < 0) continue;
      const int r0 = geom.child_off[k][rf];
      const int rn = geom.child_off[k][rf + 1] - r0;
      const int roff = geom.ext_off[k][rf];
      h_ext.segment(roff, rn) += hk.segment(r0, rn);
      for (int cf = 0; cf < nface; ++cf) {
        const int c0 = geom.child_off[k][cf];
        const int cn = geom.child_off[k][cf + 1] - c0;
        if (geom.ext_off[k][cf] >= 0) {
          a.block(roff, geom.ext_off[k][cf], rn, cn) += tk.block(r0, c0, rn, cn);
        } else {
          b.block(roff, slot_off[k][cf], rn, cn) += tk.block(r0, c0, rn, cn);
          typename MergeArtifact<S>::Block blk;
          blk.child = k;
          blk.rface = rf;
          blk.cface = cf;
          blk.roff = roff;
          blk.coff = slot_off[k][cf];
          blk.rext = true;
          blk.cext = false;
          art.blocks.push_back(blk);
        }
      }
    }
  }

  // interface rows: g^(owner) + (neighbor's outgoing data on the shared face) = 0
  art.hint_owner.clear();
  for (const Slot& s : slots) {
    const Mat<S>& tm = *children[s.nb].T;
    const Vec<S>& hm = *children[s.nb].h;
    const int r0 = geom.child_off[s.nb][s.nbface];
    const int rn = geom.child_off[s.nb][s.nbface + 1] - r0;
    art.h_int.segment(s.off, rn) = hm.segment(r0, rn);
    art.hint_owner.push_back({s.nb, s.nbface, s.off});
    d.block(s.off, s.off, s.len, s.len) += Mat<S>::Identity(s.len, s.len);
    for (int cf = 0; cf < nface; ++cf) {
      const int c0 = geom.child_off[s.nb][cf];
      const int cn = geom.child_off[s.nb][cf + 1] - c0;
      if (geom.ext_off[s.nb][cf] >= 0) {
        c.block(s.off, geom.ext_off[s.nb][cf], rn, cn) += tm.block(r0, c0, rn, cn);
        typename MergeArtifact<S>::Block blk;
        blk.child = s.nb;
        blk.rface = s.nbface;
        blk.cface = cf;
        blk.roff = s.off;
        blk.coff = geom.ext_off[s.nb][cf];
        blk.rext = false;
        blk.cext = true;
        art.blocks.push_back(blk);
      } else {
        d.block(s.off, slot_off[s.nb][cf], rn, cn) += tm.block(r0, c0, rn, cn);
      }
    }
  }

  const int half = art.n_int / 2;
  art.D12 = d.block(0, half, half, half);
  art.D21 = d.block(half, 0, half, half);
  Mat<S> w = Mat<S>::Identity(half, half) - art.D12 * art.D21;
  art.Wfac.compute(w);
  for (Eigen::Index i = 0; i < w.rows(); ++i) {
    const double piv = std::abs(art.Wfac.matrixLU()(i, i));
    require(piv > 0.0 && std::isfinite(piv), "merge_iti: singular Schur block W");
  }

  art.gtilde = -art.apply_Dinv(art.h_int);
  Mat<S> x = art.apply_Dinv(c);
  art.S_mat = -x;
  if (!opts.is_root) {
    out.T = a - b * x;
    out.h = h_ext + b * art.gtilde;
  }

  art.child_maps.resize(4);
  for (int k = 0; k < 4; ++k)
    for (int f = 0; f < nface; ++f) {
      auto& m = art.child_maps[k][f];
      m.dst_len = geom.child_off[k][f + 1] - geom.child_off[k][f];
      m.src_len = m.dst_len;
      if (geom.ext_off[k][f] >= 0) {
        m.ext = true;
        m.offset = geom.ext_off[k][f];
      } else {
        m.ext = false;
        m.offset = slot_off[k][f];
      }
    }

  out.sections = geom.parent_sections;
  return out;
}

}  // namespace

template <class S>
MergeOutput<S> merge_node(int dim, Variant variant, const std::vector<ChildView<S>>& children,
                          const FaceProjection* proj, const MergeOptions& opts) {
  if (variant == Variant::iti) {
    require(dim == 2, "merge_node: ItI merges are 2D only");
    return merge_iti(children, opts);
  }
  return merge_dtn(dim, children, proj, opts);
}

template <class S>
Vec<S> artifact_apply_C(const MergeArtifact<S>& art, const std::vector<ChildView<S>>& children,
                        const Vec<S>& g_ext) {
  Vec<S> y = Vec<S>::Zero(art.n_int);
  for (const auto& blk : art.blocks) {
    if (blk.rext || !blk.cext) continue;
    const auto& off = art.child_face_off[blk.child];
    const int r0 = off[blk.rface], rn = off[blk.rface + 1] - r0;
    const int c0 = off[blk.cface], cn = off[blk.cface + 1] - c0;
    Vec<S> t = children[blk.child].T->block(r0, c0, rn, cn) * g_ext.segment(blk.coff, cn);
    if (blk.R.size())
      y.segment(blk.roff, blk.R.rows()) += blk.R.template cast<S>() * t;
    else
      y.segment(blk.roff, rn) += t;
  }
  return y;
}

template <class S>
void artifact_source_pass(const MergeArtifact<S>& art, const std::vector<ChildView<S>>& children,
                          Vec<S>& gtilde_out, Vec<S>* h_out) {
  const int nface = static_cast<int>(children[0].sections->size());
  Vec<S> h_int = Vec<S>::Zero(art.n_int);
  if (!art.iti) {
    for (int k = 0; k < static_cast<int>(children.size()); ++k) {
      const Vec<S>& hk = *children[k].h;
      for (int f = 0; f < nface; ++f) {
        const auto& m = art.child_maps[k][f];
        if (m.ext) continue;
        const auto& off = art.child_face_off[k];
        const int r0 = off[f], rn = off[f + 1] - r0;
        if (m.R.size())
          h_int.segment(m.offset, m.src_len) += m.R.template cast<S>() * hk.segment(r0, rn);
        else
          h_int.segment(m.offset, rn) += hk.segment(r0, rn);
      }
    }
  } else {
    for (const auto& ho : art.hint_owner) {
      const auto& off = art.child_face_off[ho.child];
      const int r0 = off[ho.face], rn = off[ho.face + 1] - r0;
      h_int.segment(ho.offset, rn) = children[ho.child].h->segment(r0, rn);
    }
  }
  gtilde_out = -art.apply_Dinv(h_int);
  if (h_out) {
    Vec<S>& h = *h_out;
    h.setZero(art.n_ext);
    for (int k = 0; k < static_cast<int>(children.size()); ++k) {
      const Vec<S>& hk = *children[k].h;
      for (int f = 0; f < nface; ++f) {
        const auto& m = art.child_maps[k][f];
        if (!m.ext) continue;
        const auto& off = art.child_face_off[k];
        h.segment(m.offset, m.dst_len) += hk.segment(off[f], m.dst_len);
      }
    }
    // h = h_ext + B*gtilde, with B applied from the stored child T blocks
    for (const auto& blk : art.blocks) {
      if (!blk.rext || blk.cext) continue;
      const auto& off = art.child_face_off[blk.child];
      const int r0 = off[blk.rface], rn = off[blk.rface + 1] - r0;
      const int c0 = off[blk.cface], cn = off[blk.cface + 1] - c0;
      Vec<S> seg;
      if (blk.E.size())
        seg = blk.E.template cast<S>() * gtilde_out.segment(blk.coff, blk.E.cols());
      else
        seg = gtilde_out.segment(blk.coff, cn);
      h.segment(blk.roff, rn) += children[blk.child].T->block(r0, c0, rn, cn) * seg;
    }
  }
}

// ---------------------------------------------------------------------------
// Stacked-order assemblers and the plain Schur path (test-facing).
// ---------------------------------------------------------------------------

namespace {

template <class S>
struct StackedExt {
  std::vector<std::array<int, 6>> off;
  int n_ext = 0;
};

template <class S>
StackedExt<S> stacked_ext(int dim, const std::vector<ChildView<S>>& children) {
  StackedExt<S> se;
  const int nchild = dim == 2 ? 4 : 8;
  const int nface = 2 * dim;
  se.off.assign(nchild, {-1, -1, -1, -1, -1, -1});
  for (int k = 0; k < nchild; ++k)
    for (int f = 0; f < nface; ++f)
      if (ext_dest(dim, k, f).pface >= 0) {
        se.off[k][f] = se.n_ext;
        se.n_ext += (*children[k].sections)[f].npts();
      }
  return se;
}

template <class S>
MergeBlocks<S> assemble_dtn_stacked(int dim, const std::vector<ChildView<S>>& children) {
  const int nchild = dim == 2 ? 4 : 8;
  const int nface = 2 * dim;
  require(static_cast<int>(children.size()) == nchild, "assemble: wrong child count");
  const auto& ifs = interfaces(dim);
  std::vector<std::array<int, 7>> coff(nchild);
  for (int k = 0; k < nchild; ++k) coff[k] = face_offsets(children[k], nface);
  const StackedExt<S> se = stacked_ext(dim, children);

  MergeBlocks<S> mb;
  mb.int_offsets.resize(ifs.size());
  int n_int = 0;
  for (size_t t = 0; t < ifs.size(); ++t) {
    const PanelLayout& la = (*children[ifs[t].clo].sections)[ifs[t].flo];
    const PanelLayout& lb = (*children[ifs[t].chi].sections)[ifs[t].fhi];
    require(la == lb, "assemble: interface layout mismatch at section " + std::to_string(t));
    mb.int_offsets[t] = n_int;
    n_int += la.npts();
  }
  mb.n_side = n_int / static_cast<int>(ifs.size());

  mb.A = Mat<S>::Zero(se.n_ext, se.n_ext);
  mb.B = Mat<S>::Zero(se.n_ext, n_int);
  mb.C = Mat<S>::Zero(n_int, se.n_ext);
  mb.D = Mat<S>::Zero(n_int, n_int);
  mb.h_ext = Vec<S>::Zero(se.n_ext);
  mb.h_int = Vec<S>::Zero(n_int);

  for (int k = 0; k < nchild; ++k) {
    const Mat<S>& tk = *children[k].T;
    const Vec<S>& hk = *children[k].h;
    for (int rf = 0; rf < nface; ++rf) {
      const int r0 = coff[k][rf], rn = coff[k][rf + 1] - r0;
      const bool rext = se.off[k][rf] >= 0;
      const int roff = rext ? se.off[k][rf] : mb.int_offsets[interface_of(dim, k, rf)];
      (rext ? mb.h_ext : mb.h_int).segment(roff, rn) += hk.segment(r0, rn);
      for (int cf = 0; cf < nface; ++cf) {
        const int c0 = coff[k][cf], cn = coff[k][cf + 1] - c0;
        const bool cext = se.off[k][cf] >= 0;
        const int cpos = cext ? se.off[k][cf] : mb.int_offsets[interface_of(dim, k, cf)];
        Mat<S>& dst = rext ? (cext ? mb.A : mb.B) : (cext ? mb.C : mb.D);
        dst.block(roff, cpos, rn, cn) += tk.block(r0, c0, rn, cn);
      }
    }
  }
  return mb;
}

}  // namespace

MergeBlocks<Real> assemble_quad_dtn(const std::vector<ChildView<Real>>& children) {
  return assemble_dtn_stacked(2, children);
}

MergeBlocks<Real> assemble_oct_dtn(const std::vector<ChildView<Real>>& children) {
  return assemble_dtn_stacked(3, children);
}

MergeBlocks<Complex> assemble_quad_iti(const std::vector<ChildView<Complex>>& children) {
  const int dim = 2, nchild = 4, nface = 4;
  require(static_cast<int>(children.size()) == nchild, "assemble_quad_iti: need 4 children");
  const auto& ifs = interfaces(dim);
  std::vector<std::array<int, 7>> coff(nchild);
  for (int k = 0; k < nchild; ++k) coff[k] = face_offsets(children[k], nface);
  const StackedExt<Complex> se = stacked_ext(dim, children);

  std::vector<Slot> slots;
  std::vector<std::array<int, 6>> slot_off(4, {-1, -1, -1, -1, -1, -1});
  int pos = 0;
  for (int k : {0, 2, 1, 3})
    for (size_t t = 0; t < ifs.size(); ++t) {
      int of = -1, nb = -1, nbf = -1;
      if (ifs[t].clo == k) {
        of = ifs[t].flo;
        nb = ifs[t].chi;
        nbf = ifs[t].fhi;
      } else if (ifs[t].chi == k) {
        of = ifs[t].fhi;
        nb = ifs[t].clo;
        nbf = ifs[t].flo;
      } else {
        continue;
      }
      const int len = coff[k][of + 1] - coff[k][of];
      require((*children[k].sections)[of] == (*children[nb].sections)[nbf],
              "assemble_quad_iti: interface layout mismatch");
      slots.push_back({k, of, nb, nbf, pos, len});
      slot_off[k][of] = pos;
      pos += len;
    }

  MergeBlocks<Complex> mb;
  mb.n_side = pos / 8;
  mb.A = MatC::Zero(se.n_ext, se.n_ext);
  mb.B = MatC::Zero(se.n_ext, pos);
  mb.C = MatC::Zero(pos, se.n_ext);
  mb.D = MatC::Identity(pos, pos);
  mb.h_ext = VecC::Zero(se.n_ext);
  mb.h_int = VecC::Zero(pos);
  for (const Slot& s : slots) mb.int_offsets.push_back(s.off);

  for (int k = 0; k < nchild; ++k) {
    const MatC& tk = *children[k].T;
    const VecC& hk = *children[k].h;
    for (int rf = 0; rf < nface; ++rf) {
      if (se.off[k][rf] < 0) continue;
      const int r0 = coff[k][rf], rn = coff[k][rf + 1] - r0;
      mb.h_ext.segment(se.off[k][rf], rn) += hk.segment(r0, rn);
      for (int cf = 0; cf < nface; ++cf) {
        const int c0 = coff[k][cf], cn = coff[k][cf + 1] - c0;
        if (se.off[k][cf] >= 0)
          mb.A.block(se.off[k][rf], se.off[k][cf], rn, cn) += tk.block(r0, c0, rn, cn);
        else
          mb.B.block(se.off[k][rf], slot_off[k][cf], rn, cn) += tk.block(r0, c0, rn, cn);
      }
    }
  }
  for (const Slot& s : slots) {
    const MatC& tm = *children[s.nb].T;
    const VecC& hm = *children[s.nb].h;
    const int r0 = coff[s.nb][s.nbface], rn = coff[s.nb][s.nbface + 1] - r0;
    mb.h_int.segment(s.off, rn) = hm.segment(r0, rn);
    for (int cf = 0; cf < nface; ++cf) {
      const int c0 = coff[s.nb][cf], cn = coff[s.nb][cf + 1] - c0;
      if (se.off[s.nb][cf] >= 0)
        mb.C.block(s.off, se.off[s.nb][cf], rn, cn) += tm.block(r0, c0, rn, cn);
      else
        mb.D.block(s.off, slot_off[s.nb][cf], rn, cn) += tm.block(r0, c0, rn, cn);
    }
  }
  return mb;
}

template <class S>
SchurOutput<S> schur_merge(const MergeBlocks<S>& blocks) {
  Eigen::PartialPivLU<Mat<S>> lu(blocks.D);
  for (Eigen::Index i = 0; i < blocks.D.rows(); ++i) {
    const double piv = std::abs(lu.matrixLU()(i, i));
    require(piv > 0.0 && std::isfinite(piv),
            "schur_merge: singular D (pivot " + std::to_string(i) + ")");
  }
  SchurOutput<S> out;
  const Mat<S> x = lu.solve(blocks.C);
  const Vec<S> y = lu.solve(blocks.h_int);
  out.T = blocks.A - blocks.B * x;
  out.h = blocks.h_ext - blocks.B * y;
  out.S_mat = -x;
  out.gtilde = -y;
  return out;
}

template SchurOutput<Real> schur_merge<Real>(const MergeBlocks<Real>&);
template SchurOutput<Complex> schur_merge<Complex>(const MergeBlocks<Complex>&);

PanelLayout node_section_layout(const DiscretizationTree& tree, int node_id, int face) {
  const TreeNode& n = tree.nodes[node_id];
  if (n.is_leaf()) return PanelLayout::panel(tree.q, tree.dim - 1);
  const int nquad = tree.dim == 2 ? 2 : 4;
  const int nchild = tree.dim == 2 ? 4 : 8;
  std::vector<PanelLayout> quads(nquad);
  for (int c = 0; c < nchild; ++c) {
    const ExtDest e = ext_dest(tree.dim, c, face);
    if (e.pface == face) quads[e.qpos] = node_section_layout(tree, n.child[c], face);
  }
  return PanelLayout::split_of(std::move(quads));
}

int merge_interior_size(const DiscretizationTree& tree, int node_id, bool iti_doubled) {
  const TreeNode& n = tree.nodes[node_id];
  if (n.is_leaf()) return 0;
  int total = 0;
  for (const Interface& f : interfaces(tree.dim)) {
    const PanelLayout la = node_section_layout(tree, n.child[f.clo], f.flo);
    const PanelLayout lb = node_section_layout(tree, n.child[f.chi], f.fhi);
    total += layout_meet(la, lb).npts();
  }
  return iti_doubled ? 2 * total : total;
}

int node_boundary_size(const DiscretizationTree& tree, int node_id) {
  int total = 0;
  for (int f = 0; f < 2 * tree.dim; ++f)
    total += node_section_layout(tree, node_id, f).npts();
  return total;
}

MatC iti_D_inverse(const MatC& d) {
  const int n = static_cast<int>(d.rows());
  require(n % 2 == 0, "iti_D_inverse: odd dimension");
  const int half = n / 2;
  const MatC d12 = d.block(0, half, half, half);
  const MatC d21 = d.block(half, 0, half, half);
  const MatC w = MatC::Identity(half, half) - d12 * d21;
  Eigen::PartialPivLU<MatC> wfac(w);
  MatC out(n, n);
  const MatC winv = wfac.solve(MatC::Identity(half, half));
  out.block(0, 0, half, half) = winv;
  out.block(0, half, half, half) = -winv * d12;
  out.block(half, 0, half, half) = -d21 * winv;
  out.block(half, half, half, half) = MatC::Identity(half, half) + d21 * winv * d12;
  return out;
}

template struct MergeArtifact<Real>;
template struct MergeArtifact<Complex>;
template MergeOutput<Real> merge_node<Real>(int, Variant, const std::vector<ChildView<Real>>&,
                                            const FaceProjection*, const MergeOptions&);
template MergeOutput<Complex> merge_node<Complex>(int, Variant, const std::vector<ChildView<Complex>>&,
                                                  const FaceProjection*, const MergeOptions&);
template Vec<Real> artifact_apply_C<Real>(const MergeArtifact<Real>&, const std::vector<ChildView<Real>>&,
                                          const Vec<Real>&);
template Vec<Complex> artifact_apply_C<Complex>(const MergeArtifact<Complex>&,
                                                const std::vector<ChildView<Complex>>&, const Vec<Complex>&);
template void artifact_source_pass<Real>(const MergeArtifact<Real>&, const std::vector<ChildView<Real>>&,
                                         Vec<Real>&, Vec<Real>*);
template void artifact_source_pass<Complex>(const MergeArtifact<Complex>&,
                                            const std::vector<ChildView<Complex>>&, Vec<Complex>&,
                                            Vec<Complex>*);

}  // namespace hps
