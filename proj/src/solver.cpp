// Copyright (c) 2026 the hpsolve authors. All rights reserved.
// SPDX-License-Identifier: Apache-2.0

#include "hps/solver.hpp"

#include <iostream>

namespace hps {

template <class S>
HpsSolver<S>::HpsSolver(const DiscretizationTree& tree, Variant variant, double eta,
                        std::vector<CoefficientField> terms,
                        std::function<Complex(const Point&)> source, SolverOptions opts)
    : tree_(&tree),
      variant_(variant),
      eta_(eta),
      terms_(std::move(terms)),
      source_(std::move(source)),
      opts_(opts) {
  if constexpr (scalar_traits<S>::is_complex)
    require(variant_ == Variant::iti, "HpsSolver<Complex> drives the ItI variant");
  else
    require(variant_ == Variant::dtn, "HpsSolver<Real> drives the DtN variant");
  const int n = static_cast<int>(tree.nodes.size());
  leaf_ord_.assign(n, -1);
  for (int i = 0; i < tree.n_leaves(); ++i) leaf_ord_[tree.leaves[i]] = i;
  leaf_sol_.resize(tree.n_leaves());
  node_T_.resize(n);
  node_h_.resize(n);
  sections_.resize(n);
  art_.resize(n);
  const int nface = 2 * tree.dim;
  for (int id : tree.leaves)
    sections_[id] = std::vector<PanelLayout>(nface, PanelLayout::panel(tree.q, tree.dim - 1));
  if (tree.dim == 3) proj_ = face_projection_ops(tree.q);
}

template <class S>
const LeafOperatorSet& HpsSolver<S>::leaf_ops(int ordinal) const {
  const TreeNode& leaf = tree_->nodes[tree_->leaves[ordinal]];
  return leaf_ops_cache(variant_, tree_->dim, tree_->p, tree_->q, eta_, tree_->leaf_side(leaf));
}

template <class S>
void HpsSolver<S>::build_leaf(int ordinal) {
  const TreeNode& leaf = tree_->nodes[tree_->leaves[ordinal]];
  const LeafOperatorSet& ops = leaf_ops(ordinal);
  const MatR lmat = discretize_operator(leaf.box, leaf.id, terms_, tree_->p, tree_->dim);
  const auto pts = leaf_cheb_points(*tree_, leaf);
  if constexpr (scalar_traits<S>::is_complex) {
    VecC f(pts.size());
    for (size_t i = 0; i < pts.size(); ++i) f[i] = source_ ? source_(pts[i]) : Complex(0.0);
    leaf_sol_[ordinal] = local_solve_iti(lmat, f, ops);
  } else {
    VecR f(pts.size());
    for (size_t i = 0; i < pts.size(); ++i) f[i] = source_ ? source_(pts[i]).real() : 0.0;
    leaf_sol_[ordinal] = local_solve_dtn(lmat, f, ops);
  }
  if (leaf_sol_[ordinal].ill_conditioned) {
    ill_conditioned_ = true;
    if (!opts_.quiet_warnings)
      std::cerr << "hpsolve: warning: leaf " << leaf.id << " factorization rcond "
                << leaf_sol_[ordinal].rcond << "\n";
  }
}

template <class S>
void HpsSolver<S>::clear_leaf(int ordinal) {
  leaf_sol_[ordinal] = LeafSolution<S>();
}

template <class S>
bool HpsSolver<S>::node_merged(int node_id) const {
  return art_[node_id].n_int > 0;
}

template <class S>
std::vector<ChildView<S>> HpsSolver<S>::child_views(int node_id, const SourceState<S>* st) const {
  const TreeNode& n = tree_->nodes[node_id];
  const int nchild = tree_->dim == 2 ? 4 : 8;
  std::vector<ChildView<S>> views(nchild);
  for (int c = 0; c < nchild; ++c) {
    const int cid = n.child[c];
    ChildView<S>& v = views[c];
    v.node_id = cid;
    v.sections = &sections_[cid];
    const int ord = leaf_ord_[cid];
    if (ord >= 0) {
      v.T = &leaf_sol_[ord].T;
      v.h = st ? &st->leaf_h[ord] : &leaf_sol_[ord].h;
    } else {
      v.T = &node_T_[cid];
      v.h = st ? &st->node_h[cid] : &node_h_[cid];
    }
  }
  return views;
}

template <class S>
void HpsSolver<S>::merge_internal(int node_id) {
  const TreeNode& n = tree_->nodes[node_id];
  require(!n.is_leaf(), "merge_internal: leaf node");
  const bool is_root = node_id == 0;
  MergeOptions mo;
  mo.is_root = is_root && !opts_.build_root_T;
  mo.implicit_S = is_root && opts_.root_implicit_S;
  auto views = child_views(node_id, nullptr);
  MergeOutput<S> out =
      merge_node(tree_->dim, variant_, views, tree_->dim == 3 ? &proj_ : nullptr, mo);
  out.art.node_id = node_id;
  sections_[node_id] = std::move(out.sections);
  art_[node_id] = std::move(out.art);
  if (is_root) {
    if (opts_.build_root_T) {
      root_T_ = std::move(out.T);
      root_h_ = std::move(out.h);
    }
  } else {
    node_T_[node_id] = std::move(out.T);
    node_h_[node_id] = std::move(out.h);
  }
  if (opts_.free_T_after_merge && !is_root) {
    const int nchild = tree_->dim == 2 ? 4 : 8;
    for (int c = 0; c < nchild; ++c) {
      const int cid = n.child[c];
      const int ord = leaf_ord_[cid];
      if (ord >= 0) {
        leaf_sol_[ord].T.resize(0, 0);
      } else {
        node_T_[cid].resize(0, 0);
        node_h_[cid].resize(0);
      }
    }
  }
}

template <class S>
void HpsSolver<S>::clear_internal(int node_id) {
  art_[node_id] = MergeArtifact<S>();
  node_T_[node_id].resize(0, 0);
  node_h_[node_id].resize(0);
}

template <class S>
void HpsSolver<S>::build() {
  for (int i = 0; i < tree_->n_leaves(); ++i) build_leaf(i);
  for (int depth = tree_->max_depth() - 1; depth >= 0; --depth)
    for (int id : tree_->levels[depth])
      if (!tree_->nodes[id].is_leaf()) merge_internal(id);
  if (opts_.build_root_T && !tree_->nodes[0].is_leaf()) root_closure_factor();
}

template <class S>
void HpsSolver<S>::root_closure_factor() {
  root_T_fac_.compute(root_T_);
  root_fac_ready_ = true;
}

template <class S>
std::vector<Point> HpsSolver<S>::node_boundary_points(int node_id) const {
  const TreeNode& n = tree_->nodes[node_id];
  std::vector<Point> pts;
  for (int f = 0; f < 2 * tree_->dim; ++f) {
    const auto fp = section_points(n.box, tree_->dim, f, sections_[node_id][f]);
    pts.insert(pts.end(), fp.begin(), fp.end());
  }
  return pts;
}

template <class S>
std::vector<Point> HpsSolver<S>::root_boundary_points() const {
  return node_boundary_points(0);
}

template <class S>
Vec<S> HpsSolver<S>::sample_root_data(const std::function<Complex(const Point&)>& g) const {
  const auto pts = root_boundary_points();
  Vec<S> out(pts.size());
  for (size_t i = 0; i < pts.size(); ++i) {
    if constexpr (scalar_traits<S>::is_complex)
      out[i] = g(pts[i]);
    else
      out[i] = g(pts[i]).real();
  }
  return out;
}

template <class S>
void HpsSolver<S>::propagate(const Vec<S>& g_root, const SourceState<S>* st,
                             std::vector<Vec<S>>& g) const {
  g.assign(tree_->nodes.size(), Vec<S>());
  g[0] = g_root;
  const int nchild = tree_->dim == 2 ? 4 : 8;
  const int nface = 2 * tree_->dim;
  for (const auto& level : tree_->levels) {
    for (int id : level) {
      const TreeNode& n = tree_->nodes[id];
      if (n.is_leaf()) continue;
      const MergeArtifact<S>& art = art_[id];
      require(art.n_int > 0 || nchild == 0, "propagate: missing merge artifact for node " + std::to_string(id));
      const Vec<S>& gj = g[id];
      const Vec<S>& gt = st ? st->node_gtilde[id] : art.gtilde;
      Vec<S> g_int;
      if (art.implicit) {
        auto views = child_views(id, nullptr);
        g_int = gt - art.apply_Dinv(artifact_apply_C(art, views, gj));
      } else {
        g_int = art.S_mat * gj + gt;
      }
      for (int c = 0; c < nchild; ++c) {
        const int cid = n.child[c];
        const auto& offs = art.child_face_off[c];
        Vec<S>& gc = g[cid];
        gc.resize(offs[nface]);
        for (int f = 0; f < nface; ++f) {
          const auto& m = art.child_maps[c][f];
          const Vec<S> src =
              m.ext ? gj.segment(m.offset, m.src_len).eval() : g_int.segment(m.offset, m.src_len).eval();
          if (m.E.size())
            gc.segment(offs[f], m.dst_len) = m.E.template cast<S>() * src;
          else
            gc.segment(offs[f], m.dst_len) = src;
        }
      }
      if (id != 0) g[id].resize(0);  // parent data no longer needed
    }
  }
}

template <class S>
Vec<S> HpsSolver<S>::reconstruct_leaf(int ordinal, const Vec<S>& g_leaf,
                                      const SourceState<S>* st) const {
  const LeafSolution<S>& sol = leaf_sol_[ordinal];
  const Vec<S>& v = st ? st->leaf_v[ordinal] : sol.v;
  return sol.Y * g_leaf + v;
}

template <class S>
SolutionField<S> HpsSolver<S>::solve(const Vec<S>& g_root, std::vector<Vec<S>>* leaf_g_out) const {
  SolutionField<S> field;
  field.tree = tree_;
  field.u.resize(tree_->n_leaves());
  std::vector<Vec<S>> g;
  propagate(g_root, nullptr, g);
  if (leaf_g_out) leaf_g_out->resize(tree_->n_leaves());
  for (int i = 0; i < tree_->n_leaves(); ++i) {
    const Vec<S>& gl = g[tree_->leaves[i]];
    field.u[i] = reconstruct_leaf(i, gl, nullptr);
    if (leaf_g_out) (*leaf_g_out)[i] = gl;
  }
  return field;
}

template <class S>
SolutionField<S> HpsSolver<S>::solve_radiation(std::vector<Vec<S>>* leaf_g_out) const {
  require(root_fac_ready_, "solve_radiation: root T was not built");
  const Vec<S> g_root = -root_T_fac_.solve(root_h_);
  return solve(g_root, leaf_g_out);
}

template <class S>
SourceState<S> HpsSolver<S>::make_source_state(const std::vector<Vec<S>>& leaf_f) const {
  SourceState<S> st;
  const int nl = tree_->n_leaves();
  require(static_cast<int>(leaf_f.size()) == nl, "make_source_state: wrong leaf count");
  st.leaf_v.resize(nl);
  st.leaf_h.resize(nl);
  for (int i = 0; i < nl; ++i) {
    auto [v, h] = leaf_resolve_source(leaf_sol_[i], leaf_f[i], leaf_ops(i));
    st.leaf_v[i] = std::move(v);
    st.leaf_h[i] = std::move(h);
  }
  st.node_gtilde.resize(tree_->nodes.size());
  st.node_h.resize(tree_->nodes.size());
  for (int depth = tree_->max_depth() - 1; depth >= 0; --depth)
    for (int id : tree_->levels[depth]) {
      if (tree_->nodes[id].is_leaf()) continue;
      auto views = child_views(id, &st);
      const bool is_root = id == 0;
      const bool need_h = !is_root || opts_.build_root_T;
      artifact_source_pass(art_[id], views, st.node_gtilde[id],
                           need_h ? (is_root ? &st.root_h : &st.node_h[id]) : nullptr);
    }
  return st;
}

template <class S>
SolutionField<S> HpsSolver<S>::solve_new_source(const std::vector<Vec<S>>& leaf_f, RootBC root_bc,
                                                const Vec<S>* g_root) const {
  const SourceState<S> st = make_source_state(leaf_f);
  Vec<S> g0;
  if (root_bc == RootBC::radiation) {
    require(root_fac_ready_, "solve_new_source: root T was not built");
    g0 = -root_T_fac_.solve(st.root_h);
  } else {
    require(g_root != nullptr, "solve_new_source: boundary data required");
    g0 = *g_root;
  }
  SolutionField<S> field;
  field.tree = tree_;
  field.u.resize(tree_->n_leaves());
  std::vector<Vec<S>> g;
  propagate(g0, &st, g);
  for (int i = 0; i < tree_->n_leaves(); ++i)
    field.u[i] = reconstruct_leaf(i, g[tree_->leaves[i]], &st);
  return field;
}

template <class S>
const Mat<S>& HpsSolver<S>::node_T(int node_id) const {
  const int ord = leaf_ord_[node_id];
  return ord >= 0 ? leaf_sol_[ord].T : node_T_[node_id];
}

template <class S>
const Vec<S>& HpsSolver<S>::node_h(int node_id) const {
  const int ord = leaf_ord_[node_id];
  return ord >= 0 ? leaf_sol_[ord].h : node_h_[node_id];
}

template <class S>
int HpsSolver<S>::top_D_size() const {
  return tree_->nodes[0].is_leaf() ? 0 : art_[0].n_int;
}

template class HpsSolver<Real>;
template class HpsSolver<Complex>;

}  // namespace hps
