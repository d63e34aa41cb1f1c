// Copyright (c) 2026 the hpsolve authors. All rights reserved.
// SPDX-License-Identifier: Apache-2.0

#include "hps/mesh.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include <nlohmann/json.hpp>

#include "hps/spectral.hpp"

namespace hps {

int child_slot_from_offset(int o1, int o2, int o3) {
  static const int slot2[2][2] = {{0, 3}, {1, 2}};  // slot2[o1][o2]
  return slot2[o1][o2] + 4 * o3;
}

long long DiscretizationTree::total_points() const {
  long long per = 1;
  for (int k = 0; k < dim; ++k) per *= p;
  return per * n_leaves();
}

void DiscretizationTree::split(int node_id) {
  TreeNode& n = nodes[node_id];
  require(n.is_leaf(), "split: node already has children");
  const int nchild = dim == 2 ? 4 : 8;
  const Point mid = 0.5 * (n.box.lo + n.box.hi);
  n.n_children = nchild;
  for (int c = 0; c < nchild; ++c) {
    TreeNode ch;
    ch.id = static_cast<int>(nodes.size());
    ch.parent = node_id;
    ch.depth = n.depth + 1;
    const int* off = child_offset[c];
    for (int k = 0; k < 3; ++k) {
      ch.box.lo[k] = off[k] ? mid[k] : n.box.lo[k];
      ch.box.hi[k] = off[k] ? n.box.hi[k] : mid[k];
      ch.anchor[k] = 2 * n.anchor[k] + off[k];
    }
    if (dim == 2) {
      ch.box.lo[2] = 0.0;
      ch.box.hi[2] = 0.0;
      ch.anchor[2] = 0;
    }
    nodes[node_id].child[c] = ch.id;
    nodes.push_back(ch);
  }
}

void DiscretizationTree::finalize() {
  leaves.clear();
  levels.clear();
  const int nchild = dim == 2 ? 4 : 8;
  std::vector<int> stack{0};
  while (!stack.empty()) {
    const int id = stack.back();
    stack.pop_back();
    const TreeNode& n = nodes[id];
    if (static_cast<int>(levels.size()) <= n.depth) levels.resize(n.depth + 1);
    levels[n.depth].push_back(id);
    if (n.is_leaf()) {
      leaves.push_back(id);
    } else {
      for (int c = nchild - 1; c >= 0; --c) stack.push_back(n.child[c]);
    }
  }
}

int DiscretizationTree::find_node(int depth, const std::array<std::int64_t, 3>& anchor) const {
  const std::int64_t lim = std::int64_t(1) << depth;
  for (int k = 0; k < dim; ++k)
    if (anchor[k] < 0 || anchor[k] >= lim) return -1;
  int id = 0;
  for (int level = 1; level <= depth; ++level) {
    const TreeNode& n = nodes[id];
    if (n.is_leaf()) return id;
    const int shift = depth - level;
    const int o1 = static_cast<int>((anchor[0] >> shift) & 1);
    const int o2 = static_cast<int>((anchor[1] >> shift) & 1);
    const int o3 = dim == 3 ? static_cast<int>((anchor[2] >> shift) & 1) : 0;
    id = n.child[child_slot_from_offset(o1, o2, o3)];
  }
  return id;
}

DiscretizationTree build_uniform_tree(const Box& domain, int L, int dim, int p) {
  require(dim == 2 || dim == 3, "build_uniform_tree: dim must be 2 or 3");
  require(L >= 0, "build_uniform_tree: depth must be nonnegative");
  require(p >= 4, "build_uniform_tree: p must be >= 4");
  const double side = domain.hi[0] - domain.lo[0];
  require(side > 0, "build_uniform_tree: empty domain");
  for (int k = 1; k < dim; ++k)
    require(std::abs((domain.hi[k] - domain.lo[k]) - side) <= 1e-12 * std::abs(side),
            "build_uniform_tree: domain must be a square/cube");

  DiscretizationTree t;
  t.dim = dim;
  t.p = p;
  t.q = p - 2;
  t.domain = domain;
  TreeNode root;
  root.id = 0;
  root.box = domain;
  if (dim == 2) {
    root.box.lo[2] = 0.0;
    root.box.hi[2] = 0.0;
  }
  t.nodes.push_back(root);
  for (int level = 0; level < L; ++level) {
    std::vector<int> ids;
    for (const TreeNode& n : t.nodes)
      if (n.depth == level) ids.push_back(n.id);
    for (int id : ids) t.split(id);
  }
  t.finalize();
  return t;
}

namespace {

// max depth over leaves of `node` that touch the face given by (axis, sign)
int max_leaf_depth_on_face(const DiscretizationTree& t, int node_id, int axis, int sign) {
  const TreeNode& n = t.nodes[node_id];
  if (n.is_leaf()) return n.depth;
  const int nchild = t.dim == 2 ? 4 : 8;
  int best = 0;
  for (int c = 0; c < nchild; ++c) {
    const int* off = child_offset[c];
    if (off[axis] != (sign > 0 ? 1 : 0)) continue;
    best = std::max(best, max_leaf_depth_on_face(t, n.child[c], axis, sign));
  }
  return best;
}

}  // namespace

void enforce_level_restriction(DiscretizationTree& tree) {
  bool changed = true;
  while (changed) {
    changed = false;
    tree.finalize();
    const std::vector<int> snapshot = tree.leaves;
    for (int id : snapshot) {
      if (!tree.nodes[id].is_leaf()) continue;
      const TreeNode& leaf = tree.nodes[id];
      for (int axis = 0; axis < tree.dim && tree.nodes[id].is_leaf(); ++axis) {
        for (int sign = -1; sign <= 1; sign += 2) {
          std::array<std::int64_t, 3> na = leaf.anchor;
          na[axis] += sign;
          const int nb = tree.find_node(leaf.depth, na);
          if (nb < 0 || tree.nodes[nb].depth < leaf.depth) continue;
          const int md = max_leaf_depth_on_face(tree, nb, axis, -sign);
          if (md > leaf.depth + 1) {
            tree.split(id);
            changed = true;
            break;
          }
        }
      }
    }
  }
  tree.finalize();
}

namespace {

struct FieldRefiner {
  const DiscretizationTree* tree;
  const std::function<Real(const Point&)>* field;
  const MatR* l8f1;
  int p;
  double tol;
  double sup;
  int max_depth;
  std::set<std::pair<int, std::array<std::int64_t, 3>>> accepted;  // (depth, anchor)
  std::set<std::pair<int, std::array<std::int64_t, 3>>> want_split;

  VecR sample(const Box& box) const {
    const auto pts = leaf_cheb_points(box, p, 3);
    VecR v(pts.size());
    for (size_t i = 0; i < pts.size(); ++i) {
      v[i] = (*field)(pts[i]);
      require(std::isfinite(v[i]), "refine_adaptive: non-finite field sample");
    }
    return v;
  }

  static Box child_box(const Box& b, int c) {
    Box cb;
    const Point mid = 0.5 * (b.lo + b.hi);
    const int* off = child_offset[c];
    for (int k = 0; k < 3; ++k) {
      cb.lo[k] = off[k] ? mid[k] : b.lo[k];
      cb.hi[k] = off[k] ? b.hi[k] : mid[k];
    }
    return cb;
  }

  // returns interpolation error of the box given parent samples x0
  double check(const Box& box, const VecR& x0, VecR& x1) {
    const int pc = p * p * p;
    x1.resize(8 * pc);
    for (int c = 0; c < 8; ++c) x1.segment(c * pc, pc) = sample(child_box(box, c));
    sup = std::max(sup, x0.cwiseAbs().maxCoeff());
    sup = std::max(sup, x1.cwiseAbs().maxCoeff());
    return (x1 - (*l8f1) * x0).cwiseAbs().maxCoeff();
  }

  void refine(const Box& box, int depth, const std::array<std::int64_t, 3>& anchor, const VecR& x0) {
    VecR x1;
    const double err = check(box, x0, x1);
    if (err / sup < tol) {
      accepted.insert({depth, anchor});
      return;
    }
    if (depth >= max_depth) return;  // left unresolved; reported later
    want_split.insert({depth, anchor});
    const int pc = p * p * p;
    for (int c = 0; c < 8; ++c) {
      std::array<std::int64_t, 3> ca;
      for (int k = 0; k < 3; ++k) ca[k] = 2 * anchor[k] + child_offset[c][k];
      refine(child_box(box, c), depth + 1, ca, x1.segment(c * pc, pc));
    }
  }
};

}  // namespace

DiscretizationTree refine_adaptive(const Box& domain, RefinementCriterion& criterion,
                                   int max_depth, std::vector<int>* unresolved) {
  require(!criterion.test_fields.empty(), "refine_adaptive: no test fields");
  require(criterion.tol > 0, "refine_adaptive: tol must be positive");
  const int p = criterion.p;
  const MatR l8f1 = refinement_interpolant(p);
  criterion.global_sup.resize(criterion.test_fields.size(), 0.0);

  DiscretizationTree tree = build_uniform_tree(domain, 0, 3, p);

  // Phase 1: independent per-field refinement; decisions for one field never
  // depend on another field's samples, so the union property holds by
  // construction.
  std::vector<FieldRefiner> refiners(criterion.test_fields.size());
  for (size_t f = 0; f < criterion.test_fields.size(); ++f) {
    FieldRefiner& r = refiners[f];
    r.tree = &tree;
    r.field = &criterion.test_fields[f];
    r.l8f1 = &l8f1;
    r.p = p;
    r.tol = criterion.tol;
    r.sup = criterion.global_sup[f];
    r.max_depth = max_depth;
    r.refine(tree.nodes[0].box, 0, {0, 0, 0}, r.sample(tree.nodes[0].box));
    criterion.global_sup[f] = r.sup;
  }

  // Union of the per-field trees.
  std::set<std::pair<int, std::array<std::int64_t, 3>>> splits;
  for (const auto& r : refiners) splits.insert(r.want_split.begin(), r.want_split.end());
  bool grew = true;
  while (grew) {
    grew = false;
    tree.finalize();
    for (int id : tree.leaves) {
      const TreeNode& n = tree.nodes[id];
      if (splits.count({n.depth, n.anchor})) {
        tree.split(id);
        grew = true;
      }
    }
  }

  // Phase 2: level restriction plus verification that every leaf passes every
  // field's criterion (frozen sup), splitting stragglers until stable.
  bool changed = true;
  while (changed) {
    changed = false;
    enforce_level_restriction(tree);
    for (int id : std::vector<int>(tree.leaves)) {
      if (!tree.nodes[id].is_leaf()) continue;
      const TreeNode n = tree.nodes[id];
      if (n.depth >= max_depth) continue;
      for (size_t f = 0; f < refiners.size(); ++f) {
        FieldRefiner& r = refiners[f];
        if (r.accepted.count({n.depth, n.anchor})) continue;
        VecR x0 = r.sample(n.box), x1;
        const double err = r.check(n.box, x0, x1);
        if (err / r.sup < criterion.tol) {
          r.accepted.insert({n.depth, n.anchor});
          continue;
        }
        tree.split(id);
        changed = true;
        break;
      }
    }
    if (changed) tree.finalize();
  }

  if (unresolved) {
    unresolved->clear();
    for (int id : tree.leaves) {
      const TreeNode& n = tree.nodes[id];
      if (n.depth < max_depth) continue;
      for (auto& r : refiners) {
        VecR x0 = r.sample(n.box), x1;
        if (r.check(n.box, x0, x1) / r.sup >= criterion.tol) {
          unresolved->push_back(id);
          break;
        }
      }
    }
  }
  return tree;
}

std::vector<Point> leaf_cheb_points(const Box& box, int p, int dim) {
  const VecR cn = cheb_lobatto_1d(p);
  std::vector<Point> pts;
  auto map1 = [&](double t, int k) { return 0.5 * (box.lo[k] + box.hi[k]) + 0.5 * (box.hi[k] - box.lo[k]) * t; };
  if (dim == 2) {
    pts.reserve(p * p);
    for (int i1 = 0; i1 < p; ++i1)
      for (int i2 = 0; i2 < p; ++i2) pts.emplace_back(map1(cn[i1], 0), map1(cn[i2], 1), 0.0);
  } else {
    pts.reserve(p * p * p);
    for (int i1 = 0; i1 < p; ++i1)
      for (int i2 = 0; i2 < p; ++i2)
        for (int i3 = 0; i3 < p; ++i3)
          pts.emplace_back(map1(cn[i1], 0), map1(cn[i2], 1), map1(cn[i3], 2));
  }
  return pts;
}

std::vector<Point> leaf_cheb_points(const DiscretizationTree& tree, const TreeNode& leaf) {
  return leaf_cheb_points(leaf.box, tree.p, tree.dim);
}

std::vector<Point> leaf_gauss_boundary_points(const Box& box, int q, int dim) {
  const GaussRule gr = gauss_legendre_1d(q);
  std::vector<Point> pts;
  auto map1 = [&](double t, int k) { return 0.5 * (box.lo[k] + box.hi[k]) + 0.5 * (box.hi[k] - box.lo[k]) * t; };
  if (dim == 2) {
    pts.reserve(4 * q);
    for (int s = 0; s < 4; ++s)
      for (int i = 0; i < q; ++i) {
        const double t = gr.nodes[i];
        switch (s) {
          case 0: pts.emplace_back(map1(t, 0), box.lo[1], 0.0); break;  // S
          case 1: pts.emplace_back(box.hi[0], map1(t, 1), 0.0); break;  // E
          case 2: pts.emplace_back(map1(t, 0), box.hi[1], 0.0); break;  // N
          default: pts.emplace_back(box.lo[0], map1(t, 1), 0.0); break; // W
        }
      }
  } else {
    pts.reserve(6 * q * q);
    for (int f = 0; f < 6; ++f) {
      const int axis = f / 2;
      const int ua = (axis == 0) ? 1 : 0;
      const int va = (axis == 2) ? 1 : 2;
      const double fixed = (f % 2 == 0) ? box.lo[axis] : box.hi[axis];
      for (int iu = 0; iu < q; ++iu)
        for (int iv = 0; iv < q; ++iv) {
          Point x;
          x[axis] = fixed;
          x[ua] = map1(gr.nodes[iu], ua);
          x[va] = map1(gr.nodes[iv], va);
          pts.push_back(x);
        }
    }
  }
  return pts;
}

std::vector<Point> leaf_gauss_boundary_points(const DiscretizationTree& tree, const TreeNode& leaf) {
  return leaf_gauss_boundary_points(leaf.box, tree.q, tree.dim);
}

std::vector<std::vector<int>> sibling_groups(const DiscretizationTree& tree, int level) {
  require(level >= 0 && level < static_cast<int>(tree.levels.size()),
          "sibling_groups: level out of range");
  std::vector<std::vector<int>> groups;
  const int nchild = tree.dim == 2 ? 4 : 8;
  for (int id : tree.levels[level]) {
    const TreeNode& n = tree.nodes[id];
    if (n.is_leaf()) continue;
    std::vector<int> g(n.child.begin(), n.child.begin() + nchild);
    groups.push_back(std::move(g));
  }
  return groups;
}

int max_face_neighbor_depth_gap(const DiscretizationTree& tree) {
  // exact integer-range adjacency test over all leaf pairs
  int gap = 0;
  const auto& lv = tree.leaves;
  for (size_t a = 0; a < lv.size(); ++a) {
    const TreeNode& na = tree.nodes[lv[a]];
    for (size_t b = a + 1; b < lv.size(); ++b) {
      const TreeNode& nb = tree.nodes[lv[b]];
      const int fd = std::max(na.depth, nb.depth);
      std::int64_t alo[3], ahi[3], blo[3], bhi[3];
      for (int k = 0; k < tree.dim; ++k) {
        const std::int64_t sa = std::int64_t(1) << (fd - na.depth);
        const std::int64_t sb = std::int64_t(1) << (fd - nb.depth);
        alo[k] = na.anchor[k] * sa;
        ahi[k] = (na.anchor[k] + 1) * sa;
        blo[k] = nb.anchor[k] * sb;
        bhi[k] = (nb.anchor[k] + 1) * sb;
      }
      int touch_axis = -1;
      bool overlap_rest = true;
      for (int k = 0; k < tree.dim; ++k) {
        if (ahi[k] == blo[k] || bhi[k] == alo[k]) {
          if (touch_axis >= 0) {
            touch_axis = -2;  // edge/corner contact only
            break;
          }
          touch_axis = k;
        } else if (std::min(ahi[k], bhi[k]) <= std::max(alo[k], blo[k])) {
          overlap_rest = false;
          break;
        }
      }
      if (touch_axis >= 0 && overlap_rest)
        gap = std::max(gap, std::abs(na.depth - nb.depth));
    }
  }
  return gap;
}

std::string mesh_to_json(const DiscretizationTree& tree) {
  nlohmann::json j;
  j["dim"] = tree.dim;
  j["p"] = tree.p;
  j["q"] = tree.q;
  nlohmann::json nodes = nlohmann::json::array();
  const int nchild = tree.dim == 2 ? 4 : 8;
  for (const TreeNode& n : tree.nodes) {
    nlohmann::json jn;
    jn["id"] = n.id;
    jn["depth"] = n.depth;
    jn["lo"] = {n.box.lo[0], n.box.lo[1], n.box.lo[2]};
    jn["hi"] = {n.box.hi[0], n.box.hi[1], n.box.hi[2]};
    nlohmann::json ch = nlohmann::json::array();
    if (!n.is_leaf())
      for (int c = 0; c < nchild; ++c) ch.push_back(n.child[c]);
    jn["children"] = ch;
    nodes.push_back(jn);
  }
  j["nodes"] = nodes;
  return j.dump(1);
}

DiscretizationTree mesh_from_json(const std::string& text) {
  const nlohmann::json j = nlohmann::json::parse(text);
  DiscretizationTree t;
  t.dim = j.at("dim").get<int>();
  t.p = j.at("p").get<int>();
  t.q = j.at("q").get<int>();
  const auto& nodes = j.at("nodes");
  t.nodes.resize(nodes.size());
  for (const auto& jn : nodes) {
    TreeNode n;
    n.id = jn.at("id").get<int>();
    n.depth = jn.at("depth").get<int>();
    for (int k = 0; k < 3; ++k) {
      n.box.lo[k] = jn.at("lo")[k].get<double>();
      n.box.hi[k] = jn.at("hi")[k].get<double>();
    }
    const auto& ch = jn.at("children");
    n.n_children = static_cast<int>(ch.size());
    for (int c = 0; c < n.n_children; ++c) n.child[c] = ch[c].get<int>();
    t.nodes[n.id] = n;
  }
  for (TreeNode& n : t.nodes)
    for (int c = 0; c < n.n_children; ++c) {
      TreeNode& kid = t.nodes[n.child[c]];
      kid.parent = n.id;
      for (int k = 0; k < 3; ++k) kid.anchor[k] = 2 * n.anchor[k] + child_offset[c][k];
    }
  t.domain = t.nodes[0].box;
  t.finalize();
  return t;
}

}  // namespace hps
