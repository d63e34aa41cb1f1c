// Copyright (c) 2026 the hpsolve authors. All rights reserved.
// SPDX-License-Identifier: Apache-2.0

#ifndef HPSOLVE_MESH_HPP
#define HPSOLVE_MESH_HPP

#include <array>
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "hps/core.hpp"

namespace hps {

struct Box {
  Point lo = Point::Zero();
  Point hi = Point::Zero();
};

/// Child octants are ordered (a,b,c,d) = (SW,SE,NE,NW) in the (x1,x2) plane,
/// then (e..h) directly above them for 3D.
constexpr int child_offset[8][3] = {{0, 0, 0}, {1, 0, 0}, {1, 1, 0}, {0, 1, 0},
                                    {0, 0, 1}, {1, 0, 1}, {1, 1, 1}, {0, 1, 1}};
int child_slot_from_offset(int o1, int o2, int o3);

struct TreeNode {
  Box box;
  int id = -1;
  int parent = -1;
  int depth = 0;
  std::array<int, 8> child{{-1, -1, -1, -1, -1, -1, -1, -1}};
  int n_children = 0;
  std::array<std::int64_t, 3> anchor{{0, 0, 0}};  // integer coords at this depth
  bool is_leaf() const { return n_children == 0; }
};

struct DiscretizationTree {
  int dim = 2;
  int p = 0;
  int q = 0;
  Box domain;
  std::vector<TreeNode> nodes;             // indexed by node id, nodes[0] is the root
  std::vector<int> leaves;                 // depth-first order
  std::vector<std::vector<int>> levels;    // node ids per depth

  int n_leaves() const { return static_cast<int>(leaves.size()); }
  long long total_points() const;          // N = n_leaves * p^dim
  int max_depth() const { return static_cast<int>(levels.size()) - 1; }
  double leaf_side(const TreeNode& n) const { return (domain.hi[0] - domain.lo[0]) / double(std::int64_t(1) << n.depth); }

  /// Split a leaf into 2^dim children. Invalidates leaves/levels until
  /// finalize() is called.
  void split(int node_id);
  /// Rebuild the leaf list (depth-first) and per-depth level lists.
  void finalize();
  /// Deepest node at depth <= `depth` containing the cell with the given
  /// integer anchor; -1 if outside the domain.
  int find_node(int depth, const std::array<std::int64_t, 3>& anchor) const;
};

struct RefinementCriterion {
  double tol = 1e-6;
  int p = 8;
  std::vector<std::function<Real(const Point&)>> test_fields;
  std::vector<double> global_sup;  // running sup estimate per field (grown in place)
};

DiscretizationTree build_uniform_tree(const Box& domain, int L, int dim, int p);

/// Adaptive 3D refinement: per-field interpolation-error refinement, union of
/// the per-field trees, then level restriction. Leaves that still fail the
/// criterion at max_depth are reported through `unresolved` (warning channel).
DiscretizationTree refine_adaptive(const Box& domain, RefinementCriterion& criterion,
                                   int max_depth, std::vector<int>* unresolved = nullptr);

/// Split leaves until face-adjacent leaf depths differ by at most one.
/// Refinement only; idempotent.
void enforce_level_restriction(DiscretizationTree& tree);

/// Tensor Chebyshev grid of a leaf, axis-1-major ordering.
std::vector<Point> leaf_cheb_points(const DiscretizationTree& tree, const TreeNode& leaf);
std::vector<Point> leaf_cheb_points(const Box& box, int p, int dim);

/// Per-side (2D) / per-face (3D) Gauss panels in the fixed side ordering;
/// (2*dim)*q^(dim-1) points total, no corner/edge points.
std::vector<Point> leaf_gauss_boundary_points(const DiscretizationTree& tree, const TreeNode& leaf);
std::vector<Point> leaf_gauss_boundary_points(const Box& box, int q, int dim);

/// Children tuples of the internal nodes at a given level, in level order.
std::vector<std::vector<int>> sibling_groups(const DiscretizationTree& tree, int level);

/// Largest depth difference over all face-adjacent leaf pairs (brute force).
int max_face_neighbor_depth_gap(const DiscretizationTree& tree);

std::string mesh_to_json(const DiscretizationTree& tree);
DiscretizationTree mesh_from_json(const std::string& text);

}  // namespace hps

#endif
