// Copyright (c) 2026 the hpsolve authors. All rights reserved.
// SPDX-License-Identifier: Apache-2.0

#include <doctest.h>

#include <cmath>
#include <set>

#include "hps/mesh.hpp"

using namespace hps;

namespace {
Box unit_square() { return {Point(0, 0, 0), Point(1, 1, 0)}; }
Box unit_cube() { return {Point(0, 0, 0), Point(1, 1, 1)}; }
}  // namespace

TEST_CASE("uniform tree construction") {
  const auto t1 = build_uniform_tree(unit_square(), 1, 2, 8);
  CHECK(t1.n_leaves() == 4);
  CHECK(t1.total_points() == 256);
  CHECK(t1.q == 6);

  const auto t2 = build_uniform_tree(unit_cube(), 0, 3, 8);
  CHECK(t2.n_leaves() == 1);
  CHECK(t2.total_points() == 512);

  const auto t3 = build_uniform_tree(unit_square(), 3, 2, 16);
  CHECK(t3.n_leaves() == 64);
  CHECK(t3.total_points() == 16384);

  Box rect{Point(0, 0, 0), Point(2, 1, 0)};
  CHECK_THROWS_AS(build_uniform_tree(rect, 1, 2, 8), Error);
  CHECK_THROWS_AS(build_uniform_tree(unit_square(), 1, 2, 3), Error);
}

TEST_CASE("leaf Chebyshev points") {
  const Box b{Point(-1, -1, 0), Point(1, 1, 0)};
  const auto p2 = leaf_cheb_points(b, 2, 2);
  CHECK(p2.size() == 4);
  std::set<std::pair<double, double>> corners;
  for (const auto& x : p2) corners.insert({x[0], x[1]});
  CHECK(corners.count({-1, -1}) == 1);
  CHECK(corners.count({1, 1}) == 1);

  const Box u{Point(0, 0, 0), Point(1, 1, 0)};
  const auto p3 = leaf_cheb_points(u, 3, 2);
  std::set<double> xs;
  for (const auto& x : p3) xs.insert(x[0]);
  CHECK(xs == std::set<double>({0.0, 0.5, 1.0}));

  const auto p8 = leaf_cheb_points(b, 8, 2);
  CHECK(p8.size() == 64);
  int on_boundary = 0;
  for (const auto& x : p8)
    if (std::abs(x[0]) == 1.0 || std::abs(x[1]) == 1.0) ++on_boundary;
  CHECK(on_boundary == 28);
}

TEST_CASE("leaf Gauss boundary points") {
  const Box b{Point(-1, -1, 0), Point(1, 1, 0)};
  const auto g2 = leaf_gauss_boundary_points(b, 6, 2);
  CHECK(g2.size() == 24);
  // 6 per side, none on corners
  for (const auto& x : g2) CHECK(std::abs(x[0] * x[1]) < 1.0);

  const Box c{Point(0, 0, 0), Point(1, 1, 1)};
  const auto g3 = leaf_gauss_boundary_points(c, 6, 3);
  CHECK(g3.size() == 216);

  const auto g1 = leaf_gauss_boundary_points(b, 1, 2);
  CHECK(g1.size() == 4);
  CHECK(g1[0][0] == doctest::Approx(0.0));   // S midpoint
  CHECK(g1[0][1] == -1.0);
  CHECK(g1[1][0] == 1.0);                    // E midpoint
  CHECK(g1[1][1] == doctest::Approx(0.0));
}

TEST_CASE("sibling groups") {
  const auto t1 = build_uniform_tree(unit_square(), 1, 2, 8);
  const auto g0 = sibling_groups(t1, 0);
  CHECK(g0.size() == 1);
  CHECK(g0[0].size() == 4);

  const auto t2 = build_uniform_tree(unit_square(), 2, 2, 8);
  CHECK(sibling_groups(t2, 1).size() == 4);
  CHECK(sibling_groups(t2, 0).size() == 1);

  // group membership matches the tree's child lists exactly
  for (const auto& grp : sibling_groups(t2, 1)) {
    const int parent = t2.nodes[grp[0]].parent;
    for (int c = 0; c < 4; ++c) CHECK(t2.nodes[parent].child[c] == grp[c]);
  }
}

TEST_CASE("level restriction") {
  // uniform trees are already restricted
  auto t = build_uniform_tree(unit_cube(), 2, 3, 8);
  const auto json_before = mesh_to_json(t);
  enforce_level_restriction(t);
  CHECK(mesh_to_json(t) == json_before);

  // one deep leaf next to a shallow one forces refinement
  auto t2 = build_uniform_tree(unit_cube(), 1, 3, 8);
  int target = t2.leaves[0];
  for (int d = 1; d < 3; ++d) {
    t2.split(target);
    t2.finalize();
    target = t2.nodes[target].child[2];  // keep refining an interior corner child
  }
  CHECK(max_face_neighbor_depth_gap(t2) > 1);
  enforce_level_restriction(t2);
  CHECK(max_face_neighbor_depth_gap(t2) <= 1);

  // idempotent
  const auto json_after = mesh_to_json(t2);
  enforce_level_restriction(t2);
  CHECK(mesh_to_json(t2) == json_after);
}

TEST_CASE("adaptive refinement") {
  // constant field -> single leaf
  RefinementCriterion crit;
  crit.tol = 1e-6;
  crit.p = 8;
  crit.test_fields.push_back([](const Point&) { return 3.5; });
  auto t = refine_adaptive(unit_cube(), crit, 6);
  CHECK(t.n_leaves() == 1);

  // degree-(p-1) polynomial field -> single leaf (interpolation is exact)
  RefinementCriterion crit2;
  crit2.tol = 1e-9;
  crit2.p = 6;
  crit2.test_fields.push_back([](const Point& x) {
    return std::pow(x[0], 5) - 2.0 * std::pow(x[1], 5) * x[2] + x[0] * x[1] * x[2];
  });
  auto t2 = refine_adaptive(unit_cube(), crit2, 6);
  CHECK(t2.n_leaves() == 1);

  // localized bump refines near its support and satisfies the criterion
  auto bump = [](const Point& x) {
    return std::exp(-600.0 * (x - Point(0.3, 0.3, 0.3)).squaredNorm());
  };
  RefinementCriterion crit3;
  crit3.tol = 1e-4;
  crit3.p = 6;
  crit3.test_fields.push_back(bump);
  std::vector<int> unresolved;
  auto t3 = refine_adaptive(unit_cube(), crit3, 6, &unresolved);
  CHECK(t3.n_leaves() > 8);
  CHECK(unresolved.empty());
  CHECK(max_face_neighbor_depth_gap(t3) <= 1);

  // criterion holds on every leaf (exhaustive recheck)
  {
    const MatR l8 = refinement_interpolant(crit3.p);
    double sup = crit3.global_sup[0];
    for (int id : t3.leaves) {
      const auto& leaf = t3.nodes[id];
      const auto pts = leaf_cheb_points(leaf.box, crit3.p, 3);
      VecR x0(pts.size());
      for (size_t i = 0; i < pts.size(); ++i) x0[i] = bump(pts[i]);
      const int pc = crit3.p * crit3.p * crit3.p;
      VecR x1(8 * pc);
      int ofs = 0;
      const Point mid = 0.5 * (leaf.box.lo + leaf.box.hi);
      for (int c = 0; c < 8; ++c) {
        Box cb;
        for (int k = 0; k < 3; ++k) {
          cb.lo[k] = child_offset[c][k] ? mid[k] : leaf.box.lo[k];
          cb.hi[k] = child_offset[c][k] ? leaf.box.hi[k] : mid[k];
        }
        for (const Point& x : leaf_cheb_points(cb, crit3.p, 3)) x1[ofs++] = bump(x);
      }
      const double err = (x1 - l8 * x0).cwiseAbs().maxCoeff();
      CHECK(err / sup < crit3.tol);
    }
  }

  // union property: {f,g} refines every leaf that {f} alone refines
  auto f2 = [](const Point& x) {
    return std::exp(-400.0 * (x - Point(0.7, 0.7, 0.7)).squaredNorm());
  };
  RefinementCriterion crit_f;
  crit_f.tol = 1e-4;
  crit_f.p = 6;
  crit_f.test_fields.push_back(bump);
  auto tf = refine_adaptive(unit_cube(), crit_f, 6);
  RefinementCriterion crit_fg;
  crit_fg.tol = 1e-4;
  crit_fg.p = 6;
  crit_fg.test_fields.push_back(bump);
  crit_fg.test_fields.push_back(f2);
  auto tfg = refine_adaptive(unit_cube(), crit_fg, 6);
  CHECK(tfg.n_leaves() >= tf.n_leaves());
  // every split node of tf is split in tfg
  std::set<std::pair<int, std::array<std::int64_t, 3>>> split_fg;
  for (const auto& n : tfg.nodes)
    if (!n.is_leaf()) split_fg.insert({n.depth, n.anchor});
  for (const auto& n : tf.nodes)
    if (!n.is_leaf()) CHECK(split_fg.count({n.depth, n.anchor}) == 1);

  // monotonicity: tighter tolerance never yields fewer leaves
  RefinementCriterion crit_tight;
  crit_tight.tol = 1e-5;
  crit_tight.p = 6;
  crit_tight.test_fields.push_back(bump);
  auto t4 = refine_adaptive(unit_cube(), crit_tight, 6);
  CHECK(t4.n_leaves() >= t3.n_leaves());
}

TEST_CASE("mesh JSON round-trip") {
  auto t = build_uniform_tree(unit_cube(), 1, 3, 8);
  t.split(t.leaves[3]);
  t.finalize();
  enforce_level_restriction(t);
  const std::string js = mesh_to_json(t);
  const auto t2 = mesh_from_json(js);
  CHECK(mesh_to_json(t2) == js);
  CHECK(t2.n_leaves() == t.n_leaves());
  CHECK(t2.max_depth() == t.max_depth());
  for (size_t i = 0; i < t.nodes.size(); ++i) {
    CHECK(t.nodes[i].box.lo == t2.nodes[i].box.lo);
    CHECK(t.nodes[i].anchor == t2.nodes[i].anchor);
  }
}

TEST_CASE("point-count identities") {
  for (int L : {0, 1, 2}) {
    const auto t = build_uniform_tree(unit_square(), L, 2, 8);
    CHECK(t.n_leaves() == 1 << (2 * L));
    CHECK(t.total_points() == static_cast<long long>(std::pow(static_cast<double>(1 << L) * 8, 2)));
  }
  const auto t3 = build_uniform_tree(unit_cube(), 1, 3, 6);
  CHECK(t3.total_points() == 8 * 216);
}
