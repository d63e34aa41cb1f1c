// Copyright (c) 2026 the hpsolve authors. All rights reserved.
// SPDX-License-Identifier: Apache-2.0

#ifndef HPSOLVE_SOLVER_HPP
#define HPSOLVE_SOLVER_HPP

#include <functional>
#include <vector>

#include "hps/local_solve.hpp"
#include "hps/merge.hpp"

namespace hps {

enum class RootBC { dirichlet, impedance, radiation };

struct SolverOptions {
  bool build_root_T = false;        // materialize the root T,h (radiation closure)
  bool root_implicit_S = false;     // apply the root propagation through the D factorization
  bool free_T_after_merge = false;  // release child T/h once the parent is merged (single-shot runs)
  bool quiet_warnings = false;
};

template <class S>
struct SolutionField {
  const DiscretizationTree* tree = nullptr;
  std::vector<Vec<S>> u;  // per leaf, tree leaf order
};

/// Per-source data: particular solutions and their upward-swept boundary data.
/// The build source lives in the solver; extra sources (derivative solves) get
/// their own state.
template <class S>
struct SourceState {
  std::vector<Vec<S>> leaf_v, leaf_h;        // per leaf ordinal
  std::vector<Vec<S>> node_gtilde, node_h;   // per node id (internal nodes)
  Vec<S> root_h;                             // only with build_root_T
};

template <class S>
class HpsSolver {
 public:
  HpsSolver(const DiscretizationTree& tree, Variant variant, double eta,
            std::vector<CoefficientField> terms, std::function<Complex(const Point&)> source,
            SolverOptions opts = {});

  /// Full build: local solve stage then all merge levels.
  void build();

  /// Staged build pieces (used by the execution planner).
  void build_leaf(int ordinal);
  void clear_leaf(int ordinal);
  void merge_internal(int node_id);
  void clear_internal(int node_id);
  bool leaf_built(int ordinal) const { return leaf_sol_[ordinal].Y.size() > 0; }
  bool node_merged(int node_id) const;

  /// Boundary data for the root sampled on its boundary layout.
  Vec<S> sample_root_data(const std::function<Complex(const Point&)>& g) const;
  std::vector<Point> root_boundary_points() const;
  std::vector<Point> node_boundary_points(int node_id) const;

  /// Downward pass + leaf reconstruction for explicit root data.
  SolutionField<S> solve(const Vec<S>& g_root, std::vector<Vec<S>>* leaf_g_out = nullptr) const;

  /// Radiation-closed solve: the root boundary data solves T g = -h.
  SolutionField<S> solve_radiation(std::vector<Vec<S>>* leaf_g_out = nullptr) const;

  /// Solve with a different source (same operator): per-leaf source samples on
  /// the Chebyshev grids. Root data either explicit or radiation-closed.
  SolutionField<S> solve_new_source(const std::vector<Vec<S>>& leaf_f, RootBC root_bc,
                                    const Vec<S>* g_root = nullptr) const;

  /// g vectors for every node given root data; used by staged execution.
  void propagate(const Vec<S>& g_root, const SourceState<S>* st, std::vector<Vec<S>>& g) const;
  Vec<S> reconstruct_leaf(int ordinal, const Vec<S>& g_leaf, const SourceState<S>* st) const;

  SourceState<S> make_source_state(const std::vector<Vec<S>>& leaf_f) const;

  const DiscretizationTree& tree() const { return *tree_; }
  Variant variant() const { return variant_; }
  const LeafOperatorSet& leaf_ops(int ordinal) const;
  const std::vector<LeafSolution<S>>& leaf_solutions() const { return leaf_sol_; }
  const MergeArtifact<S>& artifact(int node_id) const { return art_[node_id]; }
  const Mat<S>& node_T(int node_id) const;
  const Vec<S>& node_h(int node_id) const;
  const std::vector<PanelLayout>& node_sections(int node_id) const { return sections_[node_id]; }
  const Mat<S>& root_T() const { return root_T_; }
  const Vec<S>& root_h() const { return root_h_; }
  int leaf_ordinal(int node_id) const { return leaf_ord_[node_id]; }
  int top_D_size() const;
  bool any_ill_conditioned() const { return ill_conditioned_; }

 private:
  std::vector<ChildView<S>> child_views(int node_id, const SourceState<S>* st) const;
  void root_closure_factor();

  const DiscretizationTree* tree_;
  Variant variant_;
  double eta_;
  std::vector<CoefficientField> terms_;
  std::function<Complex(const Point&)> source_;
  SolverOptions opts_;

  std::vector<int> leaf_ord_;               // node id -> leaf ordinal (-1)
  std::vector<LeafSolution<S>> leaf_sol_;   // per leaf ordinal
  std::vector<Mat<S>> node_T_;              // per node id (internal)
  std::vector<Vec<S>> node_h_;
  std::vector<std::vector<PanelLayout>> sections_;  // per node id
  std::vector<MergeArtifact<S>> art_;       // per node id (internal)
  Mat<S> root_T_;
  Vec<S> root_h_;
  Eigen::PartialPivLU<Mat<S>> root_T_fac_;
  bool root_fac_ready_ = false;
  FaceProjection proj_;
  bool ill_conditioned_ = false;
};

using HpsSolverR = HpsSolver<Real>;
using HpsSolverC = HpsSolver<Complex>;

}  // namespace hps

#endif
