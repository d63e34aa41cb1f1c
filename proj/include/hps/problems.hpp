// Copyright (c) 2026 the hpsolve authors. All rights reserved.
// SPDX-License-Identifier: Apache-2.0

#ifndef HPSOLVE_PROBLEMS_HPP
#define HPSOLVE_PROBLEMS_HPP

#include <memory>
#include <string>

#include "hps/downpass.hpp"
#include "hps/solver.hpp"

namespace hps {

/// Benchmark problem: differential operator, source, boundary data, and
/// optionally the exact solution it was manufactured from.
struct ProblemSpec {
  std::string name;
  int dim = 2;
  Variant variant = Variant::dtn;
  RootBC root_bc = RootBC::dirichlet;
  double eta = 1.0;  // ItI impedance parameter
  double k = 0.0;    // wavenumber, when applicable
  Box domain;
  std::vector<CoefficientField> terms;
  std::function<Complex(const Point&)> source;
  /// Boundary data evaluator; receives the outward unit normal (Dirichlet
  /// data ignores it, impedance data is u_n + i*eta*u).
  std::function<Complex(const Point&, const Point&)> boundary;
  std::function<Complex(const Point&)> exact;
  bool has_exact = false;
  std::vector<std::function<Real(const Point&)>> refinement_fields;  // 3D adaptive runs
};

/// Variant of Poisson's equation with spatially varying drift coefficients and
/// the manufactured solution e^{5x1} sin(5x2) + sin(10 pi x1) sin(pi x2).
ProblemSpec make_manufactured_2d_dtn();

/// Inhomogeneous Helmholtz problem, Robin data u_n + i u, manufactured
/// solution e^{i 20 x1} + e^{i 30 x2}.
ProblemSpec make_manufactured_2d_iti();

enum class PotentialKind { gauss_bump, random_bumps };

/// Plane-wave-excited scattering problem closed with the first-order absorbing
/// impedance condition u_n - i k u = 0; ItI variant with eta = k.
ProblemSpec make_scattering(double k, PotentialKind kind, unsigned seed = 7,
                            std::function<Real(const Point&)> q_override = nullptr);

/// 3D Poisson problem whose solution is a spherical arctan front centered in
/// the unit cube.
ProblemSpec make_wavefront_3d();

struct PoissonBoltzmannSpec {
  int n_centers = 50;
  double delta = 45.0, eps0 = 16.0, eps_inf = 100.0, amp = 10.0;
  enum class Permittivity { smooth, vdw } kind = Permittivity::smooth;
  unsigned seed = 20260810;
  std::vector<Point> centers;  // derived from seed when empty

  Real rho(const Point& x) const;
  Real eps(const Point& x) const;
  Point grad_eps(const Point& x) const;
};
PoissonBoltzmannSpec make_pb_spec(PoissonBoltzmannSpec::Permittivity kind, unsigned seed = 20260810);

/// Linearized Poisson--Boltzmann equation eps*Lap(u) + grad(eps).grad(u) = -rho
/// with homogeneous Dirichlet data on [-1,1]^3.
ProblemSpec make_poisson_boltzmann(const PoissonBoltzmannSpec& spec);

ProblemSpec problem_by_name(const std::string& name, double k = 0.0, unsigned seed = 7);

struct ErrorReport {
  double rel_linf = -1.0;
  double rel_l2 = -1.0;
};

/// Relative errors over all interior discretization points against the exact
/// solution.
template <class S>
ErrorReport error_report(const SolutionField<S>& field,
                         const std::function<Complex(const Point&)>& exact);

/// Relative Linf difference of two fields sampled on an n x n (x n) probe grid
/// strictly inside the domain, normalized by the reference field's sup.
template <class S>
double grid_rel_linf_diff(const SolutionField<S>& field, const SolutionField<S>& reference,
                          int n_per_axis);

struct Discretization {
  int p = 8;
  bool adaptive = false;
  int L = 3;             // uniform depth
  double tol = 1e-3;     // adaptive tolerance
  int max_depth = 10;
};

struct SolveReport {
  ErrorReport err;
  int n_leaves = 0;
  long long N = 0;
  int top_D_size = 0;
  int tree_depth = 0;
  int n_unresolved = 0;
  double t_build_s = 0.0, t_solve_s = 0.0, t_mesh_s = 0.0;
};

/// One end-to-end run: mesh, build, solve, error report. Holds the tree and
/// solver alive so the fields stay valid.
struct SolveRun {
  std::shared_ptr<DiscretizationTree> tree;
  std::shared_ptr<HpsSolver<Real>> solver_r;
  std::shared_ptr<HpsSolver<Complex>> solver_c;
  SolutionField<Real> field_r;
  SolutionField<Complex> field_c;
  bool complex_valued = false;
  SolveReport report;
};

SolveRun solve_problem(const ProblemSpec& prob, const Discretization& disc,
                       const SolverOptions& opts_in = {});

/// Boundary data vector on a solver's root layout, using per-face outward
/// normals.
template <class S>
Vec<S> sample_boundary_data(const HpsSolver<S>& solver, const ProblemSpec& prob);

/// Structural size of the root-merge interface matrix for a tree (no solve).
int top_merge_D_size(const DiscretizationTree& tree);

}  // namespace hps

#endif
