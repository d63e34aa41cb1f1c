// Copyright (c) 2026 the hpsolve authors. All rights reserved.
// SPDX-License-Identifier: Apache-2.0

#include "hps/problems.hpp"

#include <chrono>
#include <cmath>
#include <random>

namespace hps {

namespace {

double now_s() {
  return std::chrono::duration<double>(std::chrono::steady_clock::now().time_since_epoch()).count();
}

Box square2d(double lo, double hi) {
  Box b;
  b.lo = Point(lo, lo, 0.0);
  b.hi = Point(hi, hi, 0.0);
  return b;
}

Box cube3d(double lo, double hi) {
  Box b;
  b.lo = Point(lo, lo, lo);
  b.hi = Point(hi, hi, hi);
  return b;
}

constexpr Complex kI{0.0, 1.0};

// Spherical front steepness: front at rho0 = sqrt(0.7/alpha) with the center
// value arctan(-0.7) independent of alpha.
constexpr double kWavefrontAlpha = 30.0;

}  // namespace

ProblemSpec make_manufactured_2d_dtn() {
  ProblemSpec p;
  p.name = "poisson2d";
  p.dim = 2;
  p.variant = Variant::dtn;
  p.root_bc = RootBC::dirichlet;
  p.domain = square2d(-1.0, 1.0);
  p.terms.push_back({CoefficientField::Role::laplacian, -1, -1, [](const Point&) { return 1.0; }});
  p.terms.push_back(
      {CoefficientField::Role::gradient, 0, -1, [](const Point& x) { return -std::cos(5.0 * x[1]); }});
  p.terms.push_back(
      {CoefficientField::Role::gradient, 1, -1, [](const Point& x) { return std::sin(5.0 * x[1]); }});
  auto u = [](const Point& x) {
    return std::exp(5.0 * x[0]) * std::sin(5.0 * x[1]) +
           std::sin(10.0 * M_PI * x[0]) * std::sin(M_PI * x[1]);
  };
  auto ux = [](const Point& x) {
    return 5.0 * std::exp(5.0 * x[0]) * std::sin(5.0 * x[1]) +
           10.0 * M_PI * std::cos(10.0 * M_PI * x[0]) * std::sin(M_PI * x[1]);
  };
  auto uy = [](const Point& x) {
    return 5.0 * std::exp(5.0 * x[0]) * std::cos(5.0 * x[1]) +
           M_PI * std::sin(10.0 * M_PI * x[0]) * std::cos(M_PI * x[1]);
  };
  auto lap = [](const Point& x) {
    return -101.0 * M_PI * M_PI * std::sin(10.0 * M_PI * x[0]) * std::sin(M_PI * x[1]);
  };
  p.source = [=](const Point& x) {
    return Complex(lap(x) - std::cos(5.0 * x[1]) * ux(x) + std::sin(5.0 * x[1]) * uy(x));
  };
  p.boundary = [=](const Point& x, const Point&) { return Complex(u(x)); };
  p.exact = [=](const Point& x) { return Complex(u(x)); };
  p.has_exact = true;
  return p;
}

ProblemSpec make_manufactured_2d_iti() {
  ProblemSpec p;
  p.name = "helmholtz_robin2d";
  p.dim = 2;
  p.variant = Variant::iti;
  p.root_bc = RootBC::impedance;
  p.eta = 1.0;
  p.domain = square2d(-1.0, 1.0);
  p.terms.push_back({CoefficientField::Role::laplacian, -1, -1, [](const Point&) { return 1.0; }});
  p.terms.push_back({CoefficientField::Role::zeroth, -1, -1, [](const Point& x) {
                       return 1.0 + std::exp(-50.0 * (x[0] * x[0] + x[1] * x[1]));
                     }});
  auto u = [](const Point& x) {
    return std::exp(kI * 20.0 * x[0]) + std::exp(kI * 30.0 * x[1]);
  };
  auto grad = [](const Point& x) {
    return std::array<Complex, 2>{20.0 * kI * std::exp(kI * 20.0 * x[0]),
                                  30.0 * kI * std::exp(kI * 30.0 * x[1])};
  };
  p.source = [=](const Point& x) {
    const Complex lap = -400.0 * std::exp(kI * 20.0 * x[0]) - 900.0 * std::exp(kI * 30.0 * x[1]);
    return lap + (1.0 + std::exp(-50.0 * (x[0] * x[0] + x[1] * x[1]))) * u(x);
  };
  p.boundary = [=](const Point& x, const Point& n) {
    const auto g = grad(x);
    return n[0] * g[0] + n[1] * g[1] + kI * u(x);
  };
  p.exact = u;
  p.has_exact = true;
  return p;
}

ProblemSpec make_scattering(double k, PotentialKind kind, unsigned seed,
                            std::function<Real(const Point&)> q_override) {
  require(k > 0.0, "make_scattering: k must be positive");
  ProblemSpec p;
  p.name = "scatter2d";
  p.dim = 2;
  p.variant = Variant::iti;
  p.root_bc = RootBC::radiation;
  p.eta = k;
  p.k = k;
  p.domain = square2d(-1.0, 1.0);

  std::function<Real(const Point&)> q;
  if (q_override) {
    q = std::move(q_override);
  } else if (kind == PotentialKind::gauss_bump) {
    q = [](const Point& x) { return 1.5 * std::exp(-160.0 * (x[0] * x[0] + x[1] * x[1])); };
  } else {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> dist(-0.5, 0.5);
    std::vector<Point> centers(10);
    for (auto& c : centers) {
      c[0] = dist(rng);
      c[1] = dist(rng);
      c[2] = 0.0;
    }
    q = [centers](const Point& x) {
      double s = 0.0;
      for (const auto& c : centers) {
        const double dx = x[0] - c[0], dy = x[1] - c[1];
        s += std::exp(-50.0 * (dx * dx + dy * dy));
      }
      return s;
    };
  }

  p.terms.push_back({CoefficientField::Role::laplacian, -1, -1, [](const Point&) { return 1.0; }});
  p.terms.push_back(
      {CoefficientField::Role::zeroth, -1, -1, [=](const Point& x) { return k * k * (1.0 + q(x)); }});
  p.source = [=](const Point& x) {
    return -k * k * q(x) * std::exp(kI * k * x[0]);  // plane wave along s_hat = (1,0)
  };
  p.boundary = [](const Point&, const Point&) { return Complex(0.0); };
  return p;
}

ProblemSpec make_wavefront_3d() {
  ProblemSpec p;
  p.name = "wavefront3d";
  p.dim = 3;
  p.variant = Variant::dtn;
  p.root_bc = RootBC::dirichlet;
  p.domain = cube3d(0.0, 1.0);
  p.terms.push_back({CoefficientField::Role::laplacian, -1, -1, [](const Point&) { return 1.0; }});
  const double a = kWavefrontAlpha;
  auto rho2 = [](const Point& x) {
    const double d0 = x[0] - 0.5, d1 = x[1] - 0.5, d2 = x[2] - 0.5;
    return d0 * d0 + d1 * d1 + d2 * d2;
  };
  auto u = [=](const Point& x) { return std::atan(a * rho2(x) - 0.7); };
  auto lap = [=](const Point& x) {
    const double w = a * rho2(x) - 0.7;
    const double s = 1.0 + w * w;
    return -2.0 * w / (s * s) * 4.0 * a * a * rho2(x) + 6.0 * a / s;
  };
  p.source = [=](const Point& x) { return Complex(lap(x)); };
  p.boundary = [=](const Point& x, const Point&) { return Complex(u(x)); };
  p.exact = [=](const Point& x) { return Complex(u(x)); };
  p.has_exact = true;
  p.refinement_fields.push_back([=](const Point& x) { return lap(x); });
  return p;
}

Real PoissonBoltzmannSpec::rho(const Point& x) const {
  double s = 0.0;
  for (const auto& z : centers) s += std::exp(-delta * (x - z).squaredNorm());
  return s;
}

Real PoissonBoltzmannSpec::eps(const Point& x) const {
  if (kind == Permittivity::smooth) return eps0 + (eps_inf - eps0) * std::exp(-amp * rho(x));
  double prod = 1.0;
  for (const auto& z : centers) prod *= 1.0 - std::exp(-delta * (x - z).squaredNorm());
  const double q = 1.0 - prod;
  return q * eps0 + (1.0 - q) * (eps_inf - eps0);
}

Point PoissonBoltzmannSpec::grad_eps(const Point& x) const {
  if (kind == Permittivity::smooth) {
    Point grad_rho = Point::Zero();
    for (const auto& z : centers)
      grad_rho += -2.0 * delta * std::exp(-delta * (x - z).squaredNorm()) * (x - z);
    return (eps_inf - eps0) * std::exp(-amp * rho(x)) * (-amp) * grad_rho;
  }
  // grad q = sum_i grad(e_i) * prod_{j != i} (1 - e_j)
  const int n = static_cast<int>(centers.size());
  std::vector<double> e(n);
  for (int i = 0; i < n; ++i) e[i] = std::exp(-delta * (x - centers[i]).squaredNorm());
  Point grad_q = Point::Zero();
  for (int i = 0; i < n; ++i) {
    double prod = 1.0;
    for (int j = 0; j < n; ++j)
      if (j != i) prod *= 1.0 - e[j];
    grad_q += prod * (-2.0 * delta) * e[i] * (x - centers[i]);
  }
  return (2.0 * eps0 - eps_inf) * grad_q;
}

PoissonBoltzmannSpec make_pb_spec(PoissonBoltzmannSpec::Permittivity kind, unsigned seed) {
  PoissonBoltzmannSpec s;
  s.kind = kind;
  s.seed = seed;
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> dist(-0.5, 0.5);
  s.centers.resize(s.n_centers);
  for (auto& z : s.centers) {
    z[0] = dist(rng);
    z[1] = dist(rng);
    z[2] = dist(rng);
  }
  return s;
}

ProblemSpec make_poisson_boltzmann(const PoissonBoltzmannSpec& spec_in) {
  auto spec = std::make_shared<PoissonBoltzmannSpec>(spec_in);
  require(!spec->centers.empty(), "make_poisson_boltzmann: spec has no centers");
  ProblemSpec p;
  p.name = spec->kind == PoissonBoltzmannSpec::Permittivity::smooth ? "poisson_boltzmann3d"
                                                                    : "poisson_boltzmann3d_vdw";
  p.dim = 3;
  p.variant = Variant::dtn;
  p.root_bc = RootBC::dirichlet;
  p.domain = cube3d(-1.0, 1.0);
  p.terms.push_back(
      {CoefficientField::Role::laplacian, -1, -1, [spec](const Point& x) { return spec->eps(x); }});
  for (int a = 0; a < 3; ++a)
    p.terms.push_back({CoefficientField::Role::gradient, a, -1,
                       [spec, a](const Point& x) { return spec->grad_eps(x)[a]; }});
  p.source = [spec](const Point& x) { return Complex(-spec->rho(x)); };
  p.boundary = [](const Point&, const Point&) { return Complex(0.0); };
  p.refinement_fields.push_back([spec](const Point& x) { return spec->rho(x); });
  p.refinement_fields.push_back([spec](const Point& x) { return spec->eps(x); });
  for (int a = 0; a < 3; ++a)
    p.refinement_fields.push_back([spec, a](const Point& x) { return spec->grad_eps(x)[a]; });
  return p;
}

ProblemSpec problem_by_name(const std::string& name, double k, unsigned seed) {
  if (name == "poisson2d") return make_manufactured_2d_dtn();
  if (name == "helmholtz_robin2d") return make_manufactured_2d_iti();
  if (name == "scatter2d")
    return make_scattering(k > 0 ? k : 100.0, PotentialKind::gauss_bump, seed);
  if (name == "scatter2d_bumps")
    return make_scattering(k > 0 ? k : 100.0, PotentialKind::random_bumps, seed);
  if (name == "wavefront3d") return make_wavefront_3d();
  if (name == "poisson_boltzmann3d")
    return make_poisson_boltzmann(make_pb_spec(PoissonBoltzmannSpec::Permittivity::smooth, seed));
  if (name == "poisson_boltzmann3d_vdw")
    return make_poisson_boltzmann(make_pb_spec(PoissonBoltzmannSpec::Permittivity::vdw, seed));
  fail("unknown problem name: " + name);
}

template <class S>
ErrorReport error_report(const SolutionField<S>& field,
                         const std::function<Complex(const Point&)>& exact) {
  const DiscretizationTree& tree = *field.tree;
  double num_inf = 0.0, den_inf = 0.0, num_2 = 0.0, den_2 = 0.0;
  for (int i = 0; i < tree.n_leaves(); ++i) {
    const auto pts = leaf_cheb_points(tree, tree.nodes[tree.leaves[i]]);
    const Vec<S>& u = field.u[i];
    for (size_t j = 0; j < pts.size(); ++j) {
      const Complex ex = exact(pts[j]);
      Complex uv;
      if constexpr (scalar_traits<S>::is_complex)
        uv = u[j];
      else
        uv = Complex(u[j], 0.0);
      num_inf = std::max(num_inf, std::abs(uv - ex));
      den_inf = std::max(den_inf, std::abs(ex));
      num_2 += std::norm(uv - ex);
      den_2 += std::norm(ex);
    }
  }
  require(den_inf > 0.0, "error_report: zero-norm reference");
  return {num_inf / den_inf, std::sqrt(num_2 / den_2)};
}

template ErrorReport error_report<Real>(const SolutionField<Real>&,
                                        const std::function<Complex(const Point&)>&);
template ErrorReport error_report<Complex>(const SolutionField<Complex>&,
                                           const std::function<Complex(const Point&)>&);

template <class S>
double grid_rel_linf_diff(const SolutionField<S>& field, const SolutionField<S>& reference,
                          int n_per_axis) {
  const DiscretizationTree& tree = *reference.tree;
  const Box& dom = tree.domain;
  std::vector<Point> pts;
  auto coord = [&](int i, int k) {
    return dom.lo[k] + (i + 0.5) / double(n_per_axis) * (dom.hi[k] - dom.lo[k]);
  };
  if (tree.dim == 2) {
    for (int i = 0; i < n_per_axis; ++i)
      for (int j = 0; j < n_per_axis; ++j) pts.emplace_back(coord(i, 0), coord(j, 1), 0.0);
  } else {
    for (int i = 0; i < n_per_axis; ++i)
      for (int j = 0; j < n_per_axis; ++j)
        for (int k = 0; k < n_per_axis; ++k) pts.emplace_back(coord(i, 0), coord(j, 1), coord(k, 2));
  }
  const Vec<S> a = evaluate_at(field, pts);
  const Vec<S> b = evaluate_at(reference, pts);
  const double den = b.cwiseAbs().maxCoeff();
  require(den > 0.0, "grid_rel_linf_diff: zero-norm reference");
  return (a - b).cwiseAbs().maxCoeff() / den;
}

template double grid_rel_linf_diff<Real>(const SolutionField<Real>&, const SolutionField<Real>&, int);
template double grid_rel_linf_diff<Complex>(const SolutionField<Complex>&,
                                            const SolutionField<Complex>&, int);

template <class S>
Vec<S> sample_boundary_data(const HpsSolver<S>& solver, const ProblemSpec& prob) {
  const DiscretizationTree& tree = solver.tree();
  const auto& sections = solver.node_sections(0);
  Vec<S> g(node_boundary_size(tree, 0));
  int pos = 0;
  for (int f = 0; f < 2 * tree.dim; ++f) {
    Point normal = Point::Zero();
    normal[f / 2] = (f % 2 == 0) ? -1.0 : 1.0;
    if (tree.dim == 2) {
      // side order (S,E,N,W)
      static const double nx[4] = {0, 1, 0, -1};
      static const double ny[4] = {-1, 0, 1, 0};
      normal = Point(nx[f], ny[f], 0.0);
    }
    const auto pts = section_points(tree.nodes[0].box, tree.dim, f, sections[f]);
    for (const Point& x : pts) {
      const Complex val = prob.boundary(x, normal);
      if constexpr (scalar_traits<S>::is_complex)
        g[pos++] = val;
      else
        g[pos++] = val.real();
    }
  }
  return g;
}

template Vec<Real> sample_boundary_data<Real>(const HpsSolver<Real>&, const ProblemSpec&);
template Vec<Complex> sample_boundary_data<Complex>(const HpsSolver<Complex>&, const ProblemSpec&);

int top_merge_D_size(const DiscretizationTree& tree) { return merge_interior_size(tree, 0, false); }

SolveRun solve_problem(const ProblemSpec& prob, const Discretization& disc,
                       const SolverOptions& opts_in) {
  SolveRun run;
  SolveReport& rep = run.report;

  double t0 = now_s();
  if (disc.adaptive) {
    require(prob.dim == 3, "solve_problem: adaptive meshing is 3D only");
    require(!prob.refinement_fields.empty(), "solve_problem: problem has no refinement fields");
    RefinementCriterion crit;
    crit.tol = disc.tol;
    crit.p = disc.p;
    crit.test_fields = prob.refinement_fields;
    std::vector<int> unresolved;
    run.tree = std::make_shared<DiscretizationTree>(
        refine_adaptive(prob.domain, crit, disc.max_depth, &unresolved));
    rep.n_unresolved = static_cast<int>(unresolved.size());
  } else {
    run.tree =
        std::make_shared<DiscretizationTree>(build_uniform_tree(prob.domain, disc.L, prob.dim, disc.p));
  }
  rep.t_mesh_s = now_s() - t0;
  rep.n_leaves = run.tree->n_leaves();
  rep.N = run.tree->total_points();
  rep.tree_depth = run.tree->max_depth();
  rep.top_D_size = top_merge_D_size(*run.tree);

  SolverOptions opts = opts_in;
  if (prob.dim == 3) {
    opts.root_implicit_S = true;
    opts.free_T_after_merge = true;
  }
  if (prob.root_bc == RootBC::radiation) opts.build_root_T = true;

  run.complex_valued = prob.variant == Variant::iti;
  t0 = now_s();
  if (run.complex_valued) {
    run.solver_c = std::make_shared<HpsSolver<Complex>>(*run.tree, Variant::iti, prob.eta,
                                                        prob.terms, prob.source, opts);
    run.solver_c->build();
    rep.t_build_s = now_s() - t0;
    t0 = now_s();
    if (prob.root_bc == RootBC::radiation) {
      run.field_c = run.solver_c->solve_radiation();
    } else {
      const VecC g = sample_boundary_data(*run.solver_c, prob);
      run.field_c = run.solver_c->solve(g);
    }
    rep.t_solve_s = now_s() - t0;
    if (prob.has_exact) rep.err = error_report(run.field_c, prob.exact);
  } else {
    run.solver_r = std::make_shared<HpsSolver<Real>>(*run.tree, Variant::dtn, prob.eta, prob.terms,
                                                     prob.source, opts);
    run.solver_r->build();
    rep.t_build_s = now_s() - t0;
    t0 = now_s();
    const VecR g = sample_boundary_data(*run.solver_r, prob);
    run.field_r = run.solver_r->solve(g);
    rep.t_solve_s = now_s() - t0;
    if (prob.has_exact) rep.err = error_report(run.field_r, prob.exact);
  }
  return run;
}

}  // namespace hps
