// Copyright (c) 2026 the hpsolve authors. All rights reserved.
// SPDX-License-Identifier: Apache-2.0

#include "hps/local_solve.hpp"

#include <cmath>
#include <map>
#include <mutex>
#include <sstream>

namespace hps {

namespace {

// Reference-element derivative operators for the tensor grid, cached per (p,dim).
struct DiffOps {
  std::vector<MatR> d1;   // first derivative along each axis
  std::vector<MatR> d2;   // pure second derivative along each axis
};

const DiffOps& diff_ops(int p, int dim) {
  using Key = std::pair<int, int>;
  static std::map<Key, DiffOps> cache;
  static std::mutex mu;
  std::lock_guard<std::mutex> lock(mu);
  auto it = cache.find({p, dim});
  if (it != cache.end()) return it->second;
  const MatR d = cheb_diff_matrix(p);
  const MatR dd = d * d;
  const MatR id = MatR::Identity(p, p);
  DiffOps ops;
  if (dim == 2) {
    ops.d1 = {kron(d, id), kron(id, d)};
    ops.d2 = {kron(dd, id), kron(id, dd)};
  } else {
    ops.d1 = {kron(d, kron(id, id)), kron(id, kron(d, id)), kron(id, kron(id, d))};
    ops.d2 = {kron(dd, kron(id, id)), kron(id, kron(dd, id)), kron(id, kron(id, dd))};
  }
  return cache.emplace(Key{p, dim}, std::move(ops)).first->second;
}

}  // namespace

MatR discretize_operator(const Box& leaf_box, int leaf_id,
                         const std::vector<CoefficientField>& terms, int p, int dim) {
  const int n = dim == 2 ? p * p : p * p * p;
  const auto pts = leaf_cheb_points(leaf_box, p, dim);
  const DiffOps& ops = diff_ops(p, dim);
  const double scale = 2.0 / (leaf_box.hi[0] - leaf_box.lo[0]);

  MatR lmat = MatR::Zero(n, n);
  VecR c(n);
  for (const CoefficientField& term : terms) {
    for (int i = 0; i < n; ++i) {
      c[i] = term.eval(pts[i]);
      if (!std::isfinite(c[i])) {
        std::ostringstream os;
        os << "discretize_operator: non-finite coefficient sample on leaf " << leaf_id
           << " at point (" << pts[i][0] << ", " << pts[i][1] << ", " << pts[i][2] << ")";
        fail(os.str());
      }
    }
    switch (term.role) {
      case CoefficientField::Role::laplacian:
        for (int a = 0; a < dim; ++a) lmat += (scale * scale) * (c.asDiagonal() * ops.d2[a]);
        break;
      case CoefficientField::Role::gradient:
        require(term.axis >= 0 && term.axis < dim, "discretize_operator: bad gradient axis");
        lmat += scale * (c.asDiagonal() * ops.d1[term.axis]);
        break;
      case CoefficientField::Role::zeroth:
        lmat += MatR(c.asDiagonal());
        break;
      case CoefficientField::Role::second_order: {
        require(term.axis >= 0 && term.axis < dim && term.axis2 >= 0 && term.axis2 < dim,
                "discretize_operator: bad second_order axes");
        if (term.axis == term.axis2)
          lmat += (scale * scale) * (c.asDiagonal() * ops.d2[term.axis]);
        else
          lmat += (scale * scale) * (c.asDiagonal() * (ops.d1[term.axis] * ops.d1[term.axis2]));
        break;
      }
    }
  }
  return lmat;
}

namespace {

template <class S>
void check_factorization(const Eigen::PartialPivLU<Mat<S>>& fac, LeafSolution<S>& out,
                         const char* what) {
  const auto& lu = fac.matrixLU();
  double dmin = std::numeric_limits<double>::infinity(), dmax = 0.0;
  for (Eigen::Index i = 0; i < lu.rows(); ++i) {
    const double a = std::abs(lu(i, i));
    if (!std::isfinite(a) || a == 0.0) {
      std::ostringstream os;
      os << what << ": singular factorization (zero pivot at " << i << ")";
      fail(os.str());
    }
    dmin = std::min(dmin, a);
    dmax = std::max(dmax, a);
  }
  out.rcond = dmin / dmax;  // cheap pivot-ratio estimate
  out.ill_conditioned = out.rcond < 1e-12;
}

}  // namespace

LeafSolution<Real> local_solve_dtn(const MatR& lmat, const VecR& fvec, const LeafOperatorSet& ops) {
  const auto& ii = ops.idx.interior;
  const auto& ie = ops.idx.exterior;
  const int n = static_cast<int>(lmat.rows());
  const int ni = static_cast<int>(ii.size());
  const int nb = static_cast<int>(ops.P.cols());

  MatR a_ii(ni, ni), a_ie(ni, static_cast<int>(ie.size()));
  for (int r = 0; r < ni; ++r) {
    for (int c = 0; c < ni; ++c) a_ii(r, c) = lmat(ii[r], ii[c]);
    for (size_t c = 0; c < ie.size(); ++c) a_ie(r, c) = lmat(ii[r], ie[c]);
  }

  LeafSolution<Real> sol;
  sol.fac.compute(a_ii);
  check_factorization(sol.fac, sol, "local_solve_dtn");

  const MatR x = sol.fac.solve(a_ie);  // L_ii^-1 L_ie
  sol.Y.resize(n, nb);
  for (size_t r = 0; r < ie.size(); ++r) sol.Y.row(ie[r]) = ops.P.row(r);
  const MatR yi = -x * ops.P;
  for (int r = 0; r < ni; ++r) sol.Y.row(ii[r]) = yi.row(r);

  VecR fi(ni);
  for (int r = 0; r < ni; ++r) fi[r] = fvec[ii[r]];
  sol.v = VecR::Zero(n);
  const VecR vi = -sol.fac.solve(fi);
  for (int r = 0; r < ni; ++r) sol.v[ii[r]] = vi[r];

  sol.T = ops.Q * sol.Y;
  sol.h = ops.Q * sol.v;
  return sol;
}

LeafSolution<Complex> local_solve_iti(const MatR& lmat, const VecC& fvec, const LeafOperatorSet& ops) {
  require(ops.dim == 2, "local_solve_iti: 2D only");
  const auto& ii = ops.idx.interior;
  const int n = static_cast<int>(lmat.rows());
  const int ni = static_cast<int>(ii.size());
  const int nbc = static_cast<int>(ops.G.rows());  // 4p-4
  const int nb = static_cast<int>(ops.P.cols());   // 4q

  MatC b(n, n);
  b.topRows(nbc) = ops.G;
  for (int r = 0; r < ni; ++r) b.row(nbc + r) = lmat.row(ii[r]).cast<Complex>();

  LeafSolution<Complex> sol;
  sol.fac.compute(b);
  check_factorization(sol.fac, sol, "local_solve_iti");

  MatC rhs_y = MatC::Zero(n, nb);
  rhs_y.topRows(nbc) = ops.P.cast<Complex>();
  sol.Y = sol.fac.solve(rhs_y);

  VecC rhs_v = VecC::Zero(n);
  for (int r = 0; r < ni; ++r) rhs_v[nbc + r] = fvec[ii[r]];
  sol.v = sol.fac.solve(rhs_v);

  sol.T = ops.QH * sol.Y;
  sol.h = ops.QH * sol.v;
  return sol;
}

std::pair<VecR, VecR> leaf_resolve_source(const LeafSolution<Real>& sol, const VecR& f,
                                          const LeafOperatorSet& ops) {
  const auto& ii = ops.idx.interior;
  VecR fi(ii.size());
  for (size_t r = 0; r < ii.size(); ++r) fi[r] = f[ii[r]];
  VecR v = VecR::Zero(f.size());
  const VecR vi = -sol.fac.solve(fi);
  for (size_t r = 0; r < ii.size(); ++r) v[ii[r]] = vi[r];
  return {v, ops.Q * v};
}

std::pair<VecC, VecC> leaf_resolve_source(const LeafSolution<Complex>& sol, const VecC& f,
                                          const LeafOperatorSet& ops) {
  const auto& ii = ops.idx.interior;
  const int nbc = static_cast<int>(ops.G.rows());
  VecC rhs = VecC::Zero(f.size());
  for (size_t r = 0; r < ii.size(); ++r) rhs[nbc + r] = f[ii[r]];
  VecC v = sol.fac.solve(rhs);
  return {v, ops.QH * v};
}

namespace {

template <class S>
Vec<S> sample_source(const std::vector<Point>& pts, const std::function<Complex(const Point&)>& f);

template <>
VecR sample_source<Real>(const std::vector<Point>& pts, const std::function<Complex(const Point&)>& f) {
  VecR v(pts.size());
  for (size_t i = 0; i < pts.size(); ++i) v[i] = f ? f(pts[i]).real() : 0.0;
  return v;
}

template <>
VecC sample_source<Complex>(const std::vector<Point>& pts, const std::function<Complex(const Point&)>& f) {
  VecC v(pts.size());
  for (size_t i = 0; i < pts.size(); ++i) v[i] = f ? f(pts[i]) : Complex(0.0);
  return v;
}

}  // namespace

template <class S>
std::vector<LeafSolution<S>> local_solve_batch(
    const DiscretizationTree& tree, const std::vector<int>& leaf_ids,
    const std::vector<CoefficientField>& terms,
    const std::function<Complex(const Point&)>& source, const LeafOperatorSet& ops) {
  std::vector<LeafSolution<S>> out(leaf_ids.size());
  std::ostringstream errs;
  int n_err = 0;
  for (size_t i = 0; i < leaf_ids.size(); ++i) {
    const TreeNode& leaf = tree.nodes[leaf_ids[i]];
    try {
      const MatR lmat = discretize_operator(leaf.box, leaf.id, terms, tree.p, tree.dim);
      const auto pts = leaf_cheb_points(tree, leaf);
      const Vec<S> f = sample_source<S>(pts, source);
      if constexpr (scalar_traits<S>::is_complex)
        out[i] = local_solve_iti(lmat, f, ops);
      else
        out[i] = local_solve_dtn(lmat, f, ops);
    } catch (const Error& e) {
      if (n_err++) errs << "; ";
      errs << "leaf " << leaf.id << ": " << e.what();
    }
  }
  if (n_err) fail("local_solve_batch: " + errs.str());
  return out;
}

template std::vector<LeafSolution<Real>> local_solve_batch<Real>(
    const DiscretizationTree&, const std::vector<int>&, const std::vector<CoefficientField>&,
    const std::function<Complex(const Point&)>&, const LeafOperatorSet&);
template std::vector<LeafSolution<Complex>> local_solve_batch<Complex>(
    const DiscretizationTree&, const std::vector<int>&, const std::vector<CoefficientField>&,
    const std::function<Complex(const Point&)>&, const LeafOperatorSet&);

}  // namespace hps
