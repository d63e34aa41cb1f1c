// Copyright (c) 2026 the hpsolve authors. All rights reserved.
// SPDX-License-Identifier: Apache-2.0

#include "hps/downpass.hpp"

#include <cstdio>
#include <fstream>

#include <nlohmann/json.hpp>

namespace hps {

int locate_leaf(const DiscretizationTree& tree, const Point& x) {
  const Box& dom = tree.domain;
  for (int k = 0; k < tree.dim; ++k)
    require(x[k] >= dom.lo[k] && x[k] <= dom.hi[k], "evaluate_at: point outside the domain");
  int id = 0;
  while (!tree.nodes[id].is_leaf()) {
    const TreeNode& n = tree.nodes[id];
    const Point mid = 0.5 * (n.box.lo + n.box.hi);
    const int o1 = x[0] >= mid[0] ? 1 : 0;
    const int o2 = x[1] >= mid[1] ? 1 : 0;
    const int o3 = (tree.dim == 3 && x[2] >= mid[2]) ? 1 : 0;
    id = n.child[child_slot_from_offset(o1, o2, o3)];
  }
  return id;
}

namespace {

// barycentric weights for the Chebyshev--Lobatto grid
VecR cheb_bary_weights(int p) {
  VecR w(p);
  for (int k = 0; k < p; ++k) {
    w[k] = (k % 2 == 0) ? 1.0 : -1.0;
    if (k == 0 || k == p - 1) w[k] *= 0.5;
  }
  return w;
}

// evaluation weights of the 1D interpolant at reference coordinate t
VecR bary_eval_weights(const VecR& nodes, const VecR& bw, double t) {
  const int p = static_cast<int>(nodes.size());
  VecR out = VecR::Zero(p);
  for (int k = 0; k < p; ++k)
    if (t == nodes[k]) {
      out[k] = 1.0;
      return out;
    }
  double denom = 0.0;
  for (int k = 0; k < p; ++k) denom += bw[k] / (t - nodes[k]);
  for (int k = 0; k < p; ++k) out[k] = (bw[k] / (t - nodes[k])) / denom;
  return out;
}

}  // namespace

template <class S>
Vec<S> evaluate_at(const SolutionField<S>& field, const std::vector<Point>& points) {
  const DiscretizationTree& tree = *field.tree;
  const int p = tree.p;
  const VecR nodes = cheb_lobatto_1d(p);
  const VecR bw = cheb_bary_weights(p);
  Vec<S> out(points.size());

  std::vector<int> ord_of_leaf(tree.nodes.size(), -1);
  for (int i = 0; i < tree.n_leaves(); ++i) ord_of_leaf[tree.leaves[i]] = i;

  for (size_t ip = 0; ip < points.size(); ++ip) {
    const Point& x = points[ip];
    const int id = locate_leaf(tree, x);
    const TreeNode& leaf = tree.nodes[id];
    const Vec<S>& u = field.u[ord_of_leaf[id]];
    double t[3];
    for (int k = 0; k < tree.dim; ++k)
      t[k] = (2.0 * x[k] - leaf.box.lo[k] - leaf.box.hi[k]) / (leaf.box.hi[k] - leaf.box.lo[k]);
    const VecR w1 = bary_eval_weights(nodes, bw, t[0]);
    const VecR w2 = bary_eval_weights(nodes, bw, t[1]);
    if (tree.dim == 2) {
      S acc = S(0);
      for (int i1 = 0; i1 < p; ++i1) {
        if (w1[i1] == 0.0) continue;
        S inner = S(0);
        for (int i2 = 0; i2 < p; ++i2) inner += S(w2[i2]) * u[i1 * p + i2];
        acc += S(w1[i1]) * inner;
      }
      out[ip] = acc;
    } else {
      const VecR w3 = bary_eval_weights(nodes, bw, t[2]);
      S acc = S(0);
      for (int i1 = 0; i1 < p; ++i1) {
        if (w1[i1] == 0.0) continue;
        S mid = S(0);
        for (int i2 = 0; i2 < p; ++i2) {
          if (w2[i2] == 0.0) continue;
          S inner = S(0);
          for (int i3 = 0; i3 < p; ++i3) inner += S(w3[i3]) * u[(i1 * p + i2) * p + i3];
          mid += S(w2[i2]) * inner;
        }
        acc += S(w1[i1]) * mid;
      }
      out[ip] = acc;
    }
  }
  return out;
}

template <class S>
void dump_solution(const SolutionField<S>& field, const std::string& json_path,
                   const std::string& bin_path, const std::string& tree_ref) {
  const DiscretizationTree& tree = *field.tree;
  const int leaf_len = static_cast<int>(field.u.empty() ? 0 : field.u[0].size());
  nlohmann::json j;
  j["tree_ref"] = tree_ref;
  j["dtype"] = scalar_traits<S>::is_complex ? "complex128" : "float64";
  j["leaf_len"] = leaf_len;
  j["n_leaves"] = tree.n_leaves();

  const std::string tmp = bin_path + ".tmp";
  {
    std::ofstream os(tmp, std::ios::binary);
    require(os.good(), "dump_solution: cannot write " + tmp);
    for (const auto& u : field.u) {
      if constexpr (scalar_traits<S>::is_complex) {
        for (Eigen::Index i = 0; i < u.size(); ++i) {
          const double re = u[i].real(), im = u[i].imag();
          os.write(reinterpret_cast<const char*>(&re), sizeof(double));
          os.write(reinterpret_cast<const char*>(&im), sizeof(double));
        }
      } else {
        os.write(reinterpret_cast<const char*>(u.data()), u.size() * sizeof(double));
      }
    }
  }
  std::rename(tmp.c_str(), bin_path.c_str());
  const std::string jtmp = json_path + ".tmp";
  {
    std::ofstream os(jtmp);
    require(os.good(), "dump_solution: cannot write " + jtmp);
    os << j.dump(1) << "\n";
  }
  std::rename(jtmp.c_str(), json_path.c_str());
}

template Vec<Real> evaluate_at<Real>(const SolutionField<Real>&, const std::vector<Point>&);
template Vec<Complex> evaluate_at<Complex>(const SolutionField<Complex>&, const std::vector<Point>&);
template void dump_solution<Real>(const SolutionField<Real>&, const std::string&, const std::string&,
                                  const std::string&);
template void dump_solution<Complex>(const SolutionField<Complex>&, const std::string&,
                                     const std::string&, const std::string&);

}  // namespace hps
