// Copyright (c) 2026 the hpsolve authors. All rights reserved.
// SPDX-License-Identifier: Apache-2.0

#include "hps/spectral.hpp"

#include <cmath>
#include <map>
#include <memory>
#include <mutex>
#include <tuple>

namespace hps {

VecR cheb_lobatto_1d(int p) {
  require(p >= 2, "cheb_lobatto_1d: p must be >= 2");
  const int n = p - 1;
  VecR x(p);
  for (int k = 0; k <= n / 2; ++k) {
    // sin form keeps the grid exactly antisymmetric and hits 0 exactly
    const double v = std::sin(M_PI * (n - 2 * k) / (2.0 * n));
    x[k] = v;
    x[n - k] = -v;
  }
  if (n % 2 == 0) x[n / 2] = 0.0;
  return x;
}

VecR cheb_lobatto_weights(int p) {
  // Clenshaw--Curtis weights on [-1,1] for the descending Lobatto grid.
  const int n = p - 1;
  VecR w = VecR::Zero(p);
  if (n == 0) fail("cheb_lobatto_weights: p must be >= 2");
  if (n == 1) {
    w[0] = w[1] = 1.0;
    return w;
  }
  const double endw = (n % 2 == 0) ? 1.0 / (n * n - 1.0) : 1.0 / (n * n);
  w[0] = endw;
  w[n] = endw;
  for (int j = 1; j < n; ++j) {
    const double theta = M_PI * j / n;
    double v = 1.0;
    for (int k = 1; k <= (n % 2 == 0 ? n / 2 - 1 : (n - 1) / 2); ++k)
      v -= 2.0 * std::cos(2.0 * k * theta) / (4.0 * k * k - 1.0);
    if (n % 2 == 0) v -= std::cos(n * theta) / (n * n - 1.0);
    w[j] = 2.0 * v / n;
  }
  return w;
}

GaussRule gauss_legendre_1d(int q) {
  require(q >= 1, "gauss_legendre_1d: q must be >= 1");
  GaussRule r;
  r.nodes.resize(q);
  r.weights.resize(q);
  for (int i = 0; i < (q + 1) / 2; ++i) {
    // Newton on P_q with the usual Chebyshev-based initial guess
    double x = std::cos(M_PI * (i + 0.75) / (q + 0.5));
    double pp = 0.0;
    for (int it = 0; it < 100; ++it) {
      double p0 = 1.0, p1 = x;
      if (q == 1) p1 = x;
      for (int k = 2; k <= q; ++k) {
        const double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
      }
      const double pq = (q == 1) ? x : p1;
      pp = q * (x * pq - p0) / (x * x - 1.0);
      if (q == 1) pp = 1.0;
      const double dx = pq / pp;
      x -= dx;
      if (std::abs(dx) < 1e-15) break;
    }
    if (q == 1) x = 0.0;
    const double wgt = (q == 1) ? 2.0 : 2.0 / ((1.0 - x * x) * pp * pp);
    // store ascending: the Newton guess gives descending roots
    r.nodes[i] = -x;
    r.nodes[q - 1 - i] = x;
    r.weights[i] = wgt;
    r.weights[q - 1 - i] = wgt;
  }
  if (q % 2 == 1) r.nodes[q / 2] = 0.0;
  return r;
}

MatR cheb_diff_matrix(int p) {
  require(p >= 2, "cheb_diff_matrix: p must be >= 2");
  const VecR x = cheb_lobatto_1d(p);
  MatR d(p, p);
  auto c = [&](int i) { return (i == 0 || i == p - 1) ? 2.0 : 1.0; };
  for (int i = 0; i < p; ++i) {
    double rowsum = 0.0;
    for (int j = 0; j < p; ++j) {
      if (i == j) continue;
      const double sgn = ((i + j) % 2 == 0) ? 1.0 : -1.0;
      d(i, j) = (c(i) / c(j)) * sgn / (x[i] - x[j]);
      rowsum += d(i, j);
    }
    d(i, i) = -rowsum;  // negative-sum trick
  }
  return d;
}

MatR barycentric_interp_matrix(const VecR& src, const VecR& dst) {
  const int n = static_cast<int>(src.size());
  const int m = static_cast<int>(dst.size());
  require(n >= 1, "barycentric_interp_matrix: empty source grid");
  VecR w(n);
  for (int j = 0; j < n; ++j) {
    double prod = 1.0;
    for (int k = 0; k < n; ++k) {
      if (k == j) continue;
      const double diff = src[j] - src[k];
      require(diff != 0.0, "barycentric_interp_matrix: coincident source nodes");
      prod *= diff;
    }
    w[j] = 1.0 / prod;
  }
  MatR out = MatR::Zero(m, n);
  for (int i = 0; i < m; ++i) {
    int hit = -1;
    for (int j = 0; j < n; ++j)
      if (dst[i] == src[j]) {
        hit = j;
        break;
      }
    if (hit >= 0) {
      out(i, hit) = 1.0;
      continue;
    }
    double denom = 0.0;
    for (int j = 0; j < n; ++j) denom += w[j] / (dst[i] - src[j]);
    for (int j = 0; j < n; ++j) out(i, j) = (w[j] / (dst[i] - src[j])) / denom;
  }
  return out;
}

IndexSets leaf_index_sets(int p, int dim) {
  IndexSets s;
  if (dim == 2) {
    for (int i1 = 0; i1 < p; ++i1)
      for (int i2 = 0; i2 < p; ++i2) {
        const int idx = i1 * p + i2;
        const bool bnd = i1 == 0 || i1 == p - 1 || i2 == 0 || i2 == p - 1;
        (bnd ? s.exterior : s.interior).push_back(idx);
      }
  } else if (dim == 3) {
    for (int i1 = 0; i1 < p; ++i1)
      for (int i2 = 0; i2 < p; ++i2)
        for (int i3 = 0; i3 < p; ++i3) {
          const int idx = (i1 * p + i2) * p + i3;
          const bool bnd = i1 == 0 || i1 == p - 1 || i2 == 0 || i2 == p - 1 || i3 == 0 || i3 == p - 1;
          (bnd ? s.exterior : s.interior).push_back(idx);
        }
  } else {
    fail("leaf_index_sets: dim must be 2 or 3");
  }
  return s;
}

MatR kron(const MatR& a, const MatR& b) {
  MatR out(a.rows() * b.rows(), a.cols() * b.cols());
  for (Eigen::Index i = 0; i < a.rows(); ++i)
    for (Eigen::Index j = 0; j < a.cols(); ++j)
      out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
  return out;
}

namespace {

// 2D side bookkeeping. Sides ordered (S, E, N, W); points along a side are
// enumerated in ascending coordinate.
struct Side2d {
  int axis;        // axis of the outward normal
  double sign;     // outward normal sign
  int fixed_node;  // tensor node index on the fixed axis
};

Side2d side2d(int s, int p) {
  // node 0 carries coordinate +1, node p-1 carries -1
  switch (s) {
    case 0: return {1, -1.0, p - 1};  // S: x2 = -1
    case 1: return {0, +1.0, 0};      // E: x1 = +1
    case 2: return {1, +1.0, 0};      // N: x2 = +1
    default: return {0, -1.0, p - 1}; // W: x1 = -1
  }
}

int tensor2d(int i1, int i2, int p) { return i1 * p + i2; }

// tensor indices of side s in ascending coordinate order
std::vector<int> side_points_2d(int s, int p) {
  std::vector<int> pts(p);
  const Side2d sd = side2d(s, p);
  for (int r = 0; r < p; ++r) {
    const int run = p - 1 - r;  // ascending coordinate = descending node index
    pts[r] = (sd.axis == 0) ? tensor2d(sd.fixed_node, run, p) : tensor2d(run, sd.fixed_node, p);
  }
  return pts;
}

// normal-derivative row of side s at running node index `run` (unscaled)
void normal_row_2d(int s, int run, int p, const MatR& d1, MatR& mat, int row) {
  const Side2d sd = side2d(s, p);
  for (int k = 0; k < p; ++k) {
    const int col = (sd.axis == 0) ? tensor2d(k, run, p) : tensor2d(run, k, p);
    mat(row, col) += sd.sign * d1(sd.fixed_node, k);
  }
}

// ItI boundary walk: (side, running node index) pairs covering the 4p-4
// boundary Chebyshev points once, corners owned by the side that starts there.
std::vector<std::pair<int, int>> iti_walk(int p) {
  std::vector<std::pair<int, int>> w;
  w.reserve(4 * (p - 1));
  for (int i1 = p - 1; i1 >= 1; --i1) w.emplace_back(0, i1);  // S ascending x, drop SE
  for (int i2 = p - 1; i2 >= 1; --i2) w.emplace_back(1, i2);  // E ascending y, drop NE
  for (int i1 = 0; i1 <= p - 2; ++i1) w.emplace_back(2, i1);  // N descending x, drop NW
  for (int i2 = 0; i2 <= p - 2; ++i2) w.emplace_back(3, i2);  // W descending y, drop SW
  return w;
}

int walk_tensor_idx(int side, int run, int p) {
  const Side2d sd = side2d(side, p);
  return (sd.axis == 0) ? tensor2d(sd.fixed_node, run, p) : tensor2d(run, sd.fixed_node, p);
}

// 3D face bookkeeping. Faces ordered (-x1,+x1,-x2,+x2,-x3,+x3); points on a
// face are enumerated u-major, v fastest, both ascending, with (u,v) the two
// free axes in increasing order.
struct Face3d {
  int axis;
  double sign;
  int fixed_node;
  int ua, va;  // free axes
};

Face3d face3d(int f, int p) {
  const int axis = f / 2;
  const double sign = (f % 2 == 0) ? -1.0 : 1.0;
  const int fixed_node = (f % 2 == 0) ? p - 1 : 0;
  int ua = (axis == 0) ? 1 : 0;
  int va = (axis == 2) ? 1 : 2;
  return {axis, sign, fixed_node, ua, va};
}

int tensor3d(int i1, int i2, int i3, int p) { return (i1 * p + i2) * p + i3; }

int face_tensor_idx(const Face3d& fc, int nu, int nv, int p) {
  int idx[3];
  idx[fc.axis] = fc.fixed_node;
  idx[fc.ua] = nu;
  idx[fc.va] = nv;
  return tensor3d(idx[0], idx[1], idx[2], p);
}

}  // namespace

LeafOperatorSet assemble_dtn_ops_2d(int p, int q, double side) {
  require(q == p - 2, "assemble_dtn_ops_2d: requires q = p-2");
  LeafOperatorSet ops;
  ops.dim = 2;
  ops.p = p;
  ops.q = q;
  ops.side = side;
  ops.idx = leaf_index_sets(p, 2);

  const VecR cn = cheb_lobatto_1d(p);
  const GaussRule gr = gauss_legendre_1d(q);
  const MatR d1 = cheb_diff_matrix(p);
  const double dscale = 2.0 / side;

  // ascending-coordinate Chebyshev nodes for per-side interpolation
  VecR cheb_asc = cn.reverse();
  const MatR cheb_to_gauss = barycentric_interp_matrix(cheb_asc, gr.nodes);

  // P: rows in exterior-index order; corner rows average both adjoining sides
  const int ne = static_cast<int>(ops.idx.exterior.size());
  ops.P = MatR::Zero(ne, 4 * q);
  for (int r = 0; r < ne; ++r) {
    const int idx = ops.idx.exterior[r];
    const int i1 = idx / p, i2 = idx % p;
    std::vector<int> owners;
    if (i2 == p - 1) owners.push_back(0);
    if (i1 == 0) owners.push_back(1);
    if (i2 == 0) owners.push_back(2);
    if (i1 == p - 1) owners.push_back(3);
    const double wgt = 1.0 / owners.size();
    for (int s : owners) {
      const Side2d sd = side2d(s, p);
      const double t = (sd.axis == 0) ? cn[i2] : cn[i1];
      VecR tv(1);
      tv[0] = t;
      const MatR row = barycentric_interp_matrix(gr.nodes, tv);
      ops.P.block(r, s * q, 1, q) += wgt * row;
    }
  }

  // Q: per-side normal derivative at the Chebyshev points, then interpolation
  // to the Gauss panel
  ops.Q = MatR::Zero(4 * q, p * p);
  MatR nside(p, p * p);
  for (int s = 0; s < 4; ++s) {
    nside.setZero();
    for (int r = 0; r < p; ++r) normal_row_2d(s, p - 1 - r, p, d1, nside, r);
    ops.Q.block(s * q, 0, q, p * p) = dscale * (cheb_to_gauss * nside);
  }
  return ops;
}

LeafOperatorSet assemble_iti_ops_2d(int p, int q, double eta, double side) {
  require(q == p - 2, "assemble_iti_ops_2d: requires q = p-2");
  require(eta > 0.0, "assemble_iti_ops_2d: eta must be positive");
  LeafOperatorSet ops;
  ops.dim = 2;
  ops.p = p;
  ops.q = q;
  ops.side = side;
  ops.eta = eta;
  ops.idx = leaf_index_sets(p, 2);

  const VecR cn = cheb_lobatto_1d(p);
  const GaussRule gr = gauss_legendre_1d(q);
  const MatR d1 = cheb_diff_matrix(p);
  const double dscale = 2.0 / side;
  const Complex ii(0.0, 1.0);

  VecR cheb_asc = cn.reverse();
  const MatR cheb_to_gauss = barycentric_interp_matrix(cheb_asc, gr.nodes);

  // N and the matching sampling operator: 4p rows, per side ascending, corners
  // appearing once per adjoining side
  ops.N = MatR::Zero(4 * p, p * p);
  MatR samp_full = MatR::Zero(4 * p, p * p);
  for (int s = 0; s < 4; ++s)
    for (int r = 0; r < p; ++r) {
      const int run = p - 1 - r;
      normal_row_2d(s, run, p, d1, ops.N, s * p + r);
      samp_full(s * p + r, walk_tensor_idx(s, run, p)) = 1.0;
    }
  ops.N *= dscale;
  ops.H = ops.N.cast<Complex>() - ii * eta * samp_full.cast<Complex>();

  // Ntilde/G/P on the 4p-4 walk layout
  const auto walk = iti_walk(p);
  const int nw = static_cast<int>(walk.size());
  ops.Ntilde = MatR::Zero(nw, p * p);
  MatR samp_walk = MatR::Zero(nw, p * p);
  ops.P = MatR::Zero(nw, 4 * q);
  for (int r = 0; r < nw; ++r) {
    const auto [s, run] = walk[r];
    normal_row_2d(s, run, p, d1, ops.Ntilde, r);
    samp_walk(r, walk_tensor_idx(s, run, p)) = 1.0;
    VecR tv(1);
    tv[0] = cn[run];
    ops.P.block(r, s * q, 1, q) = barycentric_interp_matrix(gr.nodes, tv);
  }
  ops.Ntilde *= dscale;
  ops.G = ops.Ntilde.cast<Complex>() + ii * eta * samp_walk.cast<Complex>();

  // Q: block-diagonal per-side Chebyshev -> Gauss interpolation on the
  // double-counted 4p layout
  ops.Q = MatR::Zero(4 * q, 4 * p);
  for (int s = 0; s < 4; ++s) ops.Q.block(s * q, s * p, q, p) = cheb_to_gauss;
  ops.QH = ops.Q.cast<Complex>() * ops.H;
  return ops;
}

LeafOperatorSet assemble_dtn_ops_3d(int p, int q, double side) {
  require(q == p - 2, "assemble_dtn_ops_3d: requires q = p-2");
  LeafOperatorSet ops;
  ops.dim = 3;
  ops.p = p;
  ops.q = q;
  ops.side = side;
  ops.idx = leaf_index_sets(p, 3);

  const VecR cn = cheb_lobatto_1d(p);
  const GaussRule gr = gauss_legendre_1d(q);
  const MatR d1 = cheb_diff_matrix(p);
  const double dscale = 2.0 / side;
  const int pp = p * p * p;

  VecR cheb_asc = cn.reverse();
  const MatR c2g = barycentric_interp_matrix(cheb_asc, gr.nodes);

  // P in exterior-index order; rows on edges/corners average 2/3 faces
  const int ne = static_cast<int>(ops.idx.exterior.size());
  ops.P = MatR::Zero(ne, 6 * q * q);
  for (int r = 0; r < ne; ++r) {
    const int idx = ops.idx.exterior[r];
    const int i1 = idx / (p * p), i2 = (idx / p) % p, i3 = idx % p;
    const int ijk[3] = {i1, i2, i3};
    std::vector<int> owners;
    for (int a = 0; a < 3; ++a) {
      if (ijk[a] == p - 1) owners.push_back(2 * a);      // low face
      if (ijk[a] == 0) owners.push_back(2 * a + 1);      // high face
    }
    const double wgt = 1.0 / owners.size();
    for (int f : owners) {
      const Face3d fc = face3d(f, p);
      VecR tu(1), tvv(1);
      tu[0] = cn[ijk[fc.ua]];
      tvv[0] = cn[ijk[fc.va]];
      const MatR ru = barycentric_interp_matrix(gr.nodes, tu);
      const MatR rv = barycentric_interp_matrix(gr.nodes, tvv);
      for (int a = 0; a < q; ++a)
        for (int b = 0; b < q; ++b)
          ops.P(r, f * q * q + a * q + b) += wgt * ru(0, a) * rv(0, b);
    }
  }

  // Q: per-face normal derivative then tensor interpolation to the Gauss panel
  ops.Q = MatR::Zero(6 * q * q, pp);
  const MatR face_interp = kron(c2g, c2g);  // (q^2) x (p^2), u-major both sides
  MatR nface(p * p, pp);
  for (int f = 0; f < 6; ++f) {
    const Face3d fc = face3d(f, p);
    nface.setZero();
    for (int ru = 0; ru < p; ++ru)
      for (int rv = 0; rv < p; ++rv) {
        const int nu = p - 1 - ru, nv = p - 1 - rv;  // ascending coordinates
        const int row = ru * p + rv;
        for (int k = 0; k < p; ++k) {
          int idx[3];
          idx[fc.axis] = k;
          idx[fc.ua] = nu;
          idx[fc.va] = nv;
          nface(row, tensor3d(idx[0], idx[1], idx[2], p)) += fc.sign * d1(fc.fixed_node, k);
        }
      }
    ops.Q.block(f * q * q, 0, q * q, pp) = dscale * (face_interp * nface);
  }
  return ops;
}

MatR refinement_interpolant(int p) {
  require(p >= 2, "refinement_interpolant: p must be >= 2");
  const VecR cn = cheb_lobatto_1d(p);
  VecR lo = (cn.array() - 1.0) / 2.0;
  VecR hi = (cn.array() + 1.0) / 2.0;
  MatR e[2] = {barycentric_interp_matrix(cn, lo), barycentric_interp_matrix(cn, hi)};
  // octant order: (a..h) = (0,0,0),(1,0,0),(1,1,0),(0,1,0) then the same with o3=1
  static const int off[8][3] = {{0, 0, 0}, {1, 0, 0}, {1, 1, 0}, {0, 1, 0},
                                {0, 0, 1}, {1, 0, 1}, {1, 1, 1}, {0, 1, 1}};
  const int pc = p * p * p;
  MatR out(8 * pc, pc);
  for (int c = 0; c < 8; ++c)
    out.middleRows(c * pc, pc) = kron(e[off[c][0]], kron(e[off[c][1]], e[off[c][2]]));
  return out;
}

FaceProjection face_projection_ops(int q) {
  require(q >= 1, "face_projection_ops: q must be >= 1");
  const GaussRule gr = gauss_legendre_1d(q);
  VecR lo = (gr.nodes.array() - 1.0) / 2.0;
  VecR hi = (gr.nodes.array() + 1.0) / 2.0;
  MatR r1[2] = {barycentric_interp_matrix(gr.nodes, lo), barycentric_interp_matrix(gr.nodes, hi)};

  FaceProjection fp;
  const int qq = q * q;
  fp.refine = MatR::Zero(4 * qq, qq);
  for (int hu = 0; hu < 2; ++hu)
    for (int hv = 0; hv < 2; ++hv)
      fp.refine.middleRows((hu * 2 + hv) * qq, qq) = kron(r1[hu], r1[hv]);

  fp.coarsen = MatR::Zero(qq, 4 * qq);
  for (int iu = 0; iu < q; ++iu)
    for (int iv = 0; iv < q; ++iv) {
      const int hu = gr.nodes[iu] > 0.0 ? 1 : 0;
      const int hv = gr.nodes[iv] > 0.0 ? 1 : 0;
      VecR tu(1), tv(1);
      tu[0] = gr.nodes[iu];
      tv[0] = gr.nodes[iv];
      const MatR ru = barycentric_interp_matrix(hu ? hi : lo, tu);
      const MatR rv = barycentric_interp_matrix(hv ? hi : lo, tv);
      for (int a = 0; a < q; ++a)
        for (int b = 0; b < q; ++b)
          fp.coarsen(iu * q + iv, (hu * 2 + hv) * qq + a * q + b) = ru(0, a) * rv(0, b);
    }
  return fp;
}

const LeafOperatorSet& leaf_ops_cache(Variant v, int dim, int p, int q, double eta, double side) {
  using Key = std::tuple<int, int, int, int, double, double>;
  static std::map<Key, std::unique_ptr<LeafOperatorSet>> cache;
  static std::mutex mu;
  const Key key{static_cast<int>(v), dim, p, q, eta, side};
  std::lock_guard<std::mutex> lock(mu);
  auto it = cache.find(key);
  if (it != cache.end()) return *it->second;
  std::unique_ptr<LeafOperatorSet> ops;
  if (v == Variant::dtn && dim == 2)
    ops = std::make_unique<LeafOperatorSet>(assemble_dtn_ops_2d(p, q, side));
  else if (v == Variant::dtn && dim == 3)
    ops = std::make_unique<LeafOperatorSet>(assemble_dtn_ops_3d(p, q, side));
  else if (v == Variant::iti && dim == 2)
    ops = std::make_unique<LeafOperatorSet>(assemble_iti_ops_2d(p, q, eta, side));
  else
    fail("leaf_ops_cache: ItI operators are 2D only");
  auto& ref = *ops;
  cache.emplace(key, std::move(ops));
  return ref;
}

}  // namespace hps
