// Copyright (c) 2026 the hpsolve authors. All rights reserved.
// SPDX-License-Identifier: Apache-2.0

#include <doctest.h>

#include <cmath>

#include "hps/mesh.hpp"
#include "hps/spectral.hpp"

using namespace hps;

TEST_CASE("Chebyshev-Lobatto nodes") {
  const VecR x2 = cheb_lobatto_1d(2);
  CHECK(x2[0] == 1.0);
  CHECK(x2[1] == -1.0);

  const VecR x3 = cheb_lobatto_1d(3);
  CHECK(x3[0] == 1.0);
  CHECK(x3[1] == 0.0);
  CHECK(x3[2] == -1.0);

  // closed form cos(k pi/4), checked against long-double cosine
  const VecR x5 = cheb_lobatto_1d(5);
  for (int k = 0; k < 5; ++k) {
    const long double ref = cosl(M_PIl * k / 4.0L);
    CHECK(std::abs(x5[k] - double(ref)) < 1e-15);
  }
  CHECK(x5[1] == doctest::Approx(std::sqrt(2.0) / 2.0).epsilon(1e-15));
}

TEST_CASE("Clenshaw-Curtis weights integrate polynomials") {
  for (int p : {2, 5, 8, 13, 16}) {
    const VecR x = cheb_lobatto_1d(p);
    const VecR w = cheb_lobatto_weights(p);
    for (int deg = 0; deg <= p - 1; ++deg) {
      double q = 0.0;
      for (int i = 0; i < p; ++i) q += w[i] * std::pow(x[i], deg);
      const double exact = (deg % 2 == 0) ? 2.0 / (deg + 1) : 0.0;
      CHECK(std::abs(q - exact) < 1e-13);
    }
  }
}

TEST_CASE("Gauss-Legendre rules") {
  const GaussRule g1 = gauss_legendre_1d(1);
  CHECK(g1.nodes[0] == 0.0);
  CHECK(g1.weights[0] == doctest::Approx(2.0).epsilon(1e-15));

  const GaussRule g2 = gauss_legendre_1d(2);
  CHECK(g2.nodes[0] == doctest::Approx(-1.0 / std::sqrt(3.0)).epsilon(1e-15));
  CHECK(g2.nodes[1] == doctest::Approx(1.0 / std::sqrt(3.0)).epsilon(1e-15));
  CHECK(g2.weights[0] == doctest::Approx(1.0).epsilon(1e-14));

  // degree-10 exactness at q=6
  const GaussRule g6 = gauss_legendre_1d(6);
  double q = 0.0;
  for (int i = 0; i < 6; ++i) q += g6.weights[i] * std::pow(g6.nodes[i], 10);
  CHECK(std::abs(q - 2.0 / 11.0) < 1e-14);

  for (int n : {1, 2, 3, 6, 10, 14}) {
    const GaussRule g = gauss_legendre_1d(n);
    CHECK(std::abs(g.weights.sum() - 2.0) < 1e-14);
    for (int i = 0; i < n; ++i) {
      CHECK(g.weights[i] > 0.0);
      CHECK(g.nodes[i] == doctest::Approx(-g.nodes[n - 1 - i]).epsilon(1e-14));
    }
  }
}

TEST_CASE("Chebyshev differentiation matrix") {
  const MatR d2 = cheb_diff_matrix(2);
  CHECK(d2(0, 0) == doctest::Approx(0.5).epsilon(1e-15));
  CHECK(d2(0, 1) == doctest::Approx(-0.5).epsilon(1e-15));
  CHECK(d2(1, 0) == doctest::Approx(0.5).epsilon(1e-15));
  CHECK(d2(1, 1) == doctest::Approx(-0.5).epsilon(1e-15));

  // constants map to zero
  const MatR d8 = cheb_diff_matrix(8);
  CHECK((d8 * VecR::Ones(8)).cwiseAbs().maxCoeff() < 1e-13);

  // x^3 -> 3x^2 at p=5
  const VecR x = cheb_lobatto_1d(5);
  const MatR d5 = cheb_diff_matrix(5);
  const VecR got = d5 * x.array().cube().matrix();
  for (int i = 0; i < 5; ++i) CHECK(std::abs(got[i] - 3.0 * x[i] * x[i]) < 1e-13);

  // exactness for all monomials through p-1
  for (int p : {6, 10, 16}) {
    const VecR xs = cheb_lobatto_1d(p);
    const MatR d = cheb_diff_matrix(p);
    for (int k = 1; k < p; ++k) {
      const VecR u = xs.array().pow(k).matrix();
      const VecR du = d * u;
      for (int i = 0; i < p; ++i)
        CHECK(std::abs(du[i] - k * std::pow(xs[i], k - 1)) < 1e-10);
    }
  }
}

TEST_CASE("barycentric interpolation matrix") {
  const VecR x = cheb_lobatto_1d(7);
  const MatR id = barycentric_interp_matrix(x, x);
  CHECK((id - MatR::Identity(7, 7)).cwiseAbs().maxCoeff() == 0.0);

  const GaussRule g = gauss_legendre_1d(6);
  const VecR c8 = cheb_lobatto_1d(8);
  const MatR m = barycentric_interp_matrix(g.nodes, c8);
  // rows sum to one
  CHECK((m.rowwise().sum() - VecR::Ones(8)).cwiseAbs().maxCoeff() < 1e-13);
  // x^5 interpolates exactly from 6 Gauss nodes
  const VecR src = g.nodes.array().pow(5).matrix();
  const VecR dst = m * src;
  for (int i = 0; i < 8; ++i) CHECK(std::abs(dst[i] - std::pow(c8[i], 5)) < 1e-13);

  VecR bad(2);
  bad << 0.5, 0.5;
  CHECK_THROWS_AS(barycentric_interp_matrix(bad, c8), Error);
}

TEST_CASE("2D DtN leaf operators") {
  const int p = 8, q = 6;
  const LeafOperatorSet ops = assemble_dtn_ops_2d(p, q, 2.0);
  CHECK(ops.P.rows() == 4 * p - 4);
  CHECK(ops.P.cols() == 4 * q);
  CHECK(ops.Q.rows() == 4 * q);
  CHECK(ops.Q.cols() == p * p);

  // P reproduces constants
  CHECK((ops.P * VecR::Ones(4 * q) - VecR::Ones(4 * p - 4)).cwiseAbs().maxCoeff() < 1e-13);
  // interpolation rows sum to one
  CHECK((ops.P.rowwise().sum() - VecR::Ones(4 * p - 4)).cwiseAbs().maxCoeff() < 1e-13);

  // Q on u = x1: +1 on east, -1 on west, 0 on north/south
  const auto pts = leaf_cheb_points(Box{Point(-1, -1, 0), Point(1, 1, 0)}, p, 2);
  VecR u(p * p);
  for (int i = 0; i < p * p; ++i) u[i] = pts[i][0];
  const VecR qn = ops.Q * u;
  for (int i = 0; i < q; ++i) {
    CHECK(std::abs(qn[0 * q + i] - 0.0) < 1e-12);   // S
    CHECK(std::abs(qn[1 * q + i] - 1.0) < 1e-12);   // E
    CHECK(std::abs(qn[2 * q + i] - 0.0) < 1e-12);   // N
    CHECK(std::abs(qn[3 * q + i] + 1.0) < 1e-12);   // W
  }

  // degree-3 polynomial: u = x^3 + x*y^2 - 2*y^3, hand-computed normals
  VecR u3(p * p);
  for (int i = 0; i < p * p; ++i) {
    const double x = pts[i][0], y = pts[i][1];
    u3[i] = x * x * x + x * y * y - 2.0 * y * y * y;
  }
  auto ux = [](double x, double y) { return 3.0 * x * x + y * y; };
  auto uy = [](double x, double y) { return 2.0 * x * y - 6.0 * y * y; };
  const VecR q3 = ops.Q * u3;
  const auto gp = leaf_gauss_boundary_points(Box{Point(-1, -1, 0), Point(1, 1, 0)}, q, 2);
  for (int s = 0; s < 4; ++s)
    for (int i = 0; i < q; ++i) {
      const double x = gp[s * q + i][0], y = gp[s * q + i][1];
      double expect = 0.0;
      if (s == 0) expect = -uy(x, y);
      if (s == 1) expect = ux(x, y);
      if (s == 2) expect = uy(x, y);
      if (s == 3) expect = -ux(x, y);
      CHECK(std::abs(q3[s * q + i] - expect) < 1e-12);
    }
}

TEST_CASE("2D ItI leaf operators") {
  const int p = 8, q = 6;
  const double eta = 2.5;
  const LeafOperatorSet ops = assemble_iti_ops_2d(p, q, eta, 2.0);
  CHECK(ops.P.rows() == 4 * p - 4);
  CHECK(ops.Q.rows() == 4 * q);
  CHECK(ops.Q.cols() == 4 * p);
  CHECK(ops.N.rows() == 4 * p);
  CHECK(ops.Ntilde.rows() == 4 * p - 4);
  CHECK(ops.H.rows() == 4 * p);
  CHECK(ops.G.rows() == 4 * p - 4);

  const VecC ones = VecC::Ones(p * p);
  // G*1 = i*eta on all walk points (zero normal derivative)
  const VecC g1 = ops.G * ones;
  for (int i = 0; i < 4 * p - 4; ++i) CHECK(std::abs(g1[i] - Complex(0, eta)) < 1e-12);
  // H*1 = -i*eta on all 4p points
  const VecC h1 = ops.H * ones;
  for (int i = 0; i < 4 * p; ++i) CHECK(std::abs(h1[i] - Complex(0, -eta)) < 1e-12);

  // u = x1: east rows of H equal 1 - i*eta*x1|_east = 1 - i*eta
  const auto pts = leaf_cheb_points(Box{Point(-1, -1, 0), Point(1, 1, 0)}, p, 2);
  VecC u(p * p);
  for (int i = 0; i < p * p; ++i) u[i] = pts[i][0];
  const VecC hu = ops.H * u;
  for (int i = 0; i < p; ++i) CHECK(std::abs(hu[1 * p + i] - Complex(1.0, -eta)) < 1e-11);

  // H - N and G - Ntilde are exactly the +-i*eta sampling operators
  const MatC hn = ops.H - ops.N.cast<Complex>();
  CHECK(hn.real().cwiseAbs().maxCoeff() == 0.0);
  const MatC gn = ops.G - ops.Ntilde.cast<Complex>();
  CHECK(gn.real().cwiseAbs().maxCoeff() == 0.0);
  CHECK((hn.imag().array().abs() > 0).count() == 4 * p);
  CHECK((gn.imag().array().abs() > 0).count() == 4 * p - 4);
}

TEST_CASE("3D DtN leaf operators") {
  const int p = 8, q = 6;
  const LeafOperatorSet ops = assemble_dtn_ops_3d(p, q, 2.0);
  CHECK(ops.P.rows() == 296);  // p^3 - (p-2)^3
  CHECK(ops.P.cols() == 216);  // 6 q^2
  CHECK(ops.Q.rows() == 216);
  CHECK(ops.Q.cols() == 512);

  CHECK((ops.P * VecR::Ones(216) - VecR::Ones(296)).cwiseAbs().maxCoeff() < 1e-12);
  CHECK((ops.Q * VecR::Ones(512)).cwiseAbs().maxCoeff() < 1e-11);

  // u = x3: -1 on the -x3 face, +1 on +x3, 0 elsewhere
  const auto pts = leaf_cheb_points(Box{Point(-1, -1, -1), Point(1, 1, 1)}, p, 3);
  VecR u(512);
  for (int i = 0; i < 512; ++i) u[i] = pts[i][2];
  const VecR qn = ops.Q * u;
  for (int f = 0; f < 6; ++f)
    for (int i = 0; i < q * q; ++i) {
      double expect = 0.0;
      if (f == 4) expect = -1.0;
      if (f == 5) expect = 1.0;
      CHECK(std::abs(qn[f * q * q + i] - expect) < 1e-11);
    }
}

TEST_CASE("refinement interpolant and face projections") {
  // constants are reproduced
  const int p = 4;
  const MatR l8 = refinement_interpolant(p);
  CHECK(l8.rows() == 8 * p * p * p);
  CHECK((l8 * VecR::Ones(p * p * p) - VecR::Ones(8 * p * p * p)).cwiseAbs().maxCoeff() < 1e-13);

  // trilinear x1*x2*x3 is exact at p=4
  const Box ref{Point(-1, -1, -1), Point(1, 1, 1)};
  const auto pts = leaf_cheb_points(ref, p, 3);
  VecR u(p * p * p);
  for (int i = 0; i < p * p * p; ++i) u[i] = pts[i][0] * pts[i][1] * pts[i][2];
  const VecR fine = l8 * u;
  int idx = 0;
  for (int c = 0; c < 8; ++c) {
    Box cb;
    const Point mid = 0.5 * (ref.lo + ref.hi);
    for (int k = 0; k < 3; ++k) {
      cb.lo[k] = child_offset[c][k] ? mid[k] : ref.lo[k];
      cb.hi[k] = child_offset[c][k] ? ref.hi[k] : mid[k];
    }
    for (const Point& x : leaf_cheb_points(cb, p, 3)) {
      CHECK(std::abs(fine[idx] - x[0] * x[1] * x[2]) < 1e-14);
      ++idx;
    }
  }

  const int q = 6;
  const FaceProjection fp = face_projection_ops(q);
  CHECK(fp.refine.rows() == 4 * q * q);
  CHECK(fp.coarsen.rows() == q * q);
  CHECK((fp.refine * VecR::Ones(q * q) - VecR::Ones(4 * q * q)).cwiseAbs().maxCoeff() < 1e-13);
  CHECK((fp.coarsen * VecR::Ones(4 * q * q) - VecR::Ones(q * q)).cwiseAbs().maxCoeff() < 1e-13);

  // coarse -> fine -> coarse is the identity on degree-(q-1) data
  const GaussRule g = gauss_legendre_1d(q);
  VecR data(q * q);
  for (int a = 0; a < q; ++a)
    for (int b = 0; b < q; ++b)
      data[a * q + b] = std::pow(g.nodes[a], q - 1) * std::pow(g.nodes[b], q - 2) + 0.25 * g.nodes[b];
  const VecR round = fp.coarsen * (fp.refine * data);
  CHECK((round - data).cwiseAbs().maxCoeff() < 1e-13);
}

TEST_CASE("leaf operator cache returns identical objects") {
  const LeafOperatorSet& a = leaf_ops_cache(Variant::dtn, 2, 8, 6, 0.0, 0.5);
  const LeafOperatorSet& b = leaf_ops_cache(Variant::dtn, 2, 8, 6, 0.0, 0.5);
  CHECK(&a == &b);
  const LeafOperatorSet& c = leaf_ops_cache(Variant::dtn, 2, 8, 6, 0.0, 0.25);
  CHECK(&a != &c);
}

TEST_CASE("row sums and polynomial exactness across orders") {
  for (int p : {6, 8, 12, 16}) {
    const int q = p - 2;
    const LeafOperatorSet ops = assemble_dtn_ops_2d(p, q, 2.0);
    CHECK((ops.P.rowwise().sum() - VecR::Ones(ops.P.rows())).cwiseAbs().maxCoeff() < 1e-13);
    // P applied to per-side samples of a degree-(q-1) polynomial matches the
    // boundary Chebyshev samples
    const GaussRule g = gauss_legendre_1d(q);
    auto poly = [&](double t) { return std::pow(t, q - 1) - 0.5 * t; };
    const Box ref{Point(-1, -1, 0), Point(1, 1, 0)};
    const auto gp = leaf_gauss_boundary_points(ref, q, 2);
    VecR src(4 * q);
    for (int i = 0; i < 4 * q; ++i) {
      const int s = i / q;
      const double t = (s == 0 || s == 2) ? gp[i][0] : gp[i][1];
      src[i] = poly(t);
    }
    const VecR dst = ops.P * src;
    const auto cpts = leaf_cheb_points(ref, p, 2);
    const IndexSets idx = leaf_index_sets(p, 2);
    for (size_t r = 0; r < idx.exterior.size(); ++r) {
      const Point& x = cpts[idx.exterior[r]];
      // corners average two sides, but the polynomial is the same on both
      const bool on_sn = std::abs(std::abs(x[1]) - 1.0) < 1e-14;
      const bool on_ew = std::abs(std::abs(x[0]) - 1.0) < 1e-14;
      double expect;
      if (on_sn && on_ew)
        expect = 0.5 * (poly(x[0]) + poly(x[1]));
      else if (on_sn)
        expect = poly(x[0]);
      else
        expect = poly(x[1]);
      CHECK(std::abs(dst[r] - expect) < 1e-12);
    }
  }
}
