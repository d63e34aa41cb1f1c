// Copyright (c) 2026 the hpsolve authors. All rights reserved.
// SPDX-License-Identifier: Apache-2.0

#ifndef HPSOLVE_CORE_HPP
#define HPSOLVE_CORE_HPP

#include <Eigen/Dense>
#include <complex>
#include <stdexcept>
#include <string>

namespace hps {

using Real = double;
using Complex = std::complex<double>;

template <class S> using Mat = Eigen::Matrix<S, Eigen::Dynamic, Eigen::Dynamic>;
template <class S> using Vec = Eigen::Matrix<S, Eigen::Dynamic, 1>;
using MatR = Mat<Real>;
using MatC = Mat<Complex>;
using VecR = Vec<Real>;
using VecC = Vec<Complex>;

// Spatial point; x[2] is ignored for 2D problems.
using Point = Eigen::Vector3d;

struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

[[noreturn]] inline void fail(const std::string& msg) { throw Error(msg); }

inline void require(bool ok, const std::string& msg) {
  if (!ok) fail(msg);
}

template <class S> struct scalar_traits;
template <> struct scalar_traits<Real> {
  static constexpr bool is_complex = false;
  static constexpr int bytes = 8;
};
template <> struct scalar_traits<Complex> {
  static constexpr bool is_complex = true;
  static constexpr int bytes = 16;
};

}  // namespace hps

#endif
