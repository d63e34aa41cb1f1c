// Copyright (c) 2026 the hpsolve authors. All rights reserved.
// SPDX-License-Identifier: Apache-2.0

#ifndef HPSOLVE_DOWNPASS_HPP
#define HPSOLVE_DOWNPASS_HPP

#include <string>

#include "hps/solver.hpp"

namespace hps {

/// Locate the leaf containing a point by top-down box descent.
int locate_leaf(const DiscretizationTree& tree, const Point& x);

/// Tensor barycentric interpolation of the field at arbitrary points inside
/// the domain; a query at a Chebyshev node returns the stored value exactly.
template <class S>
Vec<S> evaluate_at(const SolutionField<S>& field, const std::vector<Point>& points);

/// Solution dump: JSON sidecar plus a raw little-endian array, leaf-major,
/// point-minor (interleaved re/im for complex data).
template <class S>
void dump_solution(const SolutionField<S>& field, const std::string& json_path,
                   const std::string& bin_path, const std::string& tree_ref);

}  // namespace hps

#endif
