// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <functional>
#include <span>
#include <vector>

namespace vrag {

/// Central-difference gradient estimate (f(p+h) - f(p-h)) / 2h for each
/// coordinate of `params`. The coordinates are perturbed in place and restored
/// before returning, so `f` may read them through any alias (for example a
/// Parameter's value). Throws std::invalid_argument if h <= 0.
std::vector<double> finite_diff_gradient(const std::function<double()>& f,
                                         std::span<double> params, double h);

// Same, for a single coordinate.
double finite_diff_partial(const std::function<double()>& f, double& coordinate, double h);

/// |a - b| / max(|a|, floor); the comparison used by gradient checks.
double relative_error(double analytic, double numeric, double floor = 1e-8);

}  // namespace vrag
