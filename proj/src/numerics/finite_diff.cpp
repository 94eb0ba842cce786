// SPDX-License-Identifier: Apache-2.0
#include "vrag/numerics/finite_diff.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace vrag {

double finite_diff_partial(const std::function<double()>& f, double& coordinate, double h) {
  if (!(h > 0.0)) throw std::invalid_argument("finite difference step must be positive");
  const double saved = coordinate;
  coordinate = saved + h;
  const double up = f();
  coordinate = saved - h;
  const double down = f();
  coordinate = saved;
  return (up - down) / (2.0 * h);
}

std::vector<double> finite_diff_gradient(const std::function<double()>& f,
                                         std::span<double> params, double h) {
  if (!(h > 0.0)) throw std::invalid_argument("finite difference step must be positive");
  std::vector<double> grad(params.size());
  for (std::size_t i = 0; i < params.size(); ++i) grad[i] = finite_diff_partial(f, params[i], h);
  return grad;
}

double relative_error(double analytic, double numeric, double floor) {
  return std::abs(analytic - numeric) / std::max(std::abs(analytic), floor);
}

}  // namespace vrag
