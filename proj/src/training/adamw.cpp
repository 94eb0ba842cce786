// SPDX-License-Identifier: Apache-2.0
#include "vrag/training/adamw.hpp"

#include <cmath>
#include <stdexcept>

#include "vrag/errors.hpp"

namespace vrag {

void AdamWConfig::validate() const {
  if (!(learning_rate > 0.0) || !std::isfinite(learning_rate)) throw ConfigError("learning rate must be positive");
  if (!(beta1 >= 0.0 && beta1 < 1.0) || !(beta2 >= 0.0 && beta2 < 1.0)) {
    throw ConfigError("AdamW betas must lie in [0, 1)");
  }
  if (!(eps > 0.0)) throw ConfigError("AdamW eps must be positive");
  if (!(weight_decay >= 0.0) || !std::isfinite(weight_decay)) throw ConfigError("weight decay must be >= 0");
}

OptimizerState OptimizerState::for_parameters(std::span<Parameter* const> params) {
  OptimizerState s;
  for (const Parameter* p : params) {
    s.first.push_back(Tensor::zeros_like(p->value));
    s.second.push_back(Tensor::zeros_like(p->value));
  }
  return s;
}

void adamw_step(std::span<Parameter* const> params, const Gradients& grads, OptimizerState& state,
                const AdamWConfig& config) {
  if (state.first.size() != params.size() || state.second.size() != params.size()) {
    throw std::invalid_argument("optimizer state does not match the parameter list");
  }
  ++state.step;
  const double t = static_cast<double>(state.step);
  const double correction1 = 1.0 - std::pow(config.beta1, t);
  const double correction2 = 1.0 - std::pow(config.beta2, t);
  for (std::size_t i = 0; i < params.size(); ++i) {
    Parameter& p = *params[i];
    Tensor& m = state.first[i];
    Tensor& v = state.second[i];
    if (m.shape() != p.value.shape() || v.shape() != p.value.shape()) {
      throw std::invalid_argument("optimizer moments for '" + p.name + "' have the wrong shape");
    }
    if (p.frozen) continue;
    const Tensor* g = grads.find(p);
    auto theta = p.value.values();
    for (std::size_t j = 0; j < theta.size(); ++j) {
      const double gj = g ? (*g)[j] : 0.0;
      m[j] = config.beta1 * m[j] + (1.0 - config.beta1) * gj;
      v[j] = config.beta2 * v[j] + (1.0 - config.beta2) * gj * gj;
      const double m_hat = m[j] / correction1;
      const double v_hat = v[j] / correction2;
      theta[j] -= config.learning_rate * (m_hat / (std::sqrt(v_hat) + config.eps) + config.weight_decay * theta[j]);
    }
  }
}

}  // namespace vrag
