// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "vrag/numerics/tape.hpp"

namespace vrag {

struct AdamWConfig {
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  double weight_decay = 0.0;

  /// Throws ConfigError unless the rate is positive, the betas lie in [0, 1),
  /// eps > 0 and the decay is >= 0.
  void validate() const;
};

/// First and second moments for a fixed, ordered parameter list.
struct OptimizerState {
  std::vector<Tensor> first;
  std::vector<Tensor> second;
  std::uint64_t step = 0;

  static OptimizerState for_parameters(std::span<Parameter* const> params);
};

/// One decoupled-decay Adam update of every non-frozen parameter:
///   θ ← θ − lr · ( m̂ / (√v̂ + eps) + wd · θ )
/// A parameter without an entry in `grads` is treated as having zero
/// gradient. Throws std::invalid_argument if `state` was made for a different
/// parameter list.
void adamw_step(std::span<Parameter* const> params, const Gradients& grads, OptimizerState& state,
                const AdamWConfig& config);

}  // namespace vrag
