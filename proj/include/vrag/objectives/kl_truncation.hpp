// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "vrag/numerics/random.hpp"

namespace vrag {

/// δ = min{ (ε/2N) / ln(2N/ε), 1/e }. Truncating the KL sum to
/// S(δ) = {z : p(z) ≤ δ} ∪ {z : q(z) ≥ δ} then changes it by less than ε.
struct KlTruncationParams {
  double epsilon = 0.0;
  std::size_t support_size = 0;
  double delta = 0.0;
};

/// Throws std::invalid_argument when ε ≤ 0 (or is not finite) or N == 0.
KlTruncationParams delta_for_epsilon(double epsilon, std::size_t support_size);

/// Σ_z q(z) ln(q(z)/p(z)) over the whole sample space. Terms with q(z) = 0
/// contribute 0; a term with q(z) > 0 and p(z) = 0 makes the result +inf.
/// Throws std::invalid_argument unless q and p are distributions of equal
/// length.
double exact_kl(std::span<const double> q, std::span<const double> p);

/// The same sum restricted to S(δ).
double truncated_kl_delta(std::span<const double> q, std::span<const double> p, double delta);

struct KlCheckConfig {
  std::size_t trials = 1000;
  std::vector<std::size_t> support_sizes = {10, 100, 1000};
  std::vector<double> epsilons = {0.5, 0.1, 0.01};
  std::uint64_t seed = 0;
  // Replaces the derived δ in every cell.
  std::optional<double> forced_delta;
};

struct KlCheckCell {
  std::size_t support_size = 0;
  double epsilon = 0.0;
  double delta = 0.0;
  std::size_t trials = 0;
  std::size_t violations = 0;  // trials with |KL - KL̂_δ| >= ε
  double max_error = 0.0;
};

/// Random strictly positive distribution of length n, drawn from a mix of
/// flat, peaked and heavy-tailed shapes.
std::vector<double> random_distribution(Rng& rng, std::size_t n);

/// Randomized check of the truncation bound over every (N, ε) cell.
std::vector<KlCheckCell> verify_kl_truncation(const KlCheckConfig& config);

}  // namespace vrag
