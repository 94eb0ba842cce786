// SPDX-License-Identifier: Apache-2.0
#include "vrag/objectives/kl_truncation.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

#include "vrag/numerics/tensor.hpp"

namespace vrag {
namespace {

constexpr double kSumTolerance = 1e-9;

void require_distributions(std::span<const double> q, std::span<const double> p) {
  if (q.empty() || q.size() != p.size()) {
    throw std::invalid_argument("KL needs two non-empty distributions of equal length");
  }
  for (auto dist : {q, p}) {
    double total = 0.0;
    for (double v : dist) {
      if (!(v >= 0.0) || !std::isfinite(v)) throw std::invalid_argument("probabilities must be finite and >= 0");
      total += v;
    }
    if (std::abs(total - 1.0) > kSumTolerance) {
      throw std::invalid_argument("probabilities sum to " + std::to_string(total) + ", not 1");
    }
  }
}

double kl_term(double q, double p) {
  if (q == 0.0) return 0.0;
  if (p == 0.0) return std::numeric_limits<double>::infinity();
  return q * std::log(q / p);
}

}  // namespace

KlTruncationParams delta_for_epsilon(double epsilon, std::size_t support_size) {
  if (!(epsilon > 0.0) || !std::isfinite(epsilon)) throw std::invalid_argument("epsilon must be positive and finite");
  if (support_size == 0) throw std::invalid_argument("support size must be at least 1");
  const double two_n = 2.0 * static_cast<double>(support_size);
  const double ratio = epsilon / two_n;
  const double log_term = std::log(two_n / epsilon);
  double delta = 1.0 / std::exp(1.0);
  // ln(2N/ε) <= 0 only when ε >= 2N, where the cap applies anyway.
  if (log_term > 0.0) delta = std::min(ratio / log_term, delta);
  return {epsilon, support_size, delta};
}

double exact_kl(std::span<const double> q, std::span<const double> p) {
  require_distributions(q, p);
  double kl = 0.0;
  for (std::size_t i = 0; i < q.size(); ++i) kl += kl_term(q[i], p[i]);
  return kl;
}

double truncated_kl_delta(std::span<const double> q, std::span<const double> p, double delta) {
  require_distributions(q, p);
  if (!(delta > 0.0)) throw std::invalid_argument("delta must be positive");
  double kl = 0.0;
  for (std::size_t i = 0; i < q.size(); ++i) {
    if (p[i] <= delta || q[i] >= delta) kl += kl_term(q[i], p[i]);
  }
  return kl;
}

std::vector<double> random_distribution(Rng& rng, std::size_t n) {
  std::vector<double> logits(n);
  switch (rng.below(4)) {
    case 0:  // near flat
      for (double& v : logits) v = 0.1 * rng.normal();
      break;
    case 1: {  // peaked: scaled Gaussian logits
      const double scale = std::pow(10.0, rng.uniform(0.0, 1.3));
      for (double& v : logits) v = scale * rng.normal();
      break;
    }
    case 2:  // Dirichlet(1): normalized exponentials
      for (double& v : logits) v = std::log(std::max(-std::log(1.0 - rng.uniform01()), 1e-300));
      break;
    default: {  // a few heavy entries over a tiny floor
      for (double& v : logits) v = rng.uniform(-12.0, -6.0);
      const std::size_t heavy = 1 + rng.below(std::min<std::size_t>(n, 5));
      for (std::size_t i = 0; i < heavy; ++i) logits[rng.below(n)] = rng.uniform(0.0, 3.0);
      break;
    }
  }
  std::vector<double> probs = softmax_stable(logits);
  for (double& v : probs) v = std::max(v, std::numeric_limits<double>::min());
  double total = 0.0;
  for (double v : probs) total += v;
  for (double& v : probs) v /= total;
  return probs;
}

std::vector<KlCheckCell> verify_kl_truncation(const KlCheckConfig& config) {
  if (config.trials == 0) throw std::invalid_argument("klcheck needs at least one trial");
  Rng rng(config.seed);
  std::vector<KlCheckCell> cells;
  for (std::size_t n : config.support_sizes) {
    for (double eps : config.epsilons) {
      KlCheckCell cell;
      cell.support_size = n;
      cell.epsilon = eps;
      cell.delta = config.forced_delta ? *config.forced_delta : delta_for_epsilon(eps, n).delta;
      cell.trials = config.trials;
      for (std::size_t t = 0; t < config.trials; ++t) {
        const std::vector<double> q = random_distribution(rng, n);
        std::vector<double> p = random_distribution(rng, n);
        if (rng.bernoulli(0.25)) {
          // p close to q: sharpen or flatten q slightly.
          const double power = rng.uniform(0.5, 1.5);
          double total = 0.0;
          for (std::size_t i = 0; i < n; ++i) total += (p[i] = std::pow(q[i], power));
          for (double& v : p) v = std::max(v / total, std::numeric_limits<double>::min());
        }
        const double error = std::abs(exact_kl(q, p) - truncated_kl_delta(q, p, cell.delta));
        cell.max_error = std::max(cell.max_error, error);
        if (!(error < eps)) ++cell.violations;
      }
      cells.push_back(cell);
    }
  }
  return cells;
}

}  // namespace vrag
