// SPDX-License-Identifier: Apache-2.0
#include <algorithm>
#include <cmath>
#include <map>
#include <stdexcept>
#include <vector>

#include "vrag/evaluation/metrics.hpp"

namespace vrag {
namespace {

using Gram = std::vector<std::string>;

std::map<Gram, std::size_t> ngram_counts(std::span<const std::string> tokens, std::size_t n) {
  std::map<Gram, std::size_t> counts;
  for (std::size_t i = 0; i + n <= tokens.size(); ++i) ++counts[Gram(tokens.begin() + i, tokens.begin() + i + n)];
  return counts;
}

}  // namespace

double bleu(std::span<const std::string> hypothesis, std::span<const std::string> reference, std::size_t n) {
  if (n == 0) throw std::invalid_argument("BLEU order must be at least 1");
  if (reference.empty()) throw std::invalid_argument("BLEU needs a non-empty reference");
  if (hypothesis.empty()) return 0.0;

  double log_precision = 0.0;
  for (std::size_t order = 1; order <= n; ++order) {
    const auto hyp = ngram_counts(hypothesis, order);
    const auto ref = ngram_counts(reference, order);
    std::size_t matched = 0;
    std::size_t total = 0;
    for (const auto& [gram, count] : hyp) {
      total += count;
      const auto it = ref.find(gram);
      if (it != ref.end()) matched += std::min(count, it->second);
    }
    double precision = 0.0;
    if (order == 1) {
      precision = static_cast<double>(matched) / static_cast<double>(total);
    } else {
      precision = static_cast<double>(matched + 1) / static_cast<double>(total + 1);
    }
    if (precision == 0.0) return 0.0;
    log_precision += std::log(precision);
  }
  const double ratio = static_cast<double>(reference.size()) / static_cast<double>(hypothesis.size());
  const double brevity = std::exp(std::min(0.0, 1.0 - ratio));
  return brevity * std::exp(log_precision / static_cast<double>(n));
}

}  // namespace vrag
