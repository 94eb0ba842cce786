// SPDX-License-Identifier: Apache-2.0
#include "vrag/evaluation/metrics.hpp"

#include <algorithm>
#include <stdexcept>

namespace vrag {

bool recall_at_k(std::span<const std::string> ranked, const std::string& gold, std::size_t k) {
  const auto end = ranked.begin() + static_cast<std::ptrdiff_t>(std::min(k, ranked.size()));
  return std::find(ranked.begin(), end, gold) != end;
}

double reciprocal_rank(std::span<const std::string> ranked, const std::string& gold, std::size_t cutoff) {
  const std::size_t limit = std::min(cutoff, ranked.size());
  for (std::size_t i = 0; i < limit; ++i) {
    if (ranked[i] == gold) return 1.0 / static_cast<double>(i + 1);
  }
  return 0.0;
}

void RetrievalTally::add(std::span<const std::string> ranked, const std::optional<std::string>& gold) {
  if (!gold) {
    ++excluded_;
    return;
  }
  r1_ += recall_at_k(ranked, *gold, 1) ? 1.0 : 0.0;
  r3_ += recall_at_k(ranked, *gold, 3) ? 1.0 : 0.0;
  r5_ += recall_at_k(ranked, *gold, 5) ? 1.0 : 0.0;
  mrr_ += reciprocal_rank(ranked, *gold, 5);
  ++count_;
}

RetrievalMetrics RetrievalTally::result() const {
  RetrievalMetrics m;
  m.count = count_;
  m.excluded = excluded_;
  if (count_ == 0) return m;
  const double n = static_cast<double>(count_);
  m.r_at_1 = r1_ / n;
  m.r_at_3 = r3_ / n;
  m.r_at_5 = r5_ / n;
  m.mrr_at_5 = mrr_ / n;
  return m;
}

double mean(std::span<const double> values) {
  if (values.empty()) return 0.0;
  double total = 0.0;
  for (double v : values) total += v;
  return total / static_cast<double>(values.size());
}

double bleu_penalized(std::span<const double> per_instance_bleu, std::span<const std::string> top1,
                      std::span<const std::optional<std::string>> gold, std::size_t* excluded) {
  if (per_instance_bleu.size() != top1.size() || top1.size() != gold.size()) {
    throw std::invalid_argument("bleu_penalized: input lengths differ");
  }
  double total = 0.0;
  std::size_t counted = 0;
  std::size_t skipped = 0;
  for (std::size_t i = 0; i < gold.size(); ++i) {
    if (!gold[i]) {
      ++skipped;
      continue;
    }
    if (top1[i] == *gold[i]) total += per_instance_bleu[i];
    ++counted;
  }
  if (excluded) *excluded = skipped;
  return counted == 0 ? 0.0 : total / static_cast<double>(counted);
}

}  // namespace vrag
