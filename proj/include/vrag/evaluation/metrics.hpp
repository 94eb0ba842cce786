// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace vrag {

/// True iff `gold` is among the first `k` entries of `ranked`.
bool recall_at_k(std::span<const std::string> ranked, const std::string& gold, std::size_t k);

/// 1/rank of `gold` within the first `cutoff` entries, 0 otherwise.
double reciprocal_rank(std::span<const std::string> ranked, const std::string& gold, std::size_t cutoff = 5);

/// Means over the instances that carry a gold document.
struct RetrievalMetrics {
  double r_at_1 = 0.0;
  double r_at_3 = 0.0;
  double r_at_5 = 0.0;
  double mrr_at_5 = 0.0;
  std::size_t count = 0;
  std::size_t excluded = 0;  // instances without a gold annotation

  bool operator==(const RetrievalMetrics&) const = default;
};

class RetrievalTally {
 public:
  /// An instance without `gold` only increments the exclusion count.
  void add(std::span<const std::string> ranked, const std::optional<std::string>& gold);
  RetrievalMetrics result() const;

 private:
  double r1_ = 0.0, r3_ = 0.0, r5_ = 0.0, mrr_ = 0.0;
  std::size_t count_ = 0;
  std::size_t excluded_ = 0;
};

/// Arithmetic mean; 0 for an empty input.
double mean(std::span<const double> values);

/// Sentence BLEU with n-gram orders 1..n: clipped precisions, add-one
/// smoothing on the counts of orders >= 2, geometric mean, and brevity
/// penalty exp(min(0, 1 - |ref|/|hyp|)). An empty hypothesis scores 0.
/// Throws std::invalid_argument for n == 0 or an empty reference.
double bleu(std::span<const std::string> hypothesis, std::span<const std::string> reference, std::size_t n);

/// Mean of per-instance BLEU where an instance whose top-1 retrieved
/// document differs from its gold document scores 0. Instances without a gold
/// document are left out of the mean and counted in `excluded` when given.
double bleu_penalized(std::span<const double> per_instance_bleu, std::span<const std::string> top1,
                      std::span<const std::optional<std::string>> gold, std::size_t* excluded = nullptr);

}  // namespace vrag
