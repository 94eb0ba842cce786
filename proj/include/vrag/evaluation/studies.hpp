// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "vrag/evaluation/evaluate.hpp"
#include "vrag/training/trainer.hpp"

namespace vrag {

/// 100 * (after - before) / before; nullopt when before is 0.
std::optional<double> percentage_change(double before, double after);

struct MemorizationRow {
  std::string metric;  // b1, b4, bp1 or bp4
  Strategy strategy = Strategy::Top1;
  double before = 0.0;
  double after = 0.0;
  std::optional<double> change_percent;

  bool operator==(const MemorizationRow&) const = default;
};

struct MemorizationReport {
  EvalReport full_index;
  EvalReport ablated_index;
  std::vector<std::string> removed_documents;
  std::vector<MemorizationRow> rows;

  /// Throws std::out_of_range for an unknown (metric, strategy) pair.
  const MemorizationRow& row(const std::string& metric, Strategy strategy) const;
};

/// Evaluates with the full index, rebuilds it without every gold document of
/// `test`, evaluates again and reports the per-metric change. Throws
/// DataError when a gold document is missing from the index or when `test`
/// has no gold documents.
MemorizationReport memorization_study(const ModelBundle& bundle, const KnowledgeBase& kb,
                                      std::span<const EncodedInstance> test, const Vocabulary& vocab,
                                      const EvalOptions& options = {});

/// Everything needed to train and evaluate fresh models.
struct StudyData {
  Vocabulary vocab;
  std::vector<DocumentRecord> documents;
  std::vector<EncodedInstance> train;
  std::vector<EncodedInstance> validation;
  std::vector<EncodedInstance> test;
};

struct AblationRow {
  Objective objective = Objective::Vrag;
  std::size_t k = 0;
  std::uint64_t seed = 0;
  RetrievalMetrics test_prior;
  std::size_t epochs = 0;

  bool operator==(const AblationRow&) const = default;
};

struct AblationAverage {
  Objective objective = Objective::Vrag;
  std::size_t k = 0;
  double r_at_1 = 0.0;
  double r_at_3 = 0.0;
  double r_at_5 = 0.0;
  std::size_t seeds = 0;
};

struct TopkAblation {
  std::vector<AblationRow> rows;

  /// Columns objective,k,seed,r_at_1,r_at_3,r_at_5,mrr_at_5,count,epochs.
  std::string to_csv() const;
  /// Throws DataError on a malformed table.
  static TopkAblation from_csv(std::string_view text);

  /// Seed means per (objective, k) in first-appearance order.
  std::vector<AblationAverage> averages() const;
};

/// Trains one fresh model per (objective, k, seed), each initialized with
/// its seed, and measures prior retrieval on the test split.
TopkAblation topk_ablation(const StudyData& data, const ModelDims& dims, const TrainConfig& base,
                           std::span<const Objective> objectives, std::span<const std::size_t> k_values,
                           std::span<const std::uint64_t> seeds, const EpochCallback& on_epoch = {});

/// Train-split R@1 per epoch averaged over the runs that reached that epoch.
struct RecallCurvePoint {
  std::size_t epoch = 0;
  double prior_r1 = 0.0;
  std::optional<double> posterior_r1;
  std::size_t runs = 0;
};

std::vector<RecallCurvePoint> recall_curve(std::span<const TrainLog> logs);

}  // namespace vrag
