// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "vrag/evaluation/metrics.hpp"

namespace vrag {

enum class Phase { Joint, Finetune };

std::string to_string(Phase phase);

/// One completed epoch. Train-split retrieval is measured after the epoch's
/// last update; posterior metrics exist only for models with a trained
/// posterior.
struct EpochRecord {
  Phase phase = Phase::Joint;
  std::size_t epoch = 0;  // 1-based within its phase
  double loss = 0.0;      // mean of the negated objective over the epoch
  RetrievalMetrics train_prior;
  std::optional<RetrievalMetrics> train_posterior;
  RetrievalMetrics validation_prior;
  std::optional<RetrievalMetrics> validation_posterior;
  double monitored = 0.0;  // the early-stopping metric on validation
  double seconds = 0.0;
};

struct TrainLog {
  std::vector<EpochRecord> epochs;
  std::string monitored_metric;
  // Value of the monitored metric before the first update of the phase.
  double baseline = 0.0;
  // 0 when no epoch beat the baseline.
  std::size_t best_epoch = 0;
  double best_value = 0.0;
  bool stopped_early = false;

  /// Columns: [phase,] epoch, loss, prior_r1, prior_r5, prior_mrr5, post_r1,
  /// post_r5, post_mrr5, seconds, with train-split recall. Posterior cells
  /// are empty when absent. Wall time makes this file non-reproducible.
  std::string to_csv(bool with_phase) const;
  void write_csv(const std::filesystem::path& path, bool with_phase) const;

  /// Every field including validation metrics, without wall time unless
  /// `with_timing`.
  nlohmann::ordered_json to_json(bool with_timing = false) const;

  /// Appends `other`'s epochs; best/baseline fields take `other`'s values.
  void append(const TrainLog& other);
};

nlohmann::ordered_json to_json(const RetrievalMetrics& m);

}  // namespace vrag
