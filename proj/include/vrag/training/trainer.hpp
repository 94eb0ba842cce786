// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <string_view>

#include "vrag/evaluation/metrics.hpp"
#include "vrag/objectives/objectives.hpp"
#include "vrag/training/adamw.hpp"
#include "vrag/training/train_log.hpp"

namespace vrag {

enum class Objective { Rag, Vrag };

std::string to_string(Objective objective);
/// Accepts "rag" and "vrag"; throws ConfigError otherwise.
Objective parse_objective(std::string_view text);

struct TrainConfig {
  Objective objective = Objective::Vrag;
  std::size_t k = 5;
  AdamWConfig optimizer;
  std::size_t max_epochs = 10;
  std::size_t patience = 5;
  std::size_t batch_size = 16;
  std::uint64_t seed = 0;
  // Train-split retrieval per epoch; costs one extra pass without gradients.
  bool log_train_retrieval = true;

  /// Throws ConfigError on k == 0, zero epochs or batch size, or bad
  /// optimizer settings.
  void validate() const;
};

struct TrainingSplits {
  std::span<const EncodedInstance> train;
  std::span<const EncodedInstance> validation;
};

struct TrainResult {
  ModelBundle bundle;
  TrainLog log;
};

/// Called after every epoch with the record just appended.
using EpochCallback = std::function<void(const EpochRecord&)>;

enum class RetrievalQuery { Prior, Posterior };

/// Top-5 retrieval metrics over `instances` using g(x) or h(x, y).
RetrievalMetrics measure_retrieval(const ModelBundle& bundle, const KnowledgeBase& kb,
                                   std::span<const EncodedInstance> instances, RetrievalQuery query);

/// Mean rag_objective with prior top-k retrieval.
double mean_log_likelihood(const ModelBundle& bundle, const KnowledgeBase& kb,
                           std::span<const EncodedInstance> instances, std::size_t k);

/// Minibatch AdamW on the negated objective with early stopping on
/// validation prior R@1. Returns the parameters of the best epoch. The
/// document encoder is never updated.
/// Throws DataError when no validation instance has a gold document.
TrainResult train(const ModelBundle& initial, const KnowledgeBase& kb, const TrainingSplits& splits,
                  const TrainConfig& config, const EpochCallback& on_epoch = {});

/// Updates only the decoder, minimizing the negated rag objective over the
/// prior's top-k documents, with early stopping on validation mean
/// log-likelihood. The untouched input counts as epoch 0, so the result is
/// never worse than the input on that metric. Retriever tensors come back
/// bit-identical, and so do the input's frozen flags.
TrainResult finetune_decoder(const ModelBundle& trained, const KnowledgeBase& kb, const TrainingSplits& splits,
                             const TrainConfig& config, const EpochCallback& on_epoch = {});

}  // namespace vrag
