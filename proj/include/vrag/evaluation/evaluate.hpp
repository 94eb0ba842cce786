// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "vrag/decoding/beam_search.hpp"
#include "vrag/evaluation/metrics.hpp"

namespace vrag {

/// top1 conditions on the prior's best document; topk is fast decoding over
/// the prior's top k.
enum class Strategy { Top1, TopK };

std::string to_string(Strategy strategy);
/// Accepts "top1" and "topk"; throws ConfigError otherwise.
Strategy parse_strategy(std::string_view text);

/// Fractions in [0, 1].
struct GenerationMetrics {
  double b1 = 0.0;
  double b4 = 0.0;
  double bp1 = 0.0;
  double bp4 = 0.0;

  bool operator==(const GenerationMetrics&) const = default;
};

struct Prediction {
  std::string instance_id;
  Tokens hypothesis;
  std::string document_id;  // the document the hypothesis was generated from
  double b1 = 0.0;
  double b4 = 0.0;

  bool operator==(const Prediction&) const = default;
};

struct StrategyResult {
  Strategy strategy = Strategy::Top1;
  GenerationMetrics metrics;
  std::vector<Prediction> predictions;

  bool operator==(const StrategyResult&) const = default;
};

struct EvalReport {
  RetrievalMetrics retrieval;  // prior top-5 on the evaluated split
  std::vector<StrategyResult> strategies;
  std::size_t instances = 0;
  std::size_t k = 0;

  /// Throws std::out_of_range when `strategy` was not evaluated.
  const StrategyResult& result(Strategy strategy) const;

  bool operator==(const EvalReport&) const = default;
};

struct EvalOptions {
  DecodeConfig decode;
  std::vector<Strategy> strategies{Strategy::Top1, Strategy::TopK};
};

/// Retrieval recall of the prior plus BLEU-1/4 and their penalized forms per
/// strategy. An instance is penalized when the document its hypothesis was
/// generated from is not its gold document; instances without a gold
/// document are excluded from recall and BLEU-penalized.
EvalReport evaluate(const ModelBundle& bundle, const KnowledgeBase& kb, std::span<const EncodedInstance> instances,
                    const Vocabulary& vocab, const EvalOptions& options = {});

}  // namespace vrag
