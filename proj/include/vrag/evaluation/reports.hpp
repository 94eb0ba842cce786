// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <span>
#include <string>

#include "json.hpp"
#include "vrag/evaluation/evaluate.hpp"
#include "vrag/evaluation/studies.hpp"

namespace vrag {

// Exported metrics are percentages (x100); counts stay integral.

/// {"instances", "k", "retrieval": {r_at_1, r_at_5, mrr_at_5, count,
/// excluded}, "generation": {strategy: {b1, b4, bp1, bp4}}}
nlohmann::ordered_json to_json(const EvalReport& report);

/// metric,strategy,value. Retrieval rows use the strategy "prior".
std::string to_csv(const EvalReport& report);

/// One JSON object per line: instance, strategy, document, hypothesis, b1, b4.
std::string predictions_jsonl(const EvalReport& report);

nlohmann::ordered_json to_json(const MemorizationReport& report);

/// metric,strategy,before,after,change_percent. An undefined change is an
/// empty cell.
std::string to_csv(const MemorizationReport& report);

/// epoch,prior_r1,post_r1,runs as fractions.
std::string to_csv(std::span<const RecallCurvePoint> curve);

}  // namespace vrag
