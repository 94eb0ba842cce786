// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string_view>

#include "vrag/cli/experiment_config.hpp"

namespace vrag {

enum class ExitCode : int { Ok = 0, Failure = 1, Config = 2, Data = 3, CheckFailed = 4 };

/// Writes documents.jsonl, train.jsonl, val.jsonl and test.jsonl into
/// paths.data_dir from config.synthetic.
ExitCode cmd_generate_data(const ExperimentConfig& config, std::ostream& log);

/// Trains one model per seed into run_dir(seed): checkpoint.bin,
/// index.bin, vocab.txt, config.json, train_log.csv and train_log.json.
ExitCode cmd_train(const ExperimentConfig& config, std::ostream& log);

/// Evaluates run_dir(seed)/checkpoint.bin, or `checkpoint` when given (one
/// seed only), into eval_report.json, eval_report.csv and predictions.jsonl.
ExitCode cmd_evaluate(const ExperimentConfig& config, const std::optional<std::filesystem::path>& checkpoint,
                      std::ostream& log);

/// study is memorization, topk or klcheck. Returns CheckFailed when the
/// study's check does not hold: memorization needs top-1 B-1 to drop for
/// every seed, topk needs seed-averaged R@3 non-increasing as k decreases
/// (0.01 slack), klcheck needs zero violations.
ExitCode cmd_study(const ExperimentConfig& config, std::string_view study,
                   const std::optional<std::filesystem::path>& checkpoint, std::ostream& log);

/// Parses the command line, runs the command and maps errors to exit codes:
/// ConfigError and usage errors 2, DataError 3, any other exception 1.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace vrag
