// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "vrag/corpus/synthetic.hpp"
#include "vrag/evaluation/evaluate.hpp"
#include "vrag/objectives/kl_truncation.hpp"
#include "vrag/training/trainer.hpp"

namespace vrag {

struct ExperimentPaths {
  /// Holds documents.jsonl, train.jsonl, val.jsonl and test.jsonl.
  std::filesystem::path data_dir = "data";
  // Individual files override the data_dir defaults.
  std::optional<std::filesystem::path> documents;
  std::optional<std::filesystem::path> train;
  std::optional<std::filesystem::path> validation;
  std::optional<std::filesystem::path> test;
  /// Parent of the run directories.
  std::filesystem::path output_dir = "runs";

  DatasetPaths dataset() const;
};

struct TopkStudyConfig {
  std::vector<std::size_t> k_values{1, 3, 5};
  std::vector<Objective> objectives{Objective::Vrag};
};

/// One experiment: data, model, training, decoding, seeds and study
/// settings. Loaded from a single JSON file; every object rejects keys it
/// does not know.
struct ExperimentConfig {
  ExperimentPaths paths;
  ModelDims dims;  // vocab_size is taken from the data
  TrainConfig train;  // train.seed is replaced by each entry of `seeds`
  bool finetune = false;
  DecodeConfig decode;
  std::vector<Strategy> strategies{Strategy::Top1, Strategy::TopK};
  std::vector<std::uint64_t> seeds{0};
  std::size_t vocab_min_count = 1;
  EncodingBudget budget;
  std::optional<SyntheticSpec> synthetic;
  TopkStudyConfig topk;
  KlCheckConfig klcheck;

  /// Throws ConfigError on unknown keys, wrong types or invalid values.
  static ExperimentConfig from_json(const nlohmann::json& j);
  /// Throws ConfigError when the file is missing or is not valid JSON.
  static ExperimentConfig load(const std::filesystem::path& path);

  /// Every field; from_json(to_json()) reproduces the config.
  nlohmann::ordered_json to_json() const;

  void validate() const;

  /// 16 hex digits over the settings that determine a trained model: data
  /// paths, dims, training settings, fine-tuning, vocabulary and encoding.
  /// Seeds, decoding, studies and output location are excluded.
  std::string run_hash() const;
  /// output_dir / "<run_hash>-s<seed>".
  std::filesystem::path run_dir(std::uint64_t seed) const;
};

/// Command-line values that take precedence over the config file.
struct ConfigOverrides {
  std::optional<std::uint64_t> seed;  // replaces `seeds` and the synthetic seed
  std::optional<Objective> objective;
  std::optional<std::size_t> k;  // training k and decoding k
  bool finetune = false;
  std::optional<std::vector<Strategy>> strategies;

  void apply(ExperimentConfig& config) const;
};

/// FNV-1a 64-bit hash as 16 lowercase hex digits.
std::string fnv1a_hex(std::string_view bytes);

}  // namespace vrag
