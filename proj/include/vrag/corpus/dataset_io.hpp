// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "vrag/corpus/encoding.hpp"

namespace vrag {

/// Responses equal to this literal mark unanswerable instances, which are
/// dropped at load time.
inline constexpr std::string_view kCannotAnswer = "CANNOT-ANSWER";

struct Split {
  std::vector<DialogInstance> instances;
  std::size_t dropped_cannot_answer = 0;
};

struct Dataset {
  std::vector<DocumentRecord> documents;
  Split train;
  Split validation;
  Split test;
};

struct DatasetPaths {
  std::filesystem::path documents;
  std::filesystem::path train;
  std::filesystem::path validation;
  std::filesystem::path test;

  // documents.jsonl, train.jsonl, val.jsonl, test.jsonl under `dir`.
  static DatasetPaths in_directory(const std::filesystem::path& dir);
};

// JSON Lines readers. Errors are DataError messages of the form
// "<file>:<line>: <reason>".
std::vector<DocumentRecord> read_documents(const std::filesystem::path& path);
Split read_dialogs(const std::filesystem::path& path);

void write_documents(const std::filesystem::path& path, std::span<const DocumentRecord> documents);
void write_dialogs(const std::filesystem::path& path, std::span<const DialogInstance> dialogs);

std::string document_to_json_line(const DocumentRecord& document);
std::string dialog_to_json_line(const DialogInstance& dialog);

Dataset load_dataset(const DatasetPaths& paths);

/// Vocabulary over the document collection and the training split.
Vocabulary build_vocabulary(const Dataset& dataset, std::size_t min_count = 1);

}  // namespace vrag
