// SPDX-License-Identifier: Apache-2.0
#include "vrag/corpus/dataset_io.hpp"

#include <fstream>
#include "json.hpp"
#include <unordered_map>

#include "vrag/errors.hpp"

namespace vrag {
namespace {

using nlohmann::json;
using nlohmann::ordered_json;

std::string where(const std::filesystem::path& path, std::size_t line) {
  return path.string() + ":" + std::to_string(line) + ": ";
}

std::ifstream open_for_read(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open " + path.string());
  return in;
}

std::ofstream open_for_write(const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw DataError("cannot write " + path.string());
  return out;
}

bool blank(const std::string& line) {
  return line.find_first_not_of(" \t\r\n") == std::string::npos;
}

const json& require_field(const json& obj, const char* key, const std::string& at) {
  auto it = obj.find(key);
  if (it == obj.end()) throw DataError(at + "missing field '" + key + "'");
  return *it;
}

std::string require_string(const json& obj, const char* key, const std::string& at) {
  const json& v = require_field(obj, key, at);
  if (!v.is_string()) throw DataError(at + "field '" + key + "' must be a string");
  return v.get<std::string>();
}

// Calls `handle(parsed, line_number, location_prefix)` for every non-blank line.
template <typename Handler>
void for_each_json_line(const std::filesystem::path& path, Handler handle) {
  std::ifstream in = open_for_read(path);
  std::string line;
  std::size_t number = 0;
  while (std::getline(in, line)) {
    ++number;
    if (blank(line)) continue;
    const std::string at = where(path, number);
    json parsed;
    try {
      parsed = json::parse(line);
    } catch (const json::parse_error& e) {
      throw DataError(at + "malformed JSON: " + e.what());
    }
    if (!parsed.is_object()) throw DataError(at + "expected a JSON object");
    handle(parsed, number, at);
  }
}

}  // namespace

DatasetPaths DatasetPaths::in_directory(const std::filesystem::path& dir) {
  return {dir / "documents.jsonl", dir / "train.jsonl", dir / "val.jsonl", dir / "test.jsonl"};
}

std::vector<DocumentRecord> read_documents(const std::filesystem::path& path) {
  std::vector<DocumentRecord> docs;
  std::unordered_map<std::string, std::size_t> seen;
  for_each_json_line(path, [&](const json& obj, std::size_t line, const std::string& at) {
    DocumentRecord doc = make_document(require_string(obj, "id", at), require_string(obj, "text", at));
    if (doc.tokens.empty()) throw DataError(at + "document '" + doc.id + "' has no tokens");
    if (auto [it, fresh] = seen.emplace(doc.id, line); !fresh) {
      throw DataError(at + "duplicate document id '" + doc.id + "' (lines " +
                      std::to_string(it->second) + " and " + std::to_string(line) + ")");
    }
    docs.push_back(std::move(doc));
  });
  return docs;
}

Split read_dialogs(const std::filesystem::path& path) {
  Split split;
  for_each_json_line(path, [&](const json& obj, std::size_t, const std::string& at) {
    DialogInstance inst;
    inst.id = require_string(obj, "id", at);
    const json& context = require_field(obj, "context", at);
    if (!context.is_array() || context.empty()) {
      throw DataError(at + "field 'context' must be a non-empty array");
    }
    for (const json& turn : context) {
      if (!turn.is_object()) throw DataError(at + "context turns must be objects");
      const std::string speaker = require_string(turn, "speaker", at);
      if (speaker != "S1" && speaker != "S2") {
        throw DataError(at + "speaker must be \"S1\" or \"S2\", got \"" + speaker + "\"");
      }
      inst.context.push_back(
          make_turn(speaker == "S1" ? Speaker::S1 : Speaker::S2, require_string(turn, "text", at)));
    }
    inst.response_text = require_string(obj, "response", at);
    if (auto it = obj.find("gold_doc_id"); it != obj.end() && !it->is_null()) {
      if (!it->is_string()) throw DataError(at + "field 'gold_doc_id' must be a string or null");
      inst.gold_doc_id = it->get<std::string>();
    }
    if (inst.response_text == kCannotAnswer) {
      ++split.dropped_cannot_answer;
      return;
    }
    inst.response = tokenize(inst.response_text);
    if (inst.response.empty()) throw DataError(at + "response has no tokens");
    split.instances.push_back(std::move(inst));
  });
  return split;
}

std::string document_to_json_line(const DocumentRecord& document) {
  ordered_json obj;
  obj["id"] = document.id;
  obj["text"] = document.text;
  return obj.dump();
}

std::string dialog_to_json_line(const DialogInstance& dialog) {
  ordered_json obj;
  obj["id"] = dialog.id;
  ordered_json context = ordered_json::array();
  for (const Turn& t : dialog.context) {
    ordered_json turn;
    turn["speaker"] = t.speaker == Speaker::S1 ? "S1" : "S2";
    turn["text"] = t.text;
    context.push_back(std::move(turn));
  }
  obj["context"] = std::move(context);
  obj["response"] = dialog.response_text;
  obj["gold_doc_id"] = dialog.gold_doc_id ? ordered_json(*dialog.gold_doc_id) : ordered_json(nullptr);
  return obj.dump();
}

void write_documents(const std::filesystem::path& path, std::span<const DocumentRecord> documents) {
  std::ofstream out = open_for_write(path);
  for (const DocumentRecord& d : documents) out << document_to_json_line(d) << '\n';
  if (!out) throw DataError("failed writing " + path.string());
}

void write_dialogs(const std::filesystem::path& path, std::span<const DialogInstance> dialogs) {
  std::ofstream out = open_for_write(path);
  for (const DialogInstance& d : dialogs) out << dialog_to_json_line(d) << '\n';
  if (!out) throw DataError("failed writing " + path.string());
}

Dataset load_dataset(const DatasetPaths& paths) {
  Dataset ds;
  ds.documents = read_documents(paths.documents);
  if (ds.documents.empty()) throw DataError(paths.documents.string() + ": no documents");
  ds.train = read_dialogs(paths.train);
  ds.validation = read_dialogs(paths.validation);
  ds.test = read_dialogs(paths.test);
  return ds;
}

Vocabulary build_vocabulary(const Dataset& dataset, std::size_t min_count) {
  std::vector<const Tokens*> sequences;
  for (const DocumentRecord& d : dataset.documents) sequences.push_back(&d.tokens);
  for (const DialogInstance& inst : dataset.train.instances) {
    for (const Turn& t : inst.context) sequences.push_back(&t.tokens);
    sequences.push_back(&inst.response);
  }
  return Vocabulary::build(sequences, min_count);
}

}  // namespace vrag
