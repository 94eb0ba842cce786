// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <span>
#include <string>
#include <unordered_map>

#include "vrag/corpus/encoding.hpp"
#include "vrag/models/encoder.hpp"
#include "vrag/retrieval/document_index.hpp"

namespace vrag {

/// The retrieval index together with the token ids each document contributes
/// to the decoder input.
struct KnowledgeBase {
  DocumentIndex index;
  std::unordered_map<std::string, TokenIds> bodies;

  /// Index rows are f([CLS] z [SEP]) under the frozen document encoder.
  static KnowledgeBase build(std::span<const DocumentRecord> documents, const Vocabulary& vocab,
                             const EncoderParams& document_encoder, const EncodingBudget& budget = {});

  /// Throws std::invalid_argument for an id without a body.
  const TokenIds& body(const std::string& id) const;

  /// Same knowledge minus `ids`; see DocumentIndex::remove.
  KnowledgeBase without(std::span<const std::string> ids) const;
};

}  // namespace vrag
