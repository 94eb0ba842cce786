// SPDX-License-Identifier: Apache-2.0
#include "vrag/objectives/knowledge.hpp"

#include <stdexcept>

namespace vrag {

KnowledgeBase KnowledgeBase::build(std::span<const DocumentRecord> documents, const Vocabulary& vocab,
                                   const EncoderParams& document_encoder, const EncodingBudget& budget) {
  KnowledgeBase kb;
  kb.index = DocumentIndex::build(documents, [&](const DocumentRecord& d) {
    return document_encoder.embed(encode_document(d, vocab, budget));
  });
  for (const DocumentRecord& d : documents) kb.bodies.emplace(d.id, encode_document_body(d, vocab, budget));
  return kb;
}

const TokenIds& KnowledgeBase::body(const std::string& id) const {
  auto it = bodies.find(id);
  if (it == bodies.end()) throw std::invalid_argument("no decoder tokens for document '" + id + "'");
  return it->second;
}

KnowledgeBase KnowledgeBase::without(std::span<const std::string> ids) const {
  KnowledgeBase kb;
  kb.index = index.remove(ids);
  for (const std::string& id : kb.index.ids()) kb.bodies.emplace(id, body(id));
  return kb;
}

}  // namespace vrag
