// SPDX-License-Identifier: Apache-2.0
#include "vrag/corpus/encoding.hpp"

#include <algorithm>
#include <stdexcept>

namespace vrag {
namespace {

TokenId speaker_marker(Speaker s) {
  return s == Speaker::S1 ? id_of(Marker::Speaker1) : id_of(Marker::Speaker2);
}

// Turn markers and tokens, oldest turns dropped first so the result holds at
// most `available` ids.
TokenIds flatten_context(std::span<const Turn> context, const Vocabulary& vocab,
                         std::size_t available) {
  if (available < 2) throw std::invalid_argument("context budget too small for one turn");
  std::vector<TokenIds> segments;
  segments.reserve(context.size());
  for (const Turn& turn : context) {
    TokenIds seg;
    seg.reserve(turn.tokens.size() + 1);
    seg.push_back(speaker_marker(turn.speaker));
    for (const std::string& t : turn.tokens) seg.push_back(vocab.id(t));
    segments.push_back(std::move(seg));
  }
  std::size_t total = 0;
  for (const TokenIds& s : segments) total += s.size();
  std::size_t first = 0;
  while (total > available && segments.size() - first > 1) {
    total -= segments[first].size();
    ++first;
  }
  TokenIds out;
  out.reserve(std::min(total, available));
  for (std::size_t i = first; i < segments.size(); ++i) {
    const TokenIds& seg = segments[i];
    if (seg.size() > available) {
      out.push_back(seg.front());
      out.insert(out.end(), seg.end() - static_cast<std::ptrdiff_t>(available - 1), seg.end());
    } else {
      out.insert(out.end(), seg.begin(), seg.end());
    }
  }
  return out;
}

std::size_t response_limit(const EncodingBudget& budget) {
  if (budget.response < 2) throw std::invalid_argument("response budget must be at least 2");
  return budget.response - 1;
}

}  // namespace

Turn make_turn(Speaker speaker, std::string text) {
  Turn t{speaker, std::move(text), {}};
  t.tokens = tokenize(t.text);
  return t;
}

DocumentRecord make_document(std::string id, std::string text) {
  DocumentRecord d{std::move(id), std::move(text), {}};
  d.tokens = tokenize(d.text);
  return d;
}

TokenIds encode_context(std::span<const Turn> context, const Vocabulary& vocab,
                        std::size_t max_length) {
  if (max_length < 2) throw std::invalid_argument("context length limit below 2");
  TokenIds out;
  out.push_back(id_of(Marker::Cls));
  if (!context.empty()) {
    TokenIds body = flatten_context(context, vocab, max_length - 2);
    out.insert(out.end(), body.begin(), body.end());
  }
  out.push_back(id_of(Marker::Sep));
  return out;
}

TokenIds encode_context_response(std::span<const Turn> context, std::span<const std::string> response,
                                 const Vocabulary& vocab, const EncodingBudget& budget) {
  TokenIds out = encode_context(context, vocab, budget.context);
  out.back() = id_of(Marker::ResponseSep);
  const std::size_t n = std::min(response.size(), response_limit(budget));
  for (std::size_t i = 0; i < n; ++i) out.push_back(vocab.id(response[i]));
  out.push_back(id_of(Marker::Sep));
  return out;
}

TokenIds encode_document_body(const DocumentRecord& document, const Vocabulary& vocab,
                              const EncodingBudget& budget) {
  const std::size_t n = std::min(document.tokens.size(), budget.document);
  TokenIds out;
  out.reserve(n);
  for (std::size_t i = 0; i < n; ++i) out.push_back(vocab.id(document.tokens[i]));
  return out;
}

TokenIds encode_decoder_input(std::span<const Turn> context, const DocumentRecord& document,
                              const Vocabulary& vocab, const EncodingBudget& budget) {
  TokenIds out;
  out.push_back(id_of(Marker::Bos));
  if (!context.empty()) {
    TokenIds body = flatten_context(context, vocab, budget.context);
    out.insert(out.end(), body.begin(), body.end());
  }
  out.push_back(id_of(Marker::KnowledgeSep));
  TokenIds doc = encode_document_body(document, vocab, budget);
  out.insert(out.end(), doc.begin(), doc.end());
  out.push_back(id_of(Marker::Eos));
  return out;
}

TokenIds encode_document(const DocumentRecord& document, const Vocabulary& vocab,
                         const EncodingBudget& budget) {
  if (budget.document < 3) throw std::invalid_argument("document budget below 3");
  EncodingBudget inner = budget;
  inner.document = budget.document - 2;
  TokenIds out;
  out.push_back(id_of(Marker::Cls));
  TokenIds body = encode_document_body(document, vocab, inner);
  out.insert(out.end(), body.begin(), body.end());
  out.push_back(id_of(Marker::Sep));
  return out;
}

TokenIds encode_response(std::span<const std::string> response, const Vocabulary& vocab,
                         const EncodingBudget& budget) {
  const std::size_t n = std::min(response.size(), response_limit(budget));
  TokenIds out;
  out.reserve(n + 1);
  for (std::size_t i = 0; i < n; ++i) out.push_back(vocab.id(response[i]));
  out.push_back(id_of(Marker::Eos));
  return out;
}

DecoderInput split_decoder_input(std::span<const TokenId> encoded) {
  if (encoded.size() < 3 || encoded.front() != id_of(Marker::Bos) ||
      encoded.back() != id_of(Marker::Eos)) {
    throw std::invalid_argument("decoder input must be framed by <bos> ... <eos>");
  }
  const auto body = encoded.subspan(1, encoded.size() - 2);
  const auto sep = std::find(body.begin(), body.end(), id_of(Marker::KnowledgeSep));
  if (sep == body.end()) throw std::invalid_argument("decoder input has no <KSEP>");
  return DecoderInput{TokenIds(body.begin(), sep), TokenIds(sep + 1, body.end())};
}

EncodedInstance encode_instance(const DialogInstance& instance, const Vocabulary& vocab,
                                const EncodingBudget& budget) {
  EncodedInstance e;
  e.id = instance.id;
  e.prior_input = encode_context(instance.context, vocab, budget.context);
  e.posterior_input = encode_context_response(instance.context, instance.response, vocab, budget);
  e.decoder_context = flatten_context(instance.context, vocab, budget.context);
  e.response = encode_response(instance.response, vocab, budget);
  e.reference = instance.response;
  e.gold_doc_id = instance.gold_doc_id;
  return e;
}

std::vector<EncodedInstance> encode_instances(std::span<const DialogInstance> instances,
                                              const Vocabulary& vocab,
                                              const EncodingBudget& budget) {
  std::vector<EncodedInstance> out;
  out.reserve(instances.size());
  for (const DialogInstance& inst : instances) out.push_back(encode_instance(inst, vocab, budget));
  return out;
}

}  // namespace vrag
