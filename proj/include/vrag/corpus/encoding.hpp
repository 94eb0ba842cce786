// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "vrag/corpus/text.hpp"

namespace vrag {

enum class Speaker { S1, S2 };

struct Turn {
  Speaker speaker = Speaker::S1;
  std::string text;
  Tokens tokens;
};

/// One context/response pair. At least one context turn; the response is
/// non-empty after tokenization.
struct DialogInstance {
  std::string id;
  std::vector<Turn> context;
  std::string response_text;
  Tokens response;
  std::optional<std::string> gold_doc_id;
};

struct DocumentRecord {
  std::string id;
  std::string text;
  Tokens tokens;
};

Turn make_turn(Speaker speaker, std::string text);
DocumentRecord make_document(std::string id, std::string text);

/// Length limits in ids. The response limit includes the trailing <eos>.
struct EncodingBudget {
  std::size_t context = 64;
  std::size_t document = 64;
  std::size_t response = 32;
};

/// [CLS] <S1> x1 <S2> x2 ... [SEP]. Whole turns are dropped from the front
/// until the sequence fits in `max_length`; a single oversized turn keeps its
/// speaker marker and its most recent tokens.
TokenIds encode_context(std::span<const Turn> context, const Vocabulary& vocab,
                        std::size_t max_length = EncodingBudget{}.context);

/// encode_context without its [SEP], then <RSEP> y [SEP]. Context truncation
/// never removes response tokens.
TokenIds encode_context_response(std::span<const Turn> context, std::span<const std::string> response,
                                 const Vocabulary& vocab, const EncodingBudget& budget = {});

/// <bos> context <KSEP> document <eos>. The context has turn markers but no
/// [CLS]/[SEP]; the document is cut from the end to fit its budget.
TokenIds encode_decoder_input(std::span<const Turn> context, const DocumentRecord& document,
                              const Vocabulary& vocab, const EncodingBudget& budget = {});

/// [CLS] document [SEP] for the document encoder.
TokenIds encode_document(const DocumentRecord& document, const Vocabulary& vocab,
                         const EncodingBudget& budget = {});

/// Document token ids as they appear in the decoder input.
TokenIds encode_document_body(const DocumentRecord& document, const Vocabulary& vocab,
                              const EncodingBudget& budget = {});

/// Response ids terminated by <eos>.
TokenIds encode_response(std::span<const std::string> response, const Vocabulary& vocab,
                         const EncodingBudget& budget = {});

/// Inverse of encode_decoder_input: the context and document id segments.
struct DecoderInput {
  TokenIds context;
  TokenIds document;
};
DecoderInput split_decoder_input(std::span<const TokenId> encoded);

/// Every id sequence the models need for one instance.
struct EncodedInstance {
  std::string id;
  TokenIds prior_input;
  TokenIds posterior_input;
  TokenIds decoder_context;
  TokenIds response;
  Tokens reference;
  std::optional<std::string> gold_doc_id;
};

EncodedInstance encode_instance(const DialogInstance& instance, const Vocabulary& vocab,
                                const EncodingBudget& budget = {});
std::vector<EncodedInstance> encode_instances(std::span<const DialogInstance> instances,
                                              const Vocabulary& vocab,
                                              const EncodingBudget& budget = {});

}  // namespace vrag
