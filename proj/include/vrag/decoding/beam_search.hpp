// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <span>
#include <string>
#include <vector>

#include "vrag/corpus/encoding.hpp"
#include "vrag/models/model_bundle.hpp"
#include "vrag/objectives/knowledge.hpp"

namespace vrag {

struct DecodeConfig {
  std::size_t width = 3;
  std::size_t max_length = 32;
  std::size_t k = 5;
  /// Finishing token. An id outside the vocabulary disables early finishing.
  TokenId eos = id_of(Marker::Eos);

  /// Throws ConfigError.
  void validate() const;
};

struct Candidate {
  TokenIds tokens;  // ends with eos or has max_length tokens
  double log_prob = 0.0;
  std::string document_id;

  bool operator==(const Candidate&) const = default;
};

/// Plain beam search, no length normalization. At every step the `width`
/// best expansions (score descending, then token sequence ascending) are
/// kept; those ending in eos retire. Returns the best retired or
/// max-length hypothesis under the same order.
Candidate beam_search(const DecoderParams& decoder, std::span<const TokenId> context,
                      std::span<const TokenId> document, const DecodeConfig& config);

/// Conditions on the prior's top-1 document. Throws std::invalid_argument on
/// an empty index.
Candidate decode_top1(const ModelBundle& bundle, const KnowledgeBase& kb, const EncodedInstance& instance,
                      const DecodeConfig& config);

struct ScoredCandidate {
  Candidate candidate;
  double log_prior = 0.0;  // log p̂(z|x) over the retrieved k
  double score = 0.0;      // log_prior + candidate.log_prob
};

struct TopKDecoding {
  std::vector<ScoredCandidate> candidates;  // retrieval order
  std::size_t best = 0;

  const ScoredCandidate& winner() const { return candidates.at(best); }
};

/// Index of the highest log_prior + log_likelihood; ties go to the smaller
/// document id.
std::size_t fast_decoding_winner(std::span<const double> log_prior, std::span<const double> log_likelihoods,
                                 std::span<const std::string> document_ids);

/// One beam search per retrieved document, scored against p̂ over the k.
TopKDecoding decode_topk(const ModelBundle& bundle, const KnowledgeBase& kb, const EncodedInstance& instance,
                         const DecodeConfig& config);

/// Candidate tokens as strings, without the trailing eos.
Tokens detokenize(const Candidate& candidate, const Vocabulary& vocab, TokenId eos = id_of(Marker::Eos));

}  // namespace vrag
