// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <span>
#include <string>
#include <vector>

#include "vrag/corpus/text.hpp"
#include "vrag/numerics/random.hpp"
#include "vrag/numerics/tape.hpp"

namespace vrag {

/// Conditional response model p(y | z, x). Each step computes
///   h_j = tanh(A e(y_{j-1}) + B meanpool(x) + C meanpool(z) + b_h)
///   log p(y_j | ...) = log_softmax(W_o h_j + b_o)[y_j]
/// with y_0 = bos. Context and document share the decoder embedding table.
struct DecoderParams {
  Parameter embedding;    // |V| x d_emb
  Parameter prev;         // A: hidden x d_emb
  Parameter context;      // B: hidden x d_emb
  Parameter document;     // C: hidden x d_emb
  Parameter hidden_bias;  // hidden
  Parameter output;       // W_o: |V| x hidden
  Parameter output_bias;  // |V|
  TokenId bos = id_of(Marker::Bos);

  static DecoderParams zeros(std::size_t vocab, std::size_t emb, std::size_t hidden);

  std::size_t vocab_size() const { return output.value.rows(); }
  std::size_t hidden_dim() const { return hidden_bias.value.size(); }

  /// Throws std::invalid_argument when the tensor shapes disagree.
  void validate() const;
  void fill_uniform(Rng& rng, double lo, double hi);
  void set_frozen(bool frozen);

  std::vector<Parameter*> parameters() {
    return {&embedding, &prev, &context, &document, &hidden_bias, &output, &output_bias};
  }
  std::vector<const Parameter*> parameters() const {
    return {&embedding, &prev, &context, &document, &hidden_bias, &output, &output_bias};
  }
};

/// log p(y | z_i, x) for every document z_i; context and response terms are
/// built once and shared.
std::vector<Var> decoder_log_likelihoods(GradientTape& tape, const DecoderParams& params,
                                         std::span<const TokenId> context,
                                         std::span<const std::span<const TokenId>> documents,
                                         std::span<const TokenId> response);

Var decoder_log_likelihood(GradientTape& tape, const DecoderParams& params, std::span<const TokenId> context,
                           std::span<const TokenId> document, std::span<const TokenId> response);

double decoder_log_likelihood(const DecoderParams& params, std::span<const TokenId> context,
                              std::span<const TokenId> document, std::span<const TokenId> response);

/// Step-wise evaluation with the context and document fixed; the
/// incremental form used by beam search.
class DecoderSession {
 public:
  DecoderSession(const DecoderParams& params, std::span<const TokenId> context, std::span<const TokenId> document);

  std::size_t vocab_size() const { return params_->vocab_size(); }
  TokenId bos() const { return params_->bos; }

  /// log p(. | prev, z, x) over the whole vocabulary.
  std::vector<double> next_log_probs(TokenId prev) const;

  /// Sum of step log-probabilities of `response` starting from bos.
  double score(std::span<const TokenId> response) const;

 private:
  const DecoderParams* params_;
  std::vector<double> base_;  // B meanpool(x) + C meanpool(z) + b_h
};

}  // namespace vrag
