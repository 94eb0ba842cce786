// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <span>
#include <string>
#include <vector>

#include "vrag/corpus/text.hpp"
#include "vrag/numerics/random.hpp"
#include "vrag/numerics/tape.hpp"

namespace vrag {

/// Mean-pool + linear retrieval encoder: W * meanpool(E[ids]) + b.
/// Used for the prior g(x), the posterior h(x, y) and the frozen document
/// encoder f(z).
struct EncoderParams {
  Parameter embedding;   // |V| x d_emb
  Parameter projection;  // d x d_emb
  Parameter bias;        // d

  static EncoderParams zeros(const std::string& prefix, std::size_t vocab, std::size_t emb, std::size_t out);

  std::size_t vocab_size() const { return embedding.value.rows(); }
  std::size_t output_dim() const { return bias.value.size(); }

  /// Throws std::invalid_argument on empty input and std::out_of_range on an
  /// id outside the vocabulary.
  std::vector<double> embed(std::span<const TokenId> ids) const;
  Var embed(GradientTape& tape, std::span<const TokenId> ids) const;

  void set_frozen(bool frozen);
  void fill_uniform(Rng& rng, double lo, double hi);

  std::vector<Parameter*> parameters() { return {&embedding, &projection, &bias}; }
  std::vector<const Parameter*> parameters() const { return {&embedding, &projection, &bias}; }
};

// Range-checks ids against a table height before pooling.
void check_token_ids(std::span<const TokenId> ids, std::size_t vocab_size);

}  // namespace vrag
