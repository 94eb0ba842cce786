// SPDX-License-Identifier: Apache-2.0
#include "vrag/models/encoder.hpp"

#include <stdexcept>

namespace vrag {

void check_token_ids(std::span<const TokenId> ids, std::size_t vocab_size) {
  if (ids.empty()) throw std::invalid_argument("cannot encode an empty id sequence");
  for (TokenId id : ids) {
    if (id >= vocab_size) {
      throw std::out_of_range("token id " + std::to_string(id) + " outside vocabulary of " +
                              std::to_string(vocab_size));
    }
  }
}

EncoderParams EncoderParams::zeros(const std::string& prefix, std::size_t vocab, std::size_t emb,
                                   std::size_t out) {
  EncoderParams p;
  p.embedding = {prefix + ".embedding", Tensor({vocab, emb})};
  p.projection = {prefix + ".projection", Tensor({out, emb})};
  p.bias = {prefix + ".bias", Tensor({out})};
  return p;
}

std::vector<double> EncoderParams::embed(std::span<const TokenId> ids) const {
  check_token_ids(ids, vocab_size());
  const Tensor& table = embedding.value;
  std::vector<double> pooled(table.cols(), 0.0);
  const double w = 1.0 / static_cast<double>(ids.size());
  for (TokenId id : ids) {
    const auto row = table.row(id);
    for (std::size_t c = 0; c < pooled.size(); ++c) pooled[c] += w * row[c];
  }
  std::vector<double> out(output_dim());
  matvec(projection.value, pooled, out);
  for (std::size_t i = 0; i < out.size(); ++i) out[i] += bias.value[i];
  return out;
}

Var EncoderParams::embed(GradientTape& tape, std::span<const TokenId> ids) const {
  check_token_ids(ids, vocab_size());
  const Var pooled = tape.mean_pool(tape.parameter(embedding), ids);
  return tape.add(tape.matvec(tape.parameter(projection), pooled), tape.parameter(bias));
}

void EncoderParams::set_frozen(bool frozen) {
  for (Parameter* p : parameters()) p->frozen = frozen;
}

void EncoderParams::fill_uniform(Rng& rng, double lo, double hi) {
  for (Parameter* p : parameters()) {
    for (double& v : p->value.values()) v = rng.uniform(lo, hi);
  }
}

}  // namespace vrag
