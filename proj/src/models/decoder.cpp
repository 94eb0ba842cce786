// SPDX-License-Identifier: Apache-2.0
#include "vrag/models/decoder.hpp"

#include <cmath>
#include <stdexcept>

#include "vrag/models/encoder.hpp"

namespace vrag {
namespace {

std::vector<double> pooled(const Tensor& table, std::span<const TokenId> ids) {
  check_token_ids(ids, table.rows());
  std::vector<double> out(table.cols(), 0.0);
  const double w = 1.0 / static_cast<double>(ids.size());
  for (TokenId id : ids) {
    const auto row = table.row(id);
    for (std::size_t c = 0; c < out.size(); ++c) out[c] += w * row[c];
  }
  return out;
}

void require_shape(const Parameter& p, std::vector<std::size_t> shape) {
  if (p.value.shape() != shape) {
    throw std::invalid_argument(p.name + " has shape " + shape_string(p.value.shape()) + ", expected " +
                                shape_string(shape));
  }
}

}  // namespace

DecoderParams DecoderParams::zeros(std::size_t vocab, std::size_t emb, std::size_t hidden) {
  DecoderParams p;
  p.embedding = {"decoder.embedding", Tensor({vocab, emb})};
  p.prev = {"decoder.prev", Tensor({hidden, emb})};
  p.context = {"decoder.context", Tensor({hidden, emb})};
  p.document = {"decoder.document", Tensor({hidden, emb})};
  p.hidden_bias = {"decoder.hidden_bias", Tensor({hidden})};
  p.output = {"decoder.output", Tensor({vocab, hidden})};
  p.output_bias = {"decoder.output_bias", Tensor({vocab})};
  return p;
}

void DecoderParams::validate() const {
  if (embedding.value.rank() != 2 || hidden_bias.value.rank() != 1) {
    throw std::invalid_argument("decoder embedding must be a matrix and hidden bias a vector");
  }
  const std::size_t v = embedding.value.rows();
  const std::size_t e = embedding.value.cols();
  const std::size_t h = hidden_bias.value.size();
  require_shape(prev, {h, e});
  require_shape(context, {h, e});
  require_shape(document, {h, e});
  require_shape(output, {v, h});
  require_shape(output_bias, {v});
  if (bos >= v) throw std::invalid_argument("decoder bos id " + std::to_string(bos) + " outside vocabulary");
}

void DecoderParams::fill_uniform(Rng& rng, double lo, double hi) {
  for (Parameter* p : parameters()) {
    for (double& v : p->value.values()) v = rng.uniform(lo, hi);
  }
}

void DecoderParams::set_frozen(bool frozen) {
  for (Parameter* p : parameters()) p->frozen = frozen;
}

std::vector<Var> decoder_log_likelihoods(GradientTape& tape, const DecoderParams& params,
                                         std::span<const TokenId> context,
                                         std::span<const std::span<const TokenId>> documents,
                                         std::span<const TokenId> response) {
  params.validate();
  if (response.empty()) throw std::invalid_argument("cannot score an empty response");
  check_token_ids(context, params.vocab_size());
  check_token_ids(response, params.vocab_size());

  const Var table = tape.parameter(params.embedding);
  const Var out_w = tape.parameter(params.output);
  const Var out_b = tape.parameter(params.output_bias);
  const Var shared = tape.add(tape.matvec(tape.parameter(params.context), tape.mean_pool(table, context)),
                              tape.parameter(params.hidden_bias));

  const Var a = tape.parameter(params.prev);
  std::vector<Var> prev_terms;
  prev_terms.reserve(response.size());
  TokenId prev = params.bos;
  for (TokenId y : response) {
    prev_terms.push_back(tape.matvec(a, tape.gather_row(table, prev)));
    prev = y;
  }

  const Var c = tape.parameter(params.document);
  std::vector<Var> out;
  out.reserve(documents.size());
  std::vector<Var> steps(response.size());
  for (std::span<const TokenId> z : documents) {
    check_token_ids(z, params.vocab_size());
    const Var base = tape.add(shared, tape.matvec(c, tape.mean_pool(table, z)));
    for (std::size_t j = 0; j < response.size(); ++j) {
      const Var hidden = tape.tanh(tape.add(prev_terms[j], base));
      const Var logits = tape.add(tape.matvec(out_w, hidden), out_b);
      steps[j] = tape.pick(tape.log_softmax(logits), response[j]);
    }
    out.push_back(tape.sum(tape.stack(steps)));
  }
  return out;
}

Var decoder_log_likelihood(GradientTape& tape, const DecoderParams& params, std::span<const TokenId> context,
                           std::span<const TokenId> document, std::span<const TokenId> response) {
  const std::span<const TokenId> docs[] = {document};
  return decoder_log_likelihoods(tape, params, context, docs, response).front();
}

double decoder_log_likelihood(const DecoderParams& params, std::span<const TokenId> context,
                              std::span<const TokenId> document, std::span<const TokenId> response) {
  if (response.empty()) throw std::invalid_argument("cannot score an empty response");
  return DecoderSession(params, context, document).score(response);
}

DecoderSession::DecoderSession(const DecoderParams& params, std::span<const TokenId> context,
                               std::span<const TokenId> document)
    : params_(&params) {
  params.validate();
  const std::vector<double> px = pooled(params.embedding.value, context);
  const std::vector<double> pz = pooled(params.embedding.value, document);
  const std::size_t h = params.hidden_dim();
  base_.assign(h, 0.0);
  std::vector<double> cz(h);
  matvec(params.context.value, px, base_);
  matvec(params.document.value, pz, cz);
  for (std::size_t i = 0; i < h; ++i) base_[i] += cz[i] + params.hidden_bias.value[i];
}

std::vector<double> DecoderSession::next_log_probs(TokenId prev) const {
  const DecoderParams& p = *params_;
  if (prev >= p.vocab_size()) throw std::out_of_range("previous token id outside vocabulary");
  const std::size_t h = p.hidden_dim();
  std::vector<double> hidden(h);
  matvec(p.prev.value, p.embedding.value.row(prev), hidden);
  for (std::size_t i = 0; i < h; ++i) hidden[i] = std::tanh(hidden[i] + base_[i]);
  std::vector<double> logits(p.vocab_size());
  matvec(p.output.value, hidden, logits);
  for (std::size_t i = 0; i < logits.size(); ++i) logits[i] += p.output_bias.value[i];
  return log_softmax(logits);
}

double DecoderSession::score(std::span<const TokenId> response) const {
  check_token_ids(response, vocab_size());
  double total = 0.0;
  TokenId prev = bos();
  for (TokenId y : response) {
    total += next_log_probs(prev)[y];
    prev = y;
  }
  return total;
}

}  // namespace vrag
