// SPDX-License-Identifier: Apache-2.0
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <stdexcept>

#include "vrag/errors.hpp"
#include "vrag/models/model_bundle.hpp"
#include "vrag/numerics/finite_diff.hpp"

using namespace vrag;

namespace {

EncoderParams identity_encoder(std::size_t vocab, std::size_t dim, Rng& rng) {
  EncoderParams p = EncoderParams::zeros("enc", vocab, dim, dim);
  for (double& v : p.embedding.value.values()) v = rng.uniform(-1, 1);
  for (std::size_t i = 0; i < dim; ++i) p.projection.value[i * dim + i] = 1.0;
  return p;
}

// V=2, one-dimensional embedding and hidden state; values chosen by hand.
DecoderParams hand_decoder() {
  DecoderParams d = DecoderParams::zeros(2, 1, 1);
  d.embedding.value = Tensor::matrix(2, 1, {1.0, 2.0});
  d.prev.value = Tensor::matrix(1, 1, {0.5});
  d.context.value = Tensor::matrix(1, 1, {1.0});
  d.document.value = Tensor::matrix(1, 1, {-1.0});
  d.hidden_bias.value = Tensor::vector({0.1});
  d.output.value = Tensor::matrix(2, 1, {1.0, -1.0});
  d.output_bias.value = Tensor::vector({0.0, 0.2});
  d.bos = 0;
  return d;
}

ModelDims small_dims() {
  ModelDims dims;
  dims.vocab_size = 12;
  dims.embedding = 4;
  dims.retrieval = 3;
  dims.hidden = 5;
  return dims;
}

}  // namespace

TEST_CASE("encoder examples") {
  Rng rng(1);
  const EncoderParams enc = identity_encoder(5, 3, rng);
  const TokenIds one = {2};
  const auto e = enc.embed(one);
  for (std::size_t c = 0; c < 3; ++c) CHECK(e[c] == enc.embedding.value.row(2)[c]);

  EncoderParams shifted = enc;
  for (double& v : shifted.projection.value.values()) v = rng.uniform(-1, 1);
  for (double& v : shifted.bias.value.values()) v = rng.uniform(-1, 1);
  const TokenIds two = {1, 4};
  const auto pooled = shifted.embed(two);
  for (std::size_t r = 0; r < 3; ++r) {
    double expected = shifted.bias.value[r];
    for (std::size_t c = 0; c < 3; ++c) {
      const double mean = 0.5 * (shifted.embedding.value.row(1)[c] + shifted.embedding.value.row(4)[c]);
      expected += shifted.projection.value.row(r)[c] * mean;
    }
    CHECK(pooled[r] == doctest::Approx(expected).epsilon(1e-14));
  }

  const TokenIds order_a = {0, 3, 3, 1};
  const TokenIds order_b = {3, 1, 0, 3};
  const auto a = shifted.embed(order_a);
  const auto b = shifted.embed(order_b);
  for (std::size_t r = 0; r < 3; ++r) CHECK(a[r] == doctest::Approx(b[r]).epsilon(1e-15));

  CHECK_THROWS_AS(enc.embed(TokenIds{}), std::invalid_argument);
  CHECK_THROWS_AS(enc.embed(TokenIds{5}), std::out_of_range);
}

TEST_CASE("tape encoder matches the plain forward pass") {
  const ModelBundle b = ModelBundle::init(small_dims(), 4);
  const TokenIds ids = {0, 7, 7, 11, 3};
  GradientTape tape;
  const Var v = b.prior.embed(tape, ids);
  const auto plain = b.prior.embed(ids);
  for (std::size_t i = 0; i < plain.size(); ++i) CHECK(tape.value(v)[i] == doctest::Approx(plain[i]).epsilon(1e-15));
}

TEST_CASE("prior and posterior are separate functions") {
  const ModelBundle b = ModelBundle::init(small_dims(), 4);
  const TokenIds ctx = {0, 2, 5, 1};
  const TokenIds ctx_response = {0, 2, 5, 4, 9, 1};
  CHECK(b.prior.embed(ctx) != b.posterior.embed(ctx_response));

  EncoderParams copied = b.prior;
  CHECK(copied.embed(ctx) == b.prior.embed(ctx));
  CHECK(&copied.embedding != &b.prior.embedding);
  CHECK(b.prior.embedding.value.values().data() != b.posterior.embedding.value.values().data());
}

TEST_CASE("document encoder receives no gradient") {
  const ModelBundle b = ModelBundle::init(small_dims(), 2);
  CHECK(b.document.embedding.frozen);
  CHECK(b.document.projection.frozen);
  CHECK(b.document.bias.frozen);
  const TokenIds doc = {3, 4, 5};
  const TokenIds ctx = {1, 2};
  GradientTape tape;
  const Var loss = tape.dot(b.document.embed(tape, doc), b.prior.embed(tape, ctx));
  const Gradients g = tape.backward(loss);
  for (const Parameter* p : b.document.parameters()) CHECK(g.find(*p) == nullptr);
  CHECK(g.find(b.prior.embedding) != nullptr);
  CHECK(b.document.embed(doc) == b.document.embed(doc));
}

TEST_CASE("decoder with all-zero parameters is uniform") {
  DecoderParams d = DecoderParams::zeros(2, 3, 4);
  d.bos = 0;
  const TokenIds x = {0, 1};
  const TokenIds z = {1};
  const TokenIds y = {1, 0, 1};
  CHECK(decoder_log_likelihood(d, x, z, y) == doctest::Approx(3 * std::log(0.5)).epsilon(1e-15));
}

TEST_CASE("decoder hand-computed forward pass") {
  const DecoderParams d = hand_decoder();
  const TokenIds x = {1};
  const TokenIds z = {0};
  CHECK(decoder_log_likelihood(d, x, z, TokenIds{1}) == doctest::Approx(-1.8200880021422225).epsilon(1e-13));
  CHECK(decoder_log_likelihood(d, x, z, TokenIds{1, 0}) == doctest::Approx(-1.9816640377431443).epsilon(1e-13));

  GradientTape tape;
  const Var v = decoder_log_likelihood(tape, d, x, z, TokenIds{1, 0});
  CHECK(tape.scalar(v) == doctest::Approx(-1.9816640377431443).epsilon(1e-13));
}

TEST_CASE("decoder log-likelihood is finite and non-positive") {
  Rng rng(3);
  for (int trial = 0; trial < 50; ++trial) {
    ModelDims dims = small_dims();
    dims.vocab_size = 3 + rng.below(20);
    ModelBundle b = ModelBundle::init(dims, rng.next_u64());
    for (Parameter* p : b.decoder.parameters()) {
      for (double& v : p->value.values()) v *= rng.uniform(0, 30);
    }
    auto random_ids = [&](std::size_t n) {
      TokenIds ids(n);
      for (auto& i : ids) i = static_cast<TokenId>(rng.below(dims.vocab_size));
      return ids;
    };
    const TokenIds x = random_ids(1 + rng.below(6));
    const TokenIds z = random_ids(1 + rng.below(6));
    const TokenIds y = random_ids(1 + rng.below(6));
    const double ll = decoder_log_likelihood(b.decoder, x, z, y);
    CHECK(std::isfinite(ll));
    CHECK(ll <= 0.0);
    GradientTape tape;
    CHECK(tape.scalar(decoder_log_likelihood(tape, b.decoder, x, z, y)) == doctest::Approx(ll).epsilon(1e-12));
  }
}

TEST_CASE("decoder gradients match finite differences") {
  ModelDims dims = small_dims();
  ModelBundle b = ModelBundle::init(dims, 17);
  Rng rng(5);
  for (Parameter* p : b.decoder.parameters()) {
    for (double& v : p->value.values()) v = rng.uniform(-1, 1);
  }
  const TokenIds x = {1, 4, 4, 9};
  const TokenIds z1 = {2, 3, 11};
  const TokenIds z2 = {7};
  const TokenIds y = {5, 8, 6};
  const std::span<const TokenId> docs[] = {z1, z2};

  GradientTape tape;
  const auto lls = decoder_log_likelihoods(tape, b.decoder, x, docs, y);
  const Var loss = tape.add(lls[0], tape.scale(lls[1], 0.7));
  const Gradients g = tape.backward(loss);

  auto f = [&] {
    return decoder_log_likelihood(b.decoder, x, z1, y) + 0.7 * decoder_log_likelihood(b.decoder, x, z2, y);
  };
  for (Parameter* p : b.decoder.parameters()) {
    const std::vector<double> numeric = finite_diff_gradient(f, p->value.values(), 1e-5);
    for (std::size_t i = 0; i < numeric.size(); ++i) {
      INFO(p->name << "[" << i << "]");
      CHECK(relative_error(g.at(*p, i), numeric[i]) < 1e-3);
    }
  }
}

TEST_CASE("init is seeded") {
  const ModelBundle a = ModelBundle::init(small_dims(), 9);
  const ModelBundle b = ModelBundle::init(small_dims(), 9);
  const ModelBundle c = ModelBundle::init(small_dims(), 10);
  CHECK(a == b);
  CHECK_FALSE(a == c);
  for (const Parameter* p : a.parameters()) {
    for (double v : p->value.values()) {
      CHECK(v >= -0.1);
      CHECK(v < 0.1);
    }
  }
  CHECK_FALSE(a.prior.embedding.frozen);
  CHECK(a.document.embedding.frozen);
  CHECK_THROWS_AS(ModelBundle::init(ModelDims{}, 1), std::invalid_argument);
}

TEST_CASE("checkpoint round-trips bit-exactly") {
  ModelBundle b = ModelBundle::init(small_dims(), 33);
  b.decoder.output.value[3] = std::nextafter(1.0 / 3.0, 1.0);
  const auto path = std::filesystem::temp_directory_path() / "vrag_models_test.ckpt";
  b.save(path);
  const ModelBundle loaded = ModelBundle::load(path);
  CHECK(loaded == b);
  CHECK(loaded.document.embedding.frozen);
  {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    out << "garbage";
  }
  CHECK_THROWS_AS(ModelBundle::load(path), DataError);
  std::filesystem::remove(path);
}
