// SPDX-License-Identifier: Apache-2.0
#include <doctest.h>

#include <cmath>

#include "toy_problem.hpp"
#include "vrag/errors.hpp"
#include "vrag/training/trainer.hpp"

using namespace vrag;
using vrag::testing::make_toy;
using vrag::testing::ToyProblem;

namespace {

Parameter scalar_parameter(double value) { return Parameter{"theta", Tensor::vector({value}), false}; }

Gradients gradient_of(const Parameter& p, double g) {
  Gradients grads;
  grads.accumulator(p)[0] = g;
  return grads;
}

struct ToySplits {
  ToyProblem toy;
  std::vector<EncodedInstance> train;
  std::vector<EncodedInstance> validation;
  TrainingSplits splits() const { return {train, validation}; }
};

ToySplits toy_splits(std::uint64_t seed) {
  ToySplits s{make_toy(seed, 3.0, 24), {}, {}};
  s.train.assign(s.toy.instances.begin(), s.toy.instances.begin() + 16);
  s.validation.assign(s.toy.instances.begin() + 16, s.toy.instances.end());
  return s;
}

TrainConfig toy_config(Objective objective) {
  TrainConfig c;
  c.objective = objective;
  c.k = 3;
  c.optimizer.learning_rate = 0.02;
  c.max_epochs = 4;
  c.batch_size = 4;
  c.seed = 9;
  return c;
}

double mean_negative_elbo(const ModelBundle& b, const KnowledgeBase& kb, std::span<const EncodedInstance> xs,
                          std::size_t k) {
  double total = 0.0;
  for (const auto& x : xs) total -= elbo(b, kb, x, k).elbo;
  return total / static_cast<double>(xs.size());
}

}  // namespace

TEST_CASE("adamw with zero gradient and no decay leaves parameters alone") {
  Parameter p = scalar_parameter(0.7);
  std::vector<Parameter*> params = {&p};
  OptimizerState state = OptimizerState::for_parameters(params);
  AdamWConfig config;
  for (int i = 0; i < 5; ++i) adamw_step(params, gradient_of(p, 0.0), state, config);
  CHECK(p.value[0] == 0.7);
  CHECK(state.step == 5);
}

TEST_CASE("adamw first step moves by the learning rate") {
  Parameter p = scalar_parameter(2.0);
  std::vector<Parameter*> params = {&p};
  OptimizerState state = OptimizerState::for_parameters(params);
  AdamWConfig config;
  config.learning_rate = 0.1;
  adamw_step(params, gradient_of(p, 1.0), state, config);
  CHECK(p.value[0] == doctest::Approx(2.0 - 0.1 / (1.0 + 1e-8)).epsilon(1e-15));
  CHECK(state.first[0][0] == doctest::Approx(0.1));
  CHECK(state.second[0][0] == doctest::Approx(0.001));
}

TEST_CASE("adamw decoupled decay shrinks geometrically") {
  Parameter p = scalar_parameter(3.0);
  std::vector<Parameter*> params = {&p};
  OptimizerState state = OptimizerState::for_parameters(params);
  AdamWConfig config;
  config.learning_rate = 0.1;
  config.weight_decay = 0.5;
  double expected = 3.0;
  for (int i = 0; i < 4; ++i) {
    adamw_step(params, Gradients{}, state, config);
    expected *= 1.0 - 0.1 * 0.5;
    CHECK(p.value[0] == doctest::Approx(expected).epsilon(1e-14));
  }
}

TEST_CASE("adamw skips frozen parameters and checks its state") {
  Parameter p = scalar_parameter(1.0);
  p.frozen = true;
  Parameter other = scalar_parameter(1.0);
  std::vector<Parameter*> params = {&p};
  OptimizerState state = OptimizerState::for_parameters(params);
  AdamWConfig config;
  config.weight_decay = 0.1;
  adamw_step(params, gradient_of(p, 5.0), state, config);
  CHECK(p.value[0] == 1.0);

  std::vector<Parameter*> two = {&p, &other};
  CHECK_THROWS_AS(adamw_step(two, Gradients{}, state, config), std::invalid_argument);

  AdamWConfig bad;
  bad.learning_rate = 0.0;
  CHECK_THROWS_AS(bad.validate(), ConfigError);
  bad = AdamWConfig{};
  bad.beta2 = 1.0;
  CHECK_THROWS_AS(bad.validate(), ConfigError);
}

TEST_CASE("objective names and config validation") {
  CHECK(parse_objective("rag") == Objective::Rag);
  CHECK(parse_objective("vrag") == Objective::Vrag);
  CHECK(to_string(Objective::Vrag) == "vrag");
  CHECK_THROWS_AS(parse_objective("elbo"), ConfigError);
  TrainConfig c;
  c.k = 0;
  CHECK_THROWS_AS(c.validate(), ConfigError);
  c = TrainConfig{};
  c.batch_size = 0;
  CHECK_THROWS_AS(c.validate(), ConfigError);
}

TEST_CASE("training is deterministic and never touches the document encoder") {
  const ToySplits s = toy_splits(41);
  for (Objective objective : {Objective::Rag, Objective::Vrag}) {
    const TrainConfig config = toy_config(objective);
    const TrainResult a = train(s.toy.bundle, s.toy.kb, s.splits(), config);
    const TrainResult b = train(s.toy.bundle, s.toy.kb, s.splits(), config);
    CHECK(a.bundle == b.bundle);
    CHECK(a.log.to_json() == b.log.to_json());
    CHECK(a.bundle.document.embedding.value == s.toy.bundle.document.embedding.value);
    CHECK(a.bundle.document.projection.value == s.toy.bundle.document.projection.value);
    CHECK(a.bundle.document.bias.value == s.toy.bundle.document.bias.value);
    CHECK_FALSE(a.bundle.prior.projection.value == s.toy.bundle.prior.projection.value);
    CHECK(a.log.epochs.size() >= 1);
    for (const auto& e : a.log.epochs) CHECK(e.train_posterior.has_value() == (objective == Objective::Vrag));
  }
}

TEST_CASE("the returned bundle is the best validation epoch") {
  const ToySplits s = toy_splits(43);
  TrainConfig config = toy_config(Objective::Vrag);
  config.max_epochs = 6;
  config.patience = 6;
  const TrainResult r = train(s.toy.bundle, s.toy.kb, s.splits(), config);
  REQUIRE(r.log.best_epoch >= 1);
  double best = -1.0;
  for (const auto& e : r.log.epochs) best = std::max(best, e.monitored);
  CHECK(r.log.best_value == best);
  CHECK(r.log.epochs[r.log.best_epoch - 1].monitored == best);
  CHECK(measure_retrieval(r.bundle, s.toy.kb, s.validation, RetrievalQuery::Prior).r_at_1 == best);
}

TEST_CASE("patience 0 stops at the first epoch without improvement") {
  const ToySplits s = toy_splits(47);
  TrainConfig config = toy_config(Objective::Rag);
  config.max_epochs = 12;
  config.patience = 0;
  const TrainResult r = train(s.toy.bundle, s.toy.kb, s.splits(), config);
  const auto& epochs = r.log.epochs;
  double best = -1.0;
  for (std::size_t i = 0; i + 1 < epochs.size(); ++i) {
    CHECK(epochs[i].monitored > best);
    best = epochs[i].monitored;
  }
  if (epochs.size() < config.max_epochs) CHECK(epochs.back().monitored <= best);
}

TEST_CASE("one small full-batch step of vrag lowers the negative elbo") {
  const ToySplits s = toy_splits(53);
  TrainConfig config = toy_config(Objective::Vrag);
  config.k = 8;
  config.max_epochs = 1;
  config.batch_size = s.train.size();
  config.optimizer.learning_rate = 1e-3;
  const double before = mean_negative_elbo(s.toy.bundle, s.toy.kb, s.train, 8);
  const TrainResult r = train(s.toy.bundle, s.toy.kb, s.splits(), config);
  const double after = mean_negative_elbo(r.bundle, s.toy.kb, s.train, 8);
  CHECK(after < before);
  CHECK(r.log.epochs[0].loss == doctest::Approx(before).epsilon(1e-12));
}

TEST_CASE("training needs gold documents on validation") {
  ToySplits s = toy_splits(59);
  for (auto& v : s.validation) v.gold_doc_id.reset();
  CHECK_THROWS_AS(train(s.toy.bundle, s.toy.kb, s.splits(), toy_config(Objective::Rag)), DataError);
  CHECK_THROWS_AS(finetune_decoder(s.toy.bundle, s.toy.kb, s.splits(), toy_config(Objective::Rag)), DataError);
}

TEST_CASE("decoder fine-tuning keeps the retriever fixed") {
  const ToySplits s = toy_splits(61);
  const TrainResult joint = train(s.toy.bundle, s.toy.kb, s.splits(), toy_config(Objective::Vrag));
  TrainConfig config = toy_config(Objective::Vrag);
  config.max_epochs = 5;
  const TrainResult tuned = finetune_decoder(joint.bundle, s.toy.kb, s.splits(), config);

  CHECK(tuned.bundle.prior.embedding.value == joint.bundle.prior.embedding.value);
  CHECK(tuned.bundle.prior.projection.value == joint.bundle.prior.projection.value);
  CHECK(tuned.bundle.prior.bias.value == joint.bundle.prior.bias.value);
  CHECK(tuned.bundle.posterior.embedding.value == joint.bundle.posterior.embedding.value);
  CHECK(tuned.bundle.document.embedding.value == joint.bundle.document.embedding.value);
  const auto before_flags = joint.bundle.parameters();
  const auto after_flags = tuned.bundle.parameters();
  for (std::size_t i = 0; i < before_flags.size(); ++i) CHECK(before_flags[i]->frozen == after_flags[i]->frozen);

  const double before = mean_log_likelihood(joint.bundle, s.toy.kb, s.validation, config.k);
  const double after = mean_log_likelihood(tuned.bundle, s.toy.kb, s.validation, config.k);
  CHECK(tuned.log.baseline == before);
  CHECK(after >= before - 1e-9);
  CHECK(after == tuned.log.best_value);

  for (const auto& inst : s.validation) {
    CHECK(prior_truncated(joint.bundle, s.toy.kb, inst, 8).support ==
          prior_truncated(tuned.bundle, s.toy.kb, inst, 8).support);
  }
  for (const auto& e : tuned.log.epochs) CHECK(e.phase == Phase::Finetune);
}

TEST_CASE("train log CSV layout") {
  TrainLog log;
  EpochRecord e;
  e.epoch = 1;
  e.loss = 2.5;
  e.train_prior.r_at_1 = 0.25;
  log.epochs.push_back(e);
  e.epoch = 2;
  e.phase = Phase::Finetune;
  e.train_posterior = RetrievalMetrics{0.5, 0.5, 0.75, 0.6, 4, 0};
  log.epochs.push_back(e);

  const std::string plain = log.to_csv(false);
  CHECK(plain.rfind("epoch,loss,prior_r1,prior_r5,prior_mrr5,post_r1,post_r5,post_mrr5,seconds\n", 0) == 0);
  CHECK(plain.find("1,2.500000,0.250000,0.000000,0.000000,,,,0.000000\n") != std::string::npos);
  CHECK(plain.find("2,2.500000,0.250000,0.000000,0.000000,0.500000,0.750000,0.600000,0.000000\n") !=
        std::string::npos);
  const std::string phased = log.to_csv(true);
  CHECK(phased.rfind("phase,epoch,", 0) == 0);
  CHECK(phased.find("\njoint,1,") != std::string::npos);
  CHECK(phased.find("\nfinetune,2,") != std::string::npos);

  const auto j = log.to_json();
  CHECK(j["epochs"].size() == 2);
  CHECK(j["epochs"][0]["train_posterior"].is_null());
  CHECK_FALSE(j["epochs"][0].contains("seconds"));
}
