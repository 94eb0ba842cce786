// SPDX-License-Identifier: Apache-2.0
#include "vrag/training/trainer.hpp"

#include <chrono>
#include <limits>
#include <numeric>

#include "vrag/errors.hpp"

namespace vrag {
namespace {

using LossFn = std::function<Var(GradientTape&, const ModelBundle&, const EncodedInstance&)>;
using MonitorFn = std::function<double(const ModelBundle&)>;

struct Loop {
  Phase phase = Phase::Joint;
  LossFn loss;
  MonitorFn monitor;
  std::string metric_name;
  bool baseline_is_candidate = false;
};

void require_gold(std::span<const EncodedInstance> validation) {
  for (const EncodedInstance& inst : validation) {
    if (inst.gold_doc_id) return;
  }
  throw DataError("the validation split has no gold document ids, so validation recall is undefined");
}

TrainResult run(const ModelBundle& initial, const KnowledgeBase& kb, const TrainingSplits& splits,
                const TrainConfig& config, const Loop& loop, const EpochCallback& on_epoch) {
  config.validate();
  if (splits.train.empty()) throw DataError("the training split is empty");

  TrainResult result{initial, {}};
  ModelBundle& bundle = result.bundle;
  const std::vector<Parameter*> params = bundle.parameters();
  OptimizerState state = OptimizerState::for_parameters(params);
  Rng rng(config.seed);
  const bool posterior = config.objective == Objective::Vrag;

  TrainLog& log = result.log;
  log.monitored_metric = loop.metric_name;
  log.baseline = loop.monitor(bundle);
  log.best_value = loop.baseline_is_candidate ? log.baseline : -std::numeric_limits<double>::infinity();
  ModelBundle best = bundle;

  std::vector<std::size_t> order(splits.train.size());
  std::iota(order.begin(), order.end(), 0);
  std::size_t since_best = 0;

  for (std::size_t epoch = 1; epoch <= config.max_epochs; ++epoch) {
    const auto start = std::chrono::steady_clock::now();
    rng.shuffle(std::span<std::size_t>(order));
    double loss_total = 0.0;
    for (std::size_t begin = 0; begin < order.size(); begin += config.batch_size) {
      const std::size_t end = std::min(order.size(), begin + config.batch_size);
      Gradients grads;
      for (std::size_t i = begin; i < end; ++i) {
        GradientTape tape;
        const Var loss = loop.loss(tape, bundle, splits.train[order[i]]);
        loss_total += tape.scalar(loss);
        tape.backward(loss, grads);
      }
      grads.scale(1.0 / static_cast<double>(end - begin));
      adamw_step(params, grads, state, config.optimizer);
    }

    EpochRecord record;
    record.phase = loop.phase;
    record.epoch = epoch;
    record.loss = loss_total / static_cast<double>(order.size());
    if (config.log_train_retrieval) {
      record.train_prior = measure_retrieval(bundle, kb, splits.train, RetrievalQuery::Prior);
      if (posterior) record.train_posterior = measure_retrieval(bundle, kb, splits.train, RetrievalQuery::Posterior);
    }
    record.validation_prior = measure_retrieval(bundle, kb, splits.validation, RetrievalQuery::Prior);
    if (posterior) {
      record.validation_posterior = measure_retrieval(bundle, kb, splits.validation, RetrievalQuery::Posterior);
    }
    record.monitored = loop.monitor(bundle);
    record.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    log.epochs.push_back(record);
    if (on_epoch) on_epoch(record);

    if (record.monitored > log.best_value) {
      log.best_value = record.monitored;
      log.best_epoch = epoch;
      best = bundle;
      since_best = 0;
    } else if (++since_best >= config.patience) {
      log.stopped_early = epoch < config.max_epochs;
      break;
    }
  }
  result.bundle = std::move(best);
  return result;
}

}  // namespace

std::string to_string(Objective objective) { return objective == Objective::Rag ? "rag" : "vrag"; }

Objective parse_objective(std::string_view text) {
  if (text == "rag") return Objective::Rag;
  if (text == "vrag") return Objective::Vrag;
  throw ConfigError("unknown objective '" + std::string(text) + "' (expected rag or vrag)");
}

void TrainConfig::validate() const {
  if (k == 0) throw ConfigError("k must be at least 1");
  if (max_epochs == 0) throw ConfigError("max_epochs must be at least 1");
  if (batch_size == 0) throw ConfigError("batch_size must be at least 1");
  optimizer.validate();
}

RetrievalMetrics measure_retrieval(const ModelBundle& bundle, const KnowledgeBase& kb,
                                   std::span<const EncodedInstance> instances, RetrievalQuery query) {
  RetrievalTally tally;
  const std::size_t depth = std::min<std::size_t>(5, kb.index.size());
  for (const EncodedInstance& inst : instances) {
    const std::vector<double> q = query == RetrievalQuery::Prior ? bundle.prior.embed(inst.prior_input)
                                                                 : bundle.posterior.embed(inst.posterior_input);
    std::vector<std::string> ranked;
    for (const ScoredDocument& d : kb.index.search(q, depth)) ranked.push_back(d.id);
    tally.add(ranked, inst.gold_doc_id);
  }
  return tally.result();
}

double mean_log_likelihood(const ModelBundle& bundle, const KnowledgeBase& kb,
                           std::span<const EncodedInstance> instances, std::size_t k) {
  if (instances.empty()) return 0.0;
  double total = 0.0;
  for (const EncodedInstance& inst : instances) total += rag_objective(bundle, kb, inst, k);
  return total / static_cast<double>(instances.size());
}

TrainResult train(const ModelBundle& initial, const KnowledgeBase& kb, const TrainingSplits& splits,
                  const TrainConfig& config, const EpochCallback& on_epoch) {
  require_gold(splits.validation);
  Loop loop;
  loop.phase = Phase::Joint;
  loop.metric_name = "validation_prior_r_at_1";
  const std::size_t k = config.k;
  if (config.objective == Objective::Rag) {
    loop.loss = [&kb, k](GradientTape& tape, const ModelBundle& b, const EncodedInstance& inst) {
      return tape.scale(rag_objective(tape, b, kb, inst, k), -1.0);
    };
  } else {
    loop.loss = [&kb, k](GradientTape& tape, const ModelBundle& b, const EncodedInstance& inst) {
      return tape.scale(elbo(tape, b, kb, inst, k).elbo, -1.0);
    };
  }
  loop.monitor = [&kb, &splits](const ModelBundle& b) {
    return measure_retrieval(b, kb, splits.validation, RetrievalQuery::Prior).r_at_1;
  };
  return run(initial, kb, splits, config, loop, on_epoch);
}

TrainResult finetune_decoder(const ModelBundle& trained, const KnowledgeBase& kb, const TrainingSplits& splits,
                             const TrainConfig& config, const EpochCallback& on_epoch) {
  require_gold(splits.validation);
  ModelBundle start = trained;
  start.prior.set_frozen(true);
  start.posterior.set_frozen(true);
  start.document.set_frozen(true);
  start.decoder.set_frozen(false);

  Loop loop;
  loop.phase = Phase::Finetune;
  loop.metric_name = "validation_mean_log_likelihood";
  loop.baseline_is_candidate = true;
  const std::size_t k = config.k;
  loop.loss = [&kb, k](GradientTape& tape, const ModelBundle& b, const EncodedInstance& inst) {
    return tape.scale(rag_objective(tape, b, kb, inst, k), -1.0);
  };
  loop.monitor = [&kb, &splits, k](const ModelBundle& b) { return mean_log_likelihood(b, kb, splits.validation, k); };
  TrainResult result = run(start, kb, splits, config, loop, on_epoch);

  const auto source = trained.parameters();
  const auto target = result.bundle.parameters();
  for (std::size_t i = 0; i < source.size(); ++i) target[i]->frozen = source[i]->frozen;
  return result;
}

}  // namespace vrag
