// SPDX-License-Identifier: Apache-2.0
// Acceptance suite: one PASS/FAIL line per criterion, exit status 0 only when
// every selected criterion passes. Criteria numbers may be given as
// arguments to run a subset.
#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <limits>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "toy_problem.hpp"
#include "vrag/cli/commands.hpp"
#include "vrag/corpus/synthetic.hpp"
#include "vrag/decoding/beam_search.hpp"
#include "vrag/evaluation/studies.hpp"
#include "vrag/numerics/finite_diff.hpp"
#include "vrag/objectives/kl_truncation.hpp"
#include "vrag/objectives/objectives.hpp"

using namespace vrag;
using vrag::testing::make_toy;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

std::string fmt(const char* format, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, format, v);
  return buf;
}

struct Outcome {
  bool pass = false;
  std::string detail;
};

// Collects named sub-checks; the criterion passes when all of them do.
class Checks {
 public:
  void expect(bool ok, const std::string& what) {
    if (!ok) failures_.push_back(what);
    ++total_;
  }
  Outcome outcome(const std::string& summary) const {
    Outcome o;
    o.pass = failures_.empty();
    o.detail = summary;
    if (!failures_.empty()) {
      o.detail += "; failed: " + failures_.front();
      if (failures_.size() > 1) o.detail += " (+" + std::to_string(failures_.size() - 1) + " more)";
    }
    return o;
  }
  std::size_t total() const { return total_; }

 private:
  std::vector<std::string> failures_;
  std::size_t total_ = 0;
};

// ---------------------------------------------------------------------------
// Shared experiment on the synthetic corpus

constexpr std::uint64_t kSeeds[] = {0, 1, 2};

struct TrainedModel {
  Objective objective;
  std::uint64_t seed;
  ModelBundle initial;
  TrainResult result;
};

struct Experiment {
  StudyData data;
  ModelDims dims;
  TrainConfig train;
  std::vector<TrainedModel> models;
  double training_seconds = 0.0;

  std::vector<const TrainedModel*> of(Objective objective) const {
    std::vector<const TrainedModel*> out;
    for (const auto& m : models) {
      if (m.objective == objective) out.push_back(&m);
    }
    return out;
  }
  KnowledgeBase knowledge(const ModelBundle& bundle) const {
    return KnowledgeBase::build(data.documents, data.vocab, bundle.document);
  }
};

SyntheticSpec corpus_spec() {
  SyntheticSpec spec;  // 200 documents, 1000 / 200 / 200 instances
  spec.seed = 7;
  return spec;
}

StudyData prepare(const SyntheticSpec& spec) {
  const SyntheticCorpus corpus = generate_synthetic(spec);
  StudyData data;
  data.vocab = build_vocabulary(corpus.as_dataset());
  data.documents = corpus.documents;
  data.train = encode_instances(corpus.train, data.vocab);
  data.validation = encode_instances(corpus.validation, data.vocab);
  data.test = encode_instances(corpus.test, data.vocab);
  return data;
}

TrainConfig base_train_config() {
  TrainConfig c;
  c.k = 5;
  c.max_epochs = 30;
  c.patience = 5;
  c.batch_size = 16;
  c.optimizer.learning_rate = 1e-2;
  return c;
}

ModelDims base_dims(std::size_t vocab_size) {
  ModelDims d;
  d.vocab_size = vocab_size;
  d.embedding = 32;
  d.retrieval = 32;
  d.hidden = 32;
  return d;
}

void print_epoch(const std::string& tag, const EpochRecord& e) {
  std::cout << "    [" << tag << "] epoch " << e.epoch << " loss " << fmt("%.3f", e.loss) << " train prior R@1 "
            << fmt("%.3f", e.train_prior.r_at_1);
  if (e.train_posterior) std::cout << " posterior R@1 " << fmt("%.3f", e.train_posterior->r_at_1);
  std::cout << " val prior R@1 " << fmt("%.3f", e.validation_prior.r_at_1) << " (" << fmt("%.1f", e.seconds)
            << "s)\n";
  std::cout.flush();
}

const Experiment& experiment() {
  static std::unique_ptr<Experiment> ex;
  if (ex) return *ex;
  const auto start = Clock::now();
  ex = std::make_unique<Experiment>();
  ex->data = prepare(corpus_spec());
  ex->dims = base_dims(ex->data.vocab.size());
  ex->train = base_train_config();
  for (Objective objective : {Objective::Rag, Objective::Vrag}) {
    for (std::uint64_t seed : kSeeds) {
      TrainConfig config = ex->train;
      config.objective = objective;
      config.seed = seed;
      const ModelBundle initial = ModelBundle::init(ex->dims, seed);
      const KnowledgeBase kb = ex->knowledge(initial);
      const std::string tag = to_string(objective) + " s" + std::to_string(seed);
      TrainResult result = vrag::train(initial, kb, {ex->data.train, ex->data.validation}, config,
                                       [&](const EpochRecord& e) { print_epoch(tag, e); });
      ex->models.push_back({objective, seed, initial, std::move(result)});
    }
  }
  ex->training_seconds = seconds_since(start);
  return *ex;
}

double test_prior_r1(const Experiment& ex, const ModelBundle& bundle) {
  return measure_retrieval(bundle, ex.knowledge(bundle), ex.data.test, RetrievalQuery::Prior).r_at_1;
}

// ---------------------------------------------------------------------------
// Criteria

Outcome kl_truncation_bound() {
  const auto start = Clock::now();
  const std::vector<KlCheckCell> cells = verify_kl_truncation(KlCheckConfig{});
  const double elapsed = seconds_since(start);
  Checks checks;
  std::size_t trials = 0, violations = 0;
  double worst = 0.0;
  for (const auto& c : cells) {
    trials += c.trials;
    violations += c.violations;
    worst = std::max(worst, c.max_error / c.epsilon);
    checks.expect(c.trials == 1000, "cell with " + std::to_string(c.trials) + " trials");
    checks.expect(c.violations == 0, "N=" + std::to_string(c.support_size) + " eps=" + fmt("%g", c.epsilon));
  }
  checks.expect(cells.size() == 9, "expected 9 cells");
  checks.expect(elapsed < 30.0, "runtime " + fmt("%.1f", elapsed) + "s");
  return checks.outcome(std::to_string(violations) + "/" + std::to_string(trials) +
                        " violations, worst |KL-KLd|/eps " + fmt("%.3g", worst) + ", " + fmt("%.2f", elapsed) + "s");
}

Outcome exactness_at_full_support() {
  const auto start = Clock::now();
  Checks checks;
  double worst_rag = 0.0, worst_gap = -std::numeric_limits<double>::infinity();
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    const auto toy = make_toy(seed);
    checks.expect(toy.documents.size() == 8 && toy.vocab.size() == 50, "toy shape");
    for (const auto& inst : toy.instances) {
      const double exact = vrag::testing::brute_force_marginal(toy.bundle, toy.kb, inst);
      const double rag = rag_objective(toy.bundle, toy.kb, inst, 8);
      const double bound = elbo(toy.bundle, toy.kb, inst, 8).elbo;
      worst_rag = std::max(worst_rag, std::abs(rag - exact));
      worst_gap = std::max(worst_gap, bound - exact);
      checks.expect(std::abs(rag - exact) < 1e-10, "rag vs marginal, seed " + std::to_string(seed));
      checks.expect(bound <= exact + 1e-10, "elbo above marginal, seed " + std::to_string(seed));
    }
  }
  const double elapsed = seconds_since(start);
  checks.expect(elapsed < 1.0, "runtime " + fmt("%.2f", elapsed) + "s");
  return checks.outcome("max |rag-marginal| " + fmt("%.2e", worst_rag) + ", max elbo-marginal " +
                        fmt("%.3f", worst_gap) + ", " + fmt("%.3f", elapsed) + "s");
}

using TapeLoss = std::function<Var(GradientTape&)>;

// Every coordinate of every parameter in `params`, against central
// differences with h = 1e-5.
void check_all_coordinates(const TapeLoss& loss, const std::vector<Parameter*>& params, Checks& checks,
                           double& worst, std::size_t& coordinates) {
  GradientTape tape;
  const Gradients grads = tape.backward(loss(tape));
  const auto value = [&] {
    GradientTape t;
    return t.scalar(loss(t));
  };
  for (Parameter* p : params) {
    for (std::size_t i = 0; i < p->value.size(); ++i) {
      const double numeric = finite_diff_partial(value, p->value[i], 1e-5);
      const double analytic = grads.at(*p, i);
      const double err = relative_error(analytic, numeric);
      worst = std::max(worst, err);
      ++coordinates;
      checks.expect(err < 1e-3, p->name + "[" + std::to_string(i) + "] analytic " + fmt("%.3e", analytic) +
                                    " numeric " + fmt("%.3e", numeric));
    }
  }
}

Outcome gradient_correctness() {
  const auto start = Clock::now();
  Checks checks;
  auto toy = make_toy(23);
  double worst = 0.0;
  std::size_t coordinates = 0;
  const auto& inst = toy.instances.front();
  std::vector<Parameter*> trainable;
  for (Parameter* p : toy.bundle.prior.parameters()) trainable.push_back(p);
  for (Parameter* p : toy.bundle.posterior.parameters()) trainable.push_back(p);
  for (Parameter* p : toy.bundle.decoder.parameters()) trainable.push_back(p);

  const TapeLoss rag = [&](GradientTape& t) { return rag_objective(t, toy.bundle, toy.kb, inst, 8); };
  const TapeLoss bound = [&](GradientTape& t) { return elbo(t, toy.bundle, toy.kb, inst, 8).elbo; };
  for (const TapeLoss* loss : {&rag, &bound}) {
    check_all_coordinates(*loss, trainable, checks, worst, coordinates);
    GradientTape tape;
    const Gradients g = tape.backward((*loss)(tape));
    for (const Parameter* p : toy.bundle.document.parameters()) {
      const Tensor* grad = g.find(*p);
      const bool zero = grad == nullptr || std::all_of(grad->values().begin(), grad->values().end(),
                                                       [](double v) { return v == 0.0; });
      checks.expect(zero, "document encoder gradient on " + p->name);
    }
  }
  const double elapsed = seconds_since(start);
  checks.expect(elapsed < 60.0, "runtime " + fmt("%.1f", elapsed) + "s");
  return checks.outcome(std::to_string(coordinates) + " coordinates, max relative error " + fmt("%.2e", worst) +
                        ", document encoder gradients zero, " + fmt("%.2f", elapsed) + "s");
}

Outcome directional_replication() {
  const auto start = Clock::now();
  const Experiment& ex = experiment();
  Checks checks;

  std::vector<TrainLog> vrag_logs;
  for (const auto* m : ex.of(Objective::Vrag)) vrag_logs.push_back(m->result.log);
  const auto curve = recall_curve(vrag_logs);
  std::size_t compared = 0;
  std::ostringstream trace;
  for (const auto& point : curve) {
    trace << " " << point.epoch << ":" << fmt("%.3f", point.prior_r1) << "/"
          << fmt("%.3f", point.posterior_r1.value_or(-1.0));
    if (point.epoch <= 1) continue;
    ++compared;
    checks.expect(point.posterior_r1 && *point.posterior_r1 > point.prior_r1,
                  "(a) epoch " + std::to_string(point.epoch) + " posterior " +
                      fmt("%.4f", point.posterior_r1.value_or(-1.0)) + " <= prior " + fmt("%.4f", point.prior_r1));
  }
  checks.expect(compared > 0, "(a) no epochs after the first were logged");

  double init = 0.0, rag = 0.0, vrag = 0.0;
  for (const auto& m : ex.models) {
    const double r1 = test_prior_r1(ex, m.result.bundle);
    (m.objective == Objective::Rag ? rag : vrag) += r1 / std::size(kSeeds);
    if (m.objective == Objective::Vrag) init += test_prior_r1(ex, m.initial) / std::size(kSeeds);
  }
  checks.expect(vrag >= rag, "(b) VRAG prior " + fmt("%.4f", vrag) + " < RAG prior " + fmt("%.4f", rag));
  checks.expect(rag >= 2.0 * init && rag > init, "(c) RAG prior " + fmt("%.4f", rag) + " vs init " + fmt("%.4f", init));
  checks.expect(vrag >= 2.0 * init && vrag > init,
                "(c) VRAG prior " + fmt("%.4f", vrag) + " vs init " + fmt("%.4f", init));
  for (const auto& m : ex.models) {
    checks.expect(m.result.log.epochs.size() <= 30, "more than 30 epochs");
  }
  const double elapsed = seconds_since(start);
  checks.expect(elapsed < 20 * 60.0, "runtime " + fmt("%.0f", elapsed) + "s");
  std::cout << "    VRAG train R@1 prior/posterior by epoch:" << trace.str() << "\n";
  return checks.outcome("test prior R@1 init " + fmt("%.4f", init) + ", RAG " + fmt("%.4f", rag) + ", VRAG " +
                        fmt("%.4f", vrag) + "; " + std::to_string(compared) + " epochs compared, " +
                        fmt("%.0f", elapsed) + "s");
}

Outcome memorization_direction() {
  const Experiment& ex = experiment();
  const auto start = Clock::now();
  Checks checks;
  EvalOptions options;
  options.strategies = {Strategy::Top1};
  std::ostringstream summary;
  for (Objective objective : {Objective::Rag, Objective::Vrag}) {
    double before = 0.0, after = 0.0;
    for (const auto* m : ex.of(objective)) {
      const KnowledgeBase kb = ex.knowledge(m->result.bundle);
      const MemorizationReport r = memorization_study(m->result.bundle, kb, ex.data.test, ex.data.vocab, options);
      const MemorizationRow& row = r.row("b1", Strategy::Top1);
      before += row.before / std::size(kSeeds);
      after += row.after / std::size(kSeeds);
      std::cout << "    " << to_string(objective) << " s" << m->seed << ": B-1 " << fmt("%.4f", row.before)
                << " -> " << fmt("%.4f", row.after) << " after removing " << r.removed_documents.size()
                << " documents\n";
    }
    const auto change = percentage_change(before, after);
    checks.expect(change && *change < 0.0, to_string(objective) + " B-1 " + fmt("%.4f", before) + " -> " +
                                               fmt("%.4f", after));
    summary << to_string(objective) << " B-1 change " << (change ? fmt("%+.2f%%", *change) : std::string("n/a"))
            << "; ";
  }
  const double elapsed = seconds_since(start);
  checks.expect(elapsed < 5 * 60.0, "runtime " + fmt("%.0f", elapsed) + "s");
  return checks.outcome(summary.str() + fmt("%.0f", elapsed) + "s");
}

Outcome topk_direction() {
  const auto start = Clock::now();
  const StudyData data = prepare(corpus_spec());
  const ModelDims dims = base_dims(data.vocab.size());
  const std::vector<Objective> objectives{Objective::Vrag};
  const std::vector<std::size_t> ks{1, 3, 5};
  const std::vector<std::uint64_t> seeds(std::begin(kSeeds), std::end(kSeeds));
  const TopkAblation table = topk_ablation(data, dims, base_train_config(), objectives, ks, seeds);
  std::map<std::size_t, double> r3;
  for (const auto& a : table.averages()) r3[a.k] = a.r_at_3;
  Checks checks;
  checks.expect(r3[5] >= r3[3] - 0.01, "R@3(k=5) " + fmt("%.4f", r3[5]) + " < R@3(k=3) " + fmt("%.4f", r3[3]));
  checks.expect(r3[3] >= r3[1] - 0.01, "R@3(k=3) " + fmt("%.4f", r3[3]) + " < R@3(k=1) " + fmt("%.4f", r3[1]));
  const double elapsed = seconds_since(start);
  checks.expect(elapsed < 45 * 60.0, "runtime " + fmt("%.0f", elapsed) + "s");
  return checks.outcome("seed-averaged test R@3 k=5 " + fmt("%.4f", r3[5]) + ", k=3 " + fmt("%.4f", r3[3]) +
                        ", k=1 " + fmt("%.4f", r3[1]) + ", " + fmt("%.0f", elapsed) + "s");
}

// Greedy decoding scored only through decoder_log_likelihood on prefixes.
TokenIds greedy_oracle(const DecoderParams& d, const TokenIds& ctx, const TokenIds& doc, std::size_t max_length,
                       TokenId eos) {
  TokenIds out;
  double prefix = 0.0;
  while (out.size() < max_length) {
    TokenId best = 0;
    double best_lp = -std::numeric_limits<double>::infinity();
    for (TokenId t = 0; t < d.vocab_size(); ++t) {
      TokenIds seq = out;
      seq.push_back(t);
      const double lp = decoder_log_likelihood(d, ctx, doc, seq) - prefix;
      if (lp > best_lp) {
        best_lp = lp;
        best = t;
      }
    }
    out.push_back(best);
    prefix = decoder_log_likelihood(d, ctx, doc, out);
    if (best == eos) break;
  }
  return out;
}

Outcome decoding_contracts() {
  const auto start = Clock::now();
  Checks checks;

  std::size_t greedy_cases = 0;
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    const auto toy = make_toy(seed, 8.0, 10);
    DecodeConfig config;
    config.width = 1;
    config.max_length = 12;
    for (const auto& inst : toy.instances) {
      const TokenIds& doc = toy.kb.body(*inst.gold_doc_id);
      const Candidate c = beam_search(toy.bundle.decoder, inst.decoder_context, doc, config);
      checks.expect(c.tokens == greedy_oracle(toy.bundle.decoder, inst.decoder_context, doc, config.max_length,
                                              config.eos),
                    "width 1 differs from greedy, toy seed " + std::to_string(seed));
      ++greedy_cases;
    }
  }

  std::size_t enumerations = 0;
  const TokenIds ctx{0, 1, 1};
  const TokenIds doc{1, 0};
  for (std::uint64_t seed = 1; seed <= 50; ++seed) {
    DecoderParams d = DecoderParams::zeros(2, 3, 4);
    Rng rng(seed);
    d.fill_uniform(rng, -2.0, 2.0);
    d.bos = 0;
    DecodeConfig config;
    config.width = 4;
    config.max_length = 2;
    config.eos = 7;  // outside the vocabulary: every sequence has length 2
    TokenIds best;
    double best_ll = -std::numeric_limits<double>::infinity();
    for (TokenId a = 0; a < 2; ++a) {
      for (TokenId b = 0; b < 2; ++b) {
        const double ll = decoder_log_likelihood(d, ctx, doc, TokenIds{a, b});
        if (ll > best_ll) {
          best_ll = ll;
          best = {a, b};
        }
      }
    }
    checks.expect(beam_search(d, ctx, doc, config).tokens == best,
                  "beam misses exhaustive argmax, seed " + std::to_string(seed));
    ++enumerations;
  }

  const Experiment& ex = experiment();
  const auto* model = ex.of(Objective::Vrag).front();
  const KnowledgeBase kb = ex.knowledge(model->result.bundle);
  DecodeConfig one;
  one.k = 1;
  for (const auto& inst : ex.data.test) {
    const Candidate top1 = decode_top1(model->result.bundle, kb, inst, one);
    const TopKDecoding topk = decode_topk(model->result.bundle, kb, inst, one);
    checks.expect(topk.candidates.size() == 1 && topk.winner().candidate == top1,
                  "decode_topk(k=1) differs on " + inst.id);
  }
  const double elapsed = seconds_since(start);
  checks.expect(elapsed < 60.0, "runtime " + fmt("%.1f", elapsed) + "s");
  return checks.outcome(std::to_string(greedy_cases) + " greedy cases, " + std::to_string(enumerations) +
                        " exhaustive enumerations, " + std::to_string(ex.data.test.size()) +
                        " test instances top-k(1) = top-1, " + fmt("%.1f", elapsed) + "s");
}

Outcome metric_oracles() {
  Checks checks;
  const auto close = [&](double got, double want, const std::string& what) {
    checks.expect(std::abs(got - want) < 1e-6, what + " = " + fmt("%.9f", got) + ", want " + fmt("%.9f", want));
  };
  const Tokens same = tokenize("the cat sat on the mat");
  close(bleu(same, same, 1), 1.0, "BLEU-1 identity");
  close(bleu(same, same, 4), 1.0, "BLEU-4 identity");
  close(bleu(tokenize("the cat"), tokenize("the cat sat"), 1), 0.606531, "brevity penalty case");
  close(bleu(tokenize("the cat"), tokenize("the cat sat"), 4), 0.606531, "brevity penalty case, n=4");
  close(bleu(same, tokenize("the cat sat on a mat"), 4), 0.638943, "BLEU-4 one substitution");
  close(bleu(tokenize("the the the"), tokenize("the cat sat"), 1), 1.0 / 3.0, "clipped unigrams");
  close(bleu(tokenize("a b c"), tokenize("x y z"), 1), 0.0, "disjoint");

  const std::vector<double> b{0.4, 0.4, 0.4, 0.4};
  const std::vector<std::optional<std::string>> gold{"a", "b", "c", "d"};
  close(bleu_penalized(b, std::vector<std::string>{"a", "b", "c", "d"}, gold), 0.4, "BLEU-penalized all gold");
  close(bleu_penalized(b, std::vector<std::string>{"a", "x", "c", "x"}, gold), 0.2, "BLEU-penalized half gold");

  const std::vector<std::string> ranked{"d1", "d2", "gold", "d4", "d5", "d6"};
  checks.expect(!recall_at_k(ranked, "gold", 1) && recall_at_k(ranked, "gold", 3), "R@k example");
  close(reciprocal_rank(ranked, "gold"), 1.0 / 3.0, "MRR@5 rank 3");
  close(reciprocal_rank(std::vector<std::string>{"a", "b", "c", "d", "e", "gold"}, "gold"), 0.0, "MRR@5 rank 6");
  RetrievalTally tally;
  tally.add(std::vector<std::string>{"gold", "x"}, std::string("gold"));
  tally.add(std::vector<std::string>{"x", "gold"}, std::string("gold"));
  tally.add(std::vector<std::string>{"x", "y"}, std::string("gold"));
  tally.add(std::vector<std::string>{"x"}, std::nullopt);
  const RetrievalMetrics m = tally.result();
  close(m.r_at_1, 1.0 / 3.0, "R@1 tally");
  close(m.r_at_5, 2.0 / 3.0, "R@5 tally");
  close(m.mrr_at_5, 0.5, "MRR@5 tally");
  checks.expect(m.count == 3 && m.excluded == 1, "tally counts");
  const std::size_t examples = checks.total();

  const Experiment& ex = experiment();
  std::size_t runs = 0;
  for (const auto& model : ex.models) {
    const KnowledgeBase kb = ex.knowledge(model.result.bundle);
    const EvalReport report = evaluate(model.result.bundle, kb, ex.data.test, ex.data.vocab);
    for (const auto& s : report.strategies) {
      const std::string tag = to_string(model.objective) + " s" + std::to_string(model.seed) + " " +
                              to_string(s.strategy);
      checks.expect(s.metrics.bp1 <= s.metrics.b1, "BP-1 > B-1 for " + tag);
      checks.expect(s.metrics.bp4 <= s.metrics.b4, "BP-4 > B-4 for " + tag);
      ++runs;
    }
  }
  return checks.outcome(std::to_string(examples) + " hand-computed examples, BP <= BLEU on " + std::to_string(runs) +
                        " evaluation runs");
}

Outcome finetune_contract() {
  const Experiment& ex = experiment();
  Checks checks;
  std::ostringstream summary;
  for (const auto* m : ex.of(Objective::Vrag)) {
    const ModelBundle& joint = m->result.bundle;
    const KnowledgeBase kb = ex.knowledge(joint);
    TrainConfig config = ex.train;
    config.objective = Objective::Vrag;
    config.seed = m->seed;
    config.max_epochs = 10;
    const TrainResult tuned = finetune_decoder(joint, kb, {ex.data.train, ex.data.validation}, config);
    const std::string tag = "seed " + std::to_string(m->seed);
    const auto same = [](const ModelBundle& a, const ModelBundle& b) {
      return a.prior.embedding.value == b.prior.embedding.value && a.prior.projection.value == b.prior.projection.value &&
             a.prior.bias.value == b.prior.bias.value && a.posterior.embedding.value == b.posterior.embedding.value &&
             a.posterior.projection.value == b.posterior.projection.value &&
             a.posterior.bias.value == b.posterior.bias.value && a.document.embedding.value == b.document.embedding.value &&
             a.document.projection.value == b.document.projection.value && a.document.bias.value == b.document.bias.value;
    };
    checks.expect(same(joint, tuned.bundle), "retriever changed, " + tag);
    const double before = mean_log_likelihood(joint, kb, ex.data.validation, config.k);
    const double after = mean_log_likelihood(tuned.bundle, kb, ex.data.validation, config.k);
    checks.expect(after >= before, "validation log-likelihood fell, " + tag);
    summary << "s" << m->seed << " " << fmt("%.3f", before) << " -> " << fmt("%.3f", after) << "; ";
  }
  return checks.outcome("validation log-likelihood " + summary.str() + "retrievers bit-identical");
}

Outcome pipeline_determinism(const std::filesystem::path& work) {
  namespace fs = std::filesystem;
  fs::remove_all(work);
  fs::create_directories(work);
  nlohmann::json config = nlohmann::json::parse(R"({
    "model": {"embedding": 16, "retrieval": 16, "hidden": 24},
    "train": {"max_epochs": 3, "learning_rate": 0.01},
    "seeds": [5],
    "synthetic": {"documents": 40, "train_instances": 120, "validation_instances": 30, "test_instances": 30}
  })");
  config["paths"] = {{"data_dir", (work / "data").string()}, {"output_dir", (work / "runs").string()}};
  const fs::path config_path = work / "config.json";
  std::ofstream(config_path) << config.dump(2);

  const auto run = [&](const std::string& command) {
    const std::string path = config_path.string();
    const char* argv[] = {"vrag", command.c_str(), "--config", path.c_str()};
    std::ostringstream out, err;
    return run_cli(4, argv, out, err);
  };
  const ExperimentConfig parsed = ExperimentConfig::load(config_path);
  const fs::path report_path = parsed.run_dir(5) / "eval_report.json";

  Checks checks;
  std::vector<nlohmann::json> reports;
  for (int pass = 0; pass < 2; ++pass) {
    fs::remove_all(work / "data");
    fs::remove_all(work / "runs");
    checks.expect(run("generate-data") == 0, "generate-data failed");
    checks.expect(run("train") == 0, "train failed");
    checks.expect(run("evaluate") == 0, "evaluate failed");
    std::ifstream f(report_path);
    if (!f) {
      checks.expect(false, "missing " + report_path.string());
      return checks.outcome("pipeline did not produce a report");
    }
    nlohmann::json j = nlohmann::json::parse(f);
    checks.expect(j["metadata"].contains("timestamp"), "report has no timestamp");
    j["metadata"].erase("timestamp");
    reports.push_back(std::move(j));
  }
  checks.expect(reports[0] == reports[1], "metric JSON differs between runs");
  fs::remove_all(work);
  return checks.outcome("two generate-data/train/evaluate runs gave identical metric JSON");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Acceptance criteria"};
  std::vector<int> selected;
  std::string work = (std::filesystem::temp_directory_path() / "vrag-acceptance").string();
  app.add_option("criteria", selected, "Criteria to run (default: all)")->check(CLI::Range(1, 10));
  app.add_option("--work", work, "Scratch directory for the pipeline run");
  CLI11_PARSE(app, argc, argv);
  if (selected.empty()) selected = {1, 2, 3, 4, 5, 6, 7, 8, 9, 10};
  std::sort(selected.begin(), selected.end());
  selected.erase(std::unique(selected.begin(), selected.end()), selected.end());

  const std::map<int, std::pair<std::string, std::function<Outcome()>>> criteria = {
      {1, {"KL truncation bound", kl_truncation_bound}},
      {2, {"exactness at full support", exactness_at_full_support}},
      {3, {"gradient correctness", gradient_correctness}},
      {4, {"posterior beats prior, trained priors beat init", directional_replication}},
      {5, {"memorization direction", memorization_direction}},
      {6, {"top-k ablation direction", topk_direction}},
      {7, {"decoding contracts", decoding_contracts}},
      {8, {"metric oracles", metric_oracles}},
      {9, {"fine-tuning contract", finetune_contract}},
      {10, {"pipeline determinism", [&] { return pipeline_determinism(work); }}},
  };

  std::vector<std::string> lines;
  bool all = true;
  for (int n : selected) {
    const auto& [name, run] = criteria.at(n);
    std::cout << "running criterion " << n << ": " << name << "\n";
    std::cout.flush();
    Outcome o;
    try {
      o = run();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    all = all && o.pass;
    const std::string line =
        "criterion " + std::to_string(n) + " " + (o.pass ? "PASS" : "FAIL") + "  " + name + ": " + o.detail;
    std::cout << line << "\n";
    lines.push_back(line);
  }
  std::cout << "\nsummary\n";
  for (const auto& l : lines) std::cout << l << "\n";
  return all ? 0 : 1;
}
