// SPDX-License-Identifier: Apache-2.0
#include "vrag/evaluation/evaluate.hpp"

#include <algorithm>
#include <stdexcept>

#include "vrag/errors.hpp"

namespace vrag {

std::string to_string(Strategy strategy) { return strategy == Strategy::Top1 ? "top1" : "topk"; }

Strategy parse_strategy(std::string_view text) {
  if (text == "top1") return Strategy::Top1;
  if (text == "topk") return Strategy::TopK;
  throw ConfigError("unknown decoding strategy '" + std::string(text) + "' (expected top1 or topk)");
}

const StrategyResult& EvalReport::result(Strategy strategy) const {
  for (const StrategyResult& r : strategies) {
    if (r.strategy == strategy) return r;
  }
  throw std::out_of_range("strategy " + to_string(strategy) + " was not evaluated");
}

namespace {

GenerationMetrics summarize(std::span<const Prediction> predictions,
                            std::span<const std::optional<std::string>> gold) {
  std::vector<double> b1, b4;
  std::vector<std::string> docs;
  for (const Prediction& p : predictions) {
    b1.push_back(p.b1);
    b4.push_back(p.b4);
    docs.push_back(p.document_id);
  }
  GenerationMetrics m;
  m.b1 = mean(b1);
  m.b4 = mean(b4);
  m.bp1 = bleu_penalized(b1, docs, gold);
  m.bp4 = bleu_penalized(b4, docs, gold);
  return m;
}

Prediction predict(const EncodedInstance& inst, const Candidate& c, const Vocabulary& vocab, TokenId eos) {
  Prediction p;
  p.instance_id = inst.id;
  p.hypothesis = detokenize(c, vocab, eos);
  p.document_id = c.document_id;
  p.b1 = bleu(p.hypothesis, inst.reference, 1);
  p.b4 = bleu(p.hypothesis, inst.reference, 4);
  return p;
}

}  // namespace

EvalReport evaluate(const ModelBundle& bundle, const KnowledgeBase& kb, std::span<const EncodedInstance> instances,
                    const Vocabulary& vocab, const EvalOptions& options) {
  options.decode.validate();
  if (options.strategies.empty()) throw ConfigError("no decoding strategy selected");
  if (kb.index.empty()) throw std::invalid_argument("evaluating against an empty document index");
  for (const EncodedInstance& inst : instances) {
    if (inst.reference.empty()) throw DataError("instance " + inst.id + " has an empty reference response");
  }

  const bool want_top1 =
      std::find(options.strategies.begin(), options.strategies.end(), Strategy::Top1) != options.strategies.end();
  const bool want_topk =
      std::find(options.strategies.begin(), options.strategies.end(), Strategy::TopK) != options.strategies.end();

  RetrievalTally tally;
  std::vector<Prediction> top1, topk;
  std::vector<std::optional<std::string>> gold;
  for (const EncodedInstance& inst : instances) {
    const TopKResult ranked = kb.index.search(bundle.prior.embed(inst.prior_input), 5);
    std::vector<std::string> ids;
    for (const ScoredDocument& d : ranked) ids.push_back(d.id);
    tally.add(ids, inst.gold_doc_id);
    gold.push_back(inst.gold_doc_id);

    if (want_topk) {
      const TopKDecoding d = decode_topk(bundle, kb, inst, options.decode);
      topk.push_back(predict(inst, d.winner().candidate, vocab, options.decode.eos));
      // The first candidate is the beam on the prior's best document.
      if (want_top1) top1.push_back(predict(inst, d.candidates.front().candidate, vocab, options.decode.eos));
    } else {
      top1.push_back(predict(inst, decode_top1(bundle, kb, inst, options.decode), vocab, options.decode.eos));
    }
  }

  EvalReport report;
  report.retrieval = tally.result();
  report.instances = instances.size();
  report.k = options.decode.k;
  for (Strategy s : options.strategies) {
    if (std::any_of(report.strategies.begin(), report.strategies.end(),
                    [&](const StrategyResult& r) { return r.strategy == s; })) {
      continue;
    }
    StrategyResult r;
    r.strategy = s;
    r.predictions = s == Strategy::Top1 ? top1 : topk;
    r.metrics = summarize(r.predictions, gold);
    report.strategies.push_back(std::move(r));
  }
  return report;
}

}  // namespace vrag
