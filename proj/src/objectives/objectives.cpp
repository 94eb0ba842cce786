// SPDX-License-Identifier: Apache-2.0
#include "vrag/objectives/objectives.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <unordered_map>

namespace vrag {
namespace {

std::vector<double> scores_of(std::span<const ScoredDocument> docs) {
  std::vector<double> out;
  out.reserve(docs.size());
  for (const ScoredDocument& d : docs) out.push_back(d.score);
  return out;
}

std::vector<std::string> ids_of(std::span<const ScoredDocument> docs) {
  std::vector<std::string> out;
  out.reserve(docs.size());
  for (const ScoredDocument& d : docs) out.push_back(d.id);
  return out;
}

std::vector<double> scores_in_order(std::span<const ScoredDocument> scores, std::span<const std::string> support,
                                    const char* which) {
  std::unordered_map<std::string, double> by_id;
  for (const ScoredDocument& s : scores) {
    if (!by_id.emplace(s.id, s.score).second) {
      throw std::invalid_argument(std::string(which) + " scores list document '" + s.id + "' twice");
    }
  }
  std::vector<double> out;
  out.reserve(support.size());
  for (const std::string& id : support) {
    auto it = by_id.find(id);
    if (it == by_id.end()) {
      throw std::invalid_argument(std::string(which) + " scores do not cover support document '" + id + "'");
    }
    out.push_back(it->second);
  }
  return out;
}

void require_k(std::size_t k) {
  if (k == 0) throw std::invalid_argument("top-k size must be at least 1");
}

std::vector<double> response_log_likelihoods(const ModelBundle& bundle, const KnowledgeBase& kb,
                                             const EncodedInstance& instance, std::span<const std::string> docs) {
  std::vector<double> out;
  out.reserve(docs.size());
  for (const std::string& id : docs) {
    out.push_back(decoder_log_likelihood(bundle.decoder, instance.decoder_context, kb.body(id), instance.response));
  }
  return out;
}

// Constant document rows on a tape, created once per id.
class DocumentRows {
 public:
  DocumentRows(GradientTape& tape, const DocumentIndex& index) : tape_(tape), index_(index) {}

  Var operator()(const std::string& id) {
    auto it = rows_.find(id);
    if (it != rows_.end()) return it->second;
    const auto row = index_.embedding(index_.row_of(id));
    const Var v = tape_.constant(Tensor::vector({row.begin(), row.end()}));
    rows_.emplace(id, v);
    return v;
  }

  Var scores(std::span<const std::string> ids, Var query) {
    std::vector<Var> s;
    s.reserve(ids.size());
    for (const std::string& id : ids) s.push_back(tape_.dot((*this)(id), query));
    return tape_.stack(s);
  }

 private:
  GradientTape& tape_;
  const DocumentIndex& index_;
  std::unordered_map<std::string, Var> rows_;
};

Var tape_log_likelihoods(GradientTape& tape, const ModelBundle& bundle, const KnowledgeBase& kb,
                         const EncodedInstance& instance, std::span<const std::string> docs) {
  std::vector<std::span<const TokenId>> bodies;
  bodies.reserve(docs.size());
  for (const std::string& id : docs) bodies.emplace_back(kb.body(id));
  const std::vector<Var> lls =
      decoder_log_likelihoods(tape, bundle.decoder, instance.decoder_context, bodies, instance.response);
  return tape.stack(lls);
}

}  // namespace

TruncatedCategorical normalize_top_k(const TopKResult& retrieved) {
  TruncatedCategorical t;
  t.support = ids_of(retrieved);
  t.scores = scores_of(retrieved);
  t.probabilities = softmax_stable(t.scores);
  t.normalization = Normalization::OwnTopK;
  return t;
}

TruncatedCategorical prior_truncated(const ModelBundle& bundle, const KnowledgeBase& kb,
                                     const EncodedInstance& instance, std::size_t k) {
  require_k(k);
  return normalize_top_k(kb.index.search(bundle.prior.embed(instance.prior_input), k));
}

TruncatedCategorical posterior_truncated(const ModelBundle& bundle, const KnowledgeBase& kb,
                                         const EncodedInstance& instance, std::size_t k) {
  require_k(k);
  return normalize_top_k(kb.index.search(bundle.posterior.embed(instance.posterior_input), k));
}

double kl_on_support(std::span<const ScoredDocument> q_scores, std::span<const ScoredDocument> p_scores,
                     std::span<const std::string> support) {
  if (support.empty()) throw std::invalid_argument("KL over an empty support");
  const std::vector<double> lq = log_softmax(scores_in_order(q_scores, support, "posterior"));
  const std::vector<double> lp = log_softmax(scores_in_order(p_scores, support, "prior"));
  double kl = 0.0;
  for (std::size_t i = 0; i < lq.size(); ++i) kl += std::exp(lq[i]) * (lq[i] - lp[i]);
  return kl;
}

double marginal_log_likelihood(std::span<const double> log_prior, std::span<const double> log_likelihoods) {
  if (log_prior.size() != log_likelihoods.size()) throw std::invalid_argument("marginal: length mismatch");
  std::vector<double> terms(log_prior.begin(), log_prior.end());
  for (std::size_t i = 0; i < terms.size(); ++i) terms[i] += log_likelihoods[i];
  return log_sum_exp(terms);
}

double expected_log_likelihood(std::span<const double> posterior, std::span<const double> log_likelihoods) {
  if (posterior.size() != log_likelihoods.size()) throw std::invalid_argument("expectation: length mismatch");
  double total = 0.0;
  for (std::size_t i = 0; i < posterior.size(); ++i) {
    if (posterior[i] > 0.0) total += posterior[i] * log_likelihoods[i];
  }
  return total;
}

std::vector<std::string> union_support(const DocumentIndex& index, std::span<const double> prior_query,
                                       const TopKResult& prior_top, const TopKResult& posterior_top) {
  std::vector<std::string> ids = ids_of(prior_top);
  for (const ScoredDocument& d : posterior_top) {
    if (std::find(ids.begin(), ids.end(), d.id) == ids.end()) ids.push_back(d.id);
  }
  std::vector<ScoredDocument> scored = index.scores_on_support(prior_query, ids);
  std::sort(scored.begin(), scored.end(), [](const ScoredDocument& a, const ScoredDocument& b) {
    return a.score != b.score ? a.score > b.score : a.id < b.id;
  });
  return ids_of(scored);
}

double rag_objective(const ModelBundle& bundle, const KnowledgeBase& kb, const EncodedInstance& instance,
                     std::size_t k) {
  const TruncatedCategorical prior = prior_truncated(bundle, kb, instance, k);
  const std::vector<double> lls = response_log_likelihoods(bundle, kb, instance, prior.support);
  return marginal_log_likelihood(log_softmax(prior.scores), lls);
}

ElboBreakdown elbo(const ModelBundle& bundle, const KnowledgeBase& kb, const EncodedInstance& instance,
                   std::size_t k) {
  require_k(k);
  const std::vector<double> g = bundle.prior.embed(instance.prior_input);
  const std::vector<double> h = bundle.posterior.embed(instance.posterior_input);
  const TopKResult prior_top = kb.index.search(g, k);
  const TopKResult posterior_top = kb.index.search(h, k);

  ElboBreakdown out;
  out.prior_support = ids_of(prior_top);
  out.posterior_support = ids_of(posterior_top);
  out.kl_support = union_support(kb.index, g, prior_top, posterior_top);

  const std::vector<double> q = softmax_stable(scores_of(posterior_top));
  const std::vector<double> lls = response_log_likelihoods(bundle, kb, instance, out.posterior_support);
  out.expectation = expected_log_likelihood(q, lls);

  out.kl = kl_on_support(kb.index.scores_on_support(h, out.kl_support),
                         kb.index.scores_on_support(g, out.kl_support), out.kl_support);
  out.elbo = out.expectation - out.kl;
  return out;
}

Var rag_objective(GradientTape& tape, const ModelBundle& bundle, const KnowledgeBase& kb,
                  const EncodedInstance& instance, std::size_t k) {
  require_k(k);
  const Var g = bundle.prior.embed(tape, instance.prior_input);
  const std::vector<std::string> support = ids_of(kb.index.search(tape.value(g).values(), k));
  DocumentRows rows(tape, kb.index);
  const Var log_prior = tape.log_softmax(rows.scores(support, g));
  const Var lls = tape_log_likelihoods(tape, bundle, kb, instance, support);
  return tape.log_sum_exp(tape.add(log_prior, lls));
}

ElboVars elbo(GradientTape& tape, const ModelBundle& bundle, const KnowledgeBase& kb,
              const EncodedInstance& instance, std::size_t k) {
  require_k(k);
  const Var g = bundle.prior.embed(tape, instance.prior_input);
  const Var h = bundle.posterior.embed(tape, instance.posterior_input);
  const TopKResult prior_top = kb.index.search(tape.value(g).values(), k);
  const TopKResult posterior_top = kb.index.search(tape.value(h).values(), k);

  ElboVars out;
  ElboBreakdown& b = out.breakdown;
  b.prior_support = ids_of(prior_top);
  b.posterior_support = ids_of(posterior_top);
  b.kl_support = union_support(kb.index, tape.value(g).values(), prior_top, posterior_top);

  DocumentRows rows(tape, kb.index);
  const Var q_hat = tape.softmax(rows.scores(b.posterior_support, h));
  out.expectation = tape.dot(q_hat, tape_log_likelihoods(tape, bundle, kb, instance, b.posterior_support));

  const Var q_scores = rows.scores(b.kl_support, h);
  const Var log_q = tape.log_softmax(q_scores);
  const Var log_p = tape.log_softmax(rows.scores(b.kl_support, g));
  out.kl = tape.dot(tape.softmax(q_scores), tape.sub(log_q, log_p));
  out.elbo = tape.sub(out.expectation, out.kl);

  b.expectation = tape.scalar(out.expectation);
  b.kl = tape.scalar(out.kl);
  b.elbo = tape.scalar(out.elbo);
  return out;
}

}  // namespace vrag
