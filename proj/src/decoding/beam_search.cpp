// SPDX-License-Identifier: Apache-2.0
#include "vrag/decoding/beam_search.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <unordered_map>

#include "vrag/errors.hpp"
#include "vrag/numerics/tensor.hpp"
#include "vrag/objectives/objectives.hpp"

namespace vrag {

void DecodeConfig::validate() const {
  if (width == 0) throw ConfigError("beam width must be at least 1");
  if (max_length == 0) throw ConfigError("max response length must be at least 1");
  if (k == 0) throw ConfigError("decoding k must be at least 1");
}

namespace {

struct Hypothesis {
  TokenIds tokens;
  double score = 0.0;
};

bool ranks_before(const Hypothesis& a, const Hypothesis& b) {
  if (a.score != b.score) return a.score > b.score;
  return a.tokens < b.tokens;
}

struct Expansion {
  std::size_t parent;
  TokenId token;
  double score;
};

}  // namespace

Candidate beam_search(const DecoderParams& decoder, std::span<const TokenId> context,
                      std::span<const TokenId> document, const DecodeConfig& config) {
  config.validate();
  const DecoderSession session(decoder, context, document);
  const std::size_t vocab = session.vocab_size();

  // The decoder state depends only on the previous token.
  std::unordered_map<TokenId, std::vector<double>> step_cache;
  auto step = [&](TokenId prev) -> const std::vector<double>& {
    auto it = step_cache.find(prev);
    if (it == step_cache.end()) it = step_cache.emplace(prev, session.next_log_probs(prev)).first;
    return it->second;
  };

  std::vector<Hypothesis> live{Hypothesis{}};
  std::vector<Hypothesis> done;
  std::vector<Expansion> expansions;

  for (std::size_t length = 1; length <= config.max_length && !live.empty(); ++length) {
    expansions.clear();
    for (std::size_t i = 0; i < live.size(); ++i) {
      const TokenId prev = live[i].tokens.empty() ? session.bos() : live[i].tokens.back();
      const std::vector<double>& lp = step(prev);
      for (TokenId t = 0; t < vocab; ++t) expansions.push_back({i, t, live[i].score + lp[t]});
    }
    auto order = [&](const Expansion& a, const Expansion& b) {
      if (a.score != b.score) return a.score > b.score;
      if (a.parent != b.parent) return live[a.parent].tokens < live[b.parent].tokens;
      return a.token < b.token;
    };
    const std::size_t keep = std::min(config.width, expansions.size());
    std::partial_sort(expansions.begin(), expansions.begin() + static_cast<std::ptrdiff_t>(keep), expansions.end(),
                      order);

    std::vector<Hypothesis> next;
    for (std::size_t e = 0; e < keep; ++e) {
      Hypothesis h{live[expansions[e].parent].tokens, expansions[e].score};
      h.tokens.push_back(expansions[e].token);
      if (expansions[e].token == config.eos || length == config.max_length) {
        done.push_back(std::move(h));
      } else {
        next.push_back(std::move(h));
      }
    }
    live = std::move(next);

    // Step log-probabilities are non-positive, so a live hypothesis scoring
    // strictly below the best retired one can never overtake it.
    if (!done.empty() && !live.empty()) {
      const Hypothesis& best_done = *std::min_element(done.begin(), done.end(), ranks_before);
      const bool any_competitive =
          std::any_of(live.begin(), live.end(), [&](const Hypothesis& h) { return h.score >= best_done.score; });
      if (!any_competitive) break;
    }
  }

  const Hypothesis& best = *std::min_element(done.begin(), done.end(), ranks_before);
  return Candidate{best.tokens, best.score, {}};
}

Candidate decode_top1(const ModelBundle& bundle, const KnowledgeBase& kb, const EncodedInstance& instance,
                      const DecodeConfig& config) {
  if (kb.index.empty()) throw std::invalid_argument("decoding against an empty document index");
  const TruncatedCategorical prior = prior_truncated(bundle, kb, instance, 1);
  const std::string& id = prior.support.front();
  Candidate c = beam_search(bundle.decoder, instance.decoder_context, kb.body(id), config);
  c.document_id = id;
  return c;
}

std::size_t fast_decoding_winner(std::span<const double> log_prior, std::span<const double> log_likelihoods,
                                 std::span<const std::string> document_ids) {
  if (log_prior.empty() || log_prior.size() != log_likelihoods.size() || log_prior.size() != document_ids.size()) {
    throw std::invalid_argument("fast decoding: mismatched or empty candidate lists");
  }
  std::size_t best = 0;
  for (std::size_t i = 1; i < log_prior.size(); ++i) {
    const double s = log_prior[i] + log_likelihoods[i];
    const double b = log_prior[best] + log_likelihoods[best];
    if (s > b || (s == b && document_ids[i] < document_ids[best])) best = i;
  }
  return best;
}

TopKDecoding decode_topk(const ModelBundle& bundle, const KnowledgeBase& kb, const EncodedInstance& instance,
                         const DecodeConfig& config) {
  if (kb.index.empty()) throw std::invalid_argument("decoding against an empty document index");
  config.validate();
  const TruncatedCategorical prior = prior_truncated(bundle, kb, instance, config.k);
  const std::vector<double> log_prior = log_softmax(prior.scores);

  TopKDecoding out;
  std::vector<double> lls;
  for (std::size_t i = 0; i < prior.support.size(); ++i) {
    Candidate c = beam_search(bundle.decoder, instance.decoder_context, kb.body(prior.support[i]), config);
    c.document_id = prior.support[i];
    lls.push_back(c.log_prob);
    out.candidates.push_back({std::move(c), log_prior[i], log_prior[i] + lls.back()});
  }
  out.best = fast_decoding_winner(log_prior, lls, prior.support);
  return out;
}

Tokens detokenize(const Candidate& candidate, const Vocabulary& vocab, TokenId eos) {
  std::span<const TokenId> ids = candidate.tokens;
  if (!ids.empty() && ids.back() == eos) ids = ids.first(ids.size() - 1);
  return vocab.tokens(ids);
}

}  // namespace vrag
