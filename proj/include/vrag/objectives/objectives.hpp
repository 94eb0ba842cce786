// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <span>
#include <string>
#include <vector>

#include "vrag/corpus/encoding.hpp"
#include "vrag/models/model_bundle.hpp"
#include "vrag/objectives/knowledge.hpp"

namespace vrag {

enum class Normalization { OwnTopK, Union };

/// A categorical distribution over an explicit set of document ids.
struct TruncatedCategorical {
  std::vector<std::string> support;
  std::vector<double> scores;  // raw inner products, same order as support
  std::vector<double> probabilities;
  Normalization normalization = Normalization::OwnTopK;
};

/// Softmax of the retrieved scores over the retrieved set.
TruncatedCategorical normalize_top_k(const TopKResult& retrieved);

/// p̂(z|x): softmax of the top-k prior scores f(z)^T g(x).
TruncatedCategorical prior_truncated(const ModelBundle& bundle, const KnowledgeBase& kb,
                                     const EncodedInstance& instance, std::size_t k);

/// q̂(z|x,y): softmax of the top-k posterior scores f(z)^T h(x,y).
TruncatedCategorical posterior_truncated(const ModelBundle& bundle, const KnowledgeBase& kb,
                                         const EncodedInstance& instance, std::size_t k);

/// KL(q̂ || p̂) with both score sets softmax-normalized over `support`.
/// Every support id must appear exactly once in each score list.
double kl_on_support(std::span<const ScoredDocument> q_scores, std::span<const ScoredDocument> p_scores,
                     std::span<const std::string> support);

/// log Σ_i exp(log_prior_i + log_likelihood_i).
double marginal_log_likelihood(std::span<const double> log_prior, std::span<const double> log_likelihoods);

/// Σ_i posterior_i * log_likelihood_i.
double expected_log_likelihood(std::span<const double> posterior, std::span<const double> log_likelihoods);

/// S^p_k ∪ S^q_k ordered by descending prior score, then ascending id.
std::vector<std::string> union_support(const DocumentIndex& index, std::span<const double> prior_query,
                                       const TopKResult& prior_top, const TopKResult& posterior_top);

struct ElboBreakdown {
  double expectation = 0.0;
  double kl = 0.0;
  double elbo = 0.0;  // expectation - kl
  std::vector<std::string> posterior_support;
  std::vector<std::string> prior_support;
  std::vector<std::string> kl_support;
};

/// log Σ_{z ∈ S^p_k} p̂(z|x) p(y|z,x).
double rag_objective(const ModelBundle& bundle, const KnowledgeBase& kb, const EncodedInstance& instance,
                     std::size_t k);

/// E_{q̂ over S^q_k}[log p(y|z,x)] - KL over S_KL = S^p_k ∪ S^q_k.
ElboBreakdown elbo(const ModelBundle& bundle, const KnowledgeBase& kb, const EncodedInstance& instance,
                   std::size_t k);

// Differentiable forms. Supports are chosen by exact search on the current
// parameters and treated as constants.

Var rag_objective(GradientTape& tape, const ModelBundle& bundle, const KnowledgeBase& kb,
                  const EncodedInstance& instance, std::size_t k);

struct ElboVars {
  Var expectation;
  Var kl;
  Var elbo;
  ElboBreakdown breakdown;  // values and supports
};

ElboVars elbo(GradientTape& tape, const ModelBundle& bundle, const KnowledgeBase& kb,
              const EncodedInstance& instance, std::size_t k);

}  // namespace vrag
