// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "vrag/corpus/dataset_io.hpp"

namespace vrag {

/// Parameters of the synthetic knowledge-grounded dialog corpus.
///
/// Documents group into entities (documents_per_entity documents share one
/// entity token and one topic token) and carry one fact token per attribute.
/// A question names an entity and an attribute, so the context alone narrows
/// retrieval to the entity's documents; the fact token in the response
/// picks out the gold document among them.
///
/// With fact_values == 0 every (document, attribute) pair gets its own fact
/// token. Otherwise facts are drawn from a pool of that many tokens, distinct
/// within a document, so a decoder can learn to copy them.
struct SyntheticSpec {
  std::size_t documents = 200;
  std::size_t facts_per_document = 5;
  std::size_t vocab_size = 2000;
  std::size_t train_instances = 1000;
  std::size_t validation_instances = 200;
  std::size_t test_instances = 200;
  double distractor_rate = 0.3;
  std::uint64_t seed = 7;
  std::size_t topics = 10;
  std::size_t documents_per_entity = 2;
  // Test questions only target documents that are never gold in train or
  // validation.
  bool held_out_docs = false;
  std::size_t fact_values = 0;

  std::size_t entity_count() const;
  /// Distinct tokens the generator needs, markers included.
  std::size_t required_vocab() const;
  /// Throws ConfigError on a spec that cannot be generated.
  void validate() const;
};

struct SyntheticCorpus {
  std::vector<DocumentRecord> documents;
  std::vector<DialogInstance> train;
  std::vector<DialogInstance> validation;
  std::vector<DialogInstance> test;

  Dataset as_dataset() const;
};

SyntheticCorpus generate_synthetic(const SyntheticSpec& spec);

/// Writes documents.jsonl, train.jsonl, val.jsonl and test.jsonl into `dir`.
void write_corpus(const SyntheticCorpus& corpus, const std::filesystem::path& dir);

}  // namespace vrag
