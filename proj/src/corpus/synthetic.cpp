// SPDX-License-Identifier: Apache-2.0
#include "vrag/corpus/synthetic.hpp"

#include <algorithm>
#include <array>
#include <numeric>
#include <string_view>

#include "vrag/errors.hpp"
#include "vrag/numerics/random.hpp"

namespace vrag {
namespace {

constexpr std::array<std::string_view, 6> kTemplateWords = {"what", "is", "the", "of", "?", "from"};
constexpr std::size_t kMinFillers = 8;

std::size_t fact_token_count(const SyntheticSpec& spec) {
  return spec.fact_values > 0 ? spec.fact_values : spec.documents * spec.facts_per_document;
}

struct Pair {
  std::size_t doc;
  std::size_t attribute;
};

// Cycles through a shuffled list of (document, attribute) pairs, reshuffling
// at every wrap, so splits drawn in sequence reuse pairs only once the list
// is exhausted.
class PairSource {
 public:
  PairSource(std::vector<Pair> pairs, Rng& rng) : pairs_(std::move(pairs)), rng_(rng) {
    rng_.shuffle(std::span<Pair>(pairs_));
  }

  Pair next() {
    if (cursor_ == pairs_.size()) {
      rng_.shuffle(std::span<Pair>(pairs_));
      cursor_ = 0;
    }
    return pairs_[cursor_++];
  }

 private:
  std::vector<Pair> pairs_;
  Rng& rng_;
  std::size_t cursor_ = 0;
};

std::string padded(std::size_t value, std::size_t count) {
  const std::size_t width = std::to_string(count > 0 ? count - 1 : 0).size();
  std::string s = std::to_string(value);
  return std::string(width - std::min(width, s.size()), '0') + s;
}

class Generator {
 public:
  explicit Generator(const SyntheticSpec& spec) : spec_(spec), rng_(spec.seed) {
    filler_count_ = spec.vocab_size - spec.required_vocab() + (spec.distractor_rate > 0 ? kMinFillers : 0);
    entity_topic_.resize(spec.entity_count());
    std::vector<std::size_t> order(spec.entity_count());
    std::iota(order.begin(), order.end(), 0);
    rng_.shuffle(std::span<std::size_t>(order));
    for (std::size_t r = 0; r < order.size(); ++r) entity_topic_[order[r]] = r % spec.topics;
    if (spec.fact_values > 0) {
      std::vector<std::size_t> pool(spec.fact_values);
      std::iota(pool.begin(), pool.end(), 0);
      facts_.reserve(spec.documents * spec.facts_per_document);
      for (std::size_t d = 0; d < spec.documents; ++d) {
        // Partial Fisher-Yates: the first F entries become this document's facts.
        for (std::size_t i = 0; i < spec.facts_per_document; ++i) {
          std::swap(pool[i], pool[i + rng_.below(pool.size() - i)]);
          facts_.push_back(pool[i]);
        }
      }
    }
  }

  SyntheticCorpus run() {
    SyntheticCorpus out;
    for (std::size_t d = 0; d < spec_.documents; ++d) out.documents.push_back(document(d));

    std::vector<std::size_t> docs(spec_.documents);
    std::iota(docs.begin(), docs.end(), 0);
    std::vector<std::size_t> held;
    if (spec_.held_out_docs) {
      rng_.shuffle(std::span<std::size_t>(docs));
      const std::size_t n_held = std::max<std::size_t>(1, spec_.documents / 5);
      held.assign(docs.begin(), docs.begin() + static_cast<std::ptrdiff_t>(n_held));
      docs.erase(docs.begin(), docs.begin() + static_cast<std::ptrdiff_t>(n_held));
      std::sort(held.begin(), held.end());
      std::sort(docs.begin(), docs.end());
    }
    PairSource seen(pairs_for(docs), rng_);
    if (spec_.held_out_docs) {
      PairSource unseen(pairs_for(held), rng_);
      out.test = split("test", spec_.test_instances, unseen);
    } else {
      out.test = split("test", spec_.test_instances, seen);
    }
    out.validation = split("val", spec_.validation_instances, seen);
    out.train = split("train", spec_.train_instances, seen);
    return out;
  }

 private:
  std::string doc_id(std::size_t d) const { return "doc" + padded(d, spec_.documents); }
  std::string entity(std::size_t d) const {
    const std::size_t j = d / spec_.documents_per_entity;
    return "e" + std::to_string(j);
  }
  std::string topic(std::size_t d) const {
    return "t" + std::to_string(entity_topic_[d / spec_.documents_per_entity]);
  }
  std::string attribute(std::size_t i) const { return "a" + std::to_string(i); }
  std::string fact(std::size_t d, std::size_t i) const {
    const std::size_t slot = d * spec_.facts_per_document + i;
    return "f" + std::to_string(facts_.empty() ? slot : facts_[slot]);
  }

  DocumentRecord document(std::size_t d) const {
    std::string text = topic(d) + " " + entity(d);
    for (std::size_t i = 0; i < spec_.facts_per_document; ++i) {
      text += " " + attribute(i) + " " + fact(d, i);
    }
    return make_document(doc_id(d), std::move(text));
  }

  std::vector<Pair> pairs_for(std::span<const std::size_t> docs) const {
    std::vector<Pair> pairs;
    for (std::size_t d : docs) {
      for (std::size_t i = 0; i < spec_.facts_per_document; ++i) pairs.push_back({d, i});
    }
    return pairs;
  }

  std::string filler_sentence() {
    const std::size_t length = 3 + rng_.below(4);
    std::string s;
    for (std::size_t i = 0; i < length; ++i) {
      if (i > 0) s += ' ';
      s += "w" + std::to_string(rng_.below(filler_count_));
    }
    return s;
  }

  std::vector<DialogInstance> split(std::string_view name, std::size_t count, PairSource& source) {
    std::vector<DialogInstance> out;
    out.reserve(count);
    for (std::size_t n = 0; n < count; ++n) {
      const Pair p = source.next();
      DialogInstance inst;
      inst.id = std::string(name) + "-" + padded(n, count);
      if (spec_.distractor_rate > 0 && rng_.bernoulli(spec_.distractor_rate)) {
        inst.context.push_back(make_turn(Speaker::S1, filler_sentence()));
        inst.context.push_back(make_turn(Speaker::S2, filler_sentence()));
      }
      inst.context.push_back(make_turn(
          Speaker::S1, "what is the " + attribute(p.attribute) + " of " + entity(p.doc) + " ?"));
      inst.response_text =
          "the " + attribute(p.attribute) + " is " + fact(p.doc, p.attribute) + " from " + topic(p.doc);
      inst.response = tokenize(inst.response_text);
      inst.gold_doc_id = doc_id(p.doc);
      out.push_back(std::move(inst));
    }
    return out;
  }

  const SyntheticSpec& spec_;
  Rng rng_;
  std::size_t filler_count_ = 0;
  std::vector<std::size_t> entity_topic_;
  std::vector<std::size_t> facts_;
};

}  // namespace

std::size_t SyntheticSpec::entity_count() const {
  return documents_per_entity == 0 ? 0 : (documents + documents_per_entity - 1) / documents_per_entity;
}

std::size_t SyntheticSpec::required_vocab() const {
  return kMarkerCount + kTemplateWords.size() + entity_count() + facts_per_document + fact_token_count(*this) + topics +
         (distractor_rate > 0 ? kMinFillers : 0);
}

void SyntheticSpec::validate() const {
  auto require = [](bool ok, const std::string& what) {
    if (!ok) throw ConfigError("synthetic spec: " + what);
  };
  require(documents > 0, "documents must be positive");
  require(facts_per_document > 0, "facts_per_document must be positive");
  require(train_instances > 0 && validation_instances > 0 && test_instances > 0,
          "instance counts must be positive");
  require(topics > 0, "topics must be positive");
  require(documents_per_entity > 0, "documents_per_entity must be positive");
  require(distractor_rate >= 0.0 && distractor_rate <= 1.0, "distractor_rate must lie in [0, 1]");
  require(!held_out_docs || documents >= 2, "held_out_docs needs at least 2 documents");
  require(fact_values == 0 || fact_values >= facts_per_document,
          "fact_values must be 0 or at least facts_per_document");
  require(vocab_size >= required_vocab(),
          "vocab_size " + std::to_string(vocab_size) + " cannot host " +
              std::to_string(fact_token_count(*this)) +
              " fact tokens plus markers, entities, "
              "attributes, topics and template words (need " + std::to_string(required_vocab()) + ")");
}

Dataset SyntheticCorpus::as_dataset() const {
  Dataset ds;
  ds.documents = documents;
  ds.train.instances = train;
  ds.validation.instances = validation;
  ds.test.instances = test;
  return ds;
}

SyntheticCorpus generate_synthetic(const SyntheticSpec& spec) {
  spec.validate();
  return Generator(spec).run();
}

void write_corpus(const SyntheticCorpus& corpus, const std::filesystem::path& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw DataError("cannot create " + dir.string() + ": " + ec.message());
  const DatasetPaths paths = DatasetPaths::in_directory(dir);
  write_documents(paths.documents, corpus.documents);
  write_dialogs(paths.train, corpus.train);
  write_dialogs(paths.validation, corpus.validation);
  write_dialogs(paths.test, corpus.test);
}

}  // namespace vrag
