// SPDX-License-Identifier: Apache-2.0
#include "vrag/cli/experiment_config.hpp"

#include <concepts>
#include <cstdio>
#include <fstream>
#include <set>

#include "vrag/errors.hpp"

namespace vrag {
namespace {

using nlohmann::json;
using nlohmann::ordered_json;

// Typed access to one JSON object. Every key read is recorded so that
// finish() can reject the rest.
class ObjectReader {
 public:
  ObjectReader(const json& j, std::string where) : j_(j), where_(std::move(where)) {
    if (!j_.is_object()) throw ConfigError(where_ + ": expected an object");
  }

  const json* find(const char* key) {
    seen_.insert(key);
    const auto it = j_.find(key);
    return it == j_.end() ? nullptr : &*it;
  }

  template <std::unsigned_integral T>
  void read(const char* key, T& out) {
    if (const json* v = find(key)) out = static_cast<T>(unsigned_value(*v, key));
  }
  void read(const char* key, double& out) {
    if (const json* v = find(key)) {
      if (!v->is_number()) throw error(key, "expected a number");
      out = v->get<double>();
    }
  }
  void read(const char* key, bool& out) {
    if (const json* v = find(key)) {
      if (!v->is_boolean()) throw error(key, "expected true or false");
      out = v->get<bool>();
    }
  }
  void read(const char* key, std::string& out) {
    if (const json* v = find(key)) {
      if (!v->is_string()) throw error(key, "expected a string");
      out = v->get<std::string>();
    }
  }
  void read(const char* key, std::filesystem::path& out) {
    if (const json* v = find(key)) {
      if (!v->is_string()) throw error(key, "expected a path string");
      out = v->get<std::string>();
    }
  }
  void read(const char* key, std::optional<std::filesystem::path>& out) {
    if (const json* v = find(key)) {
      if (v->is_null()) {
        out.reset();
      } else if (v->is_string()) {
        out = v->get<std::string>();
      } else {
        throw error(key, "expected a path string or null");
      }
    }
  }
  template <typename T, typename Parse>
  void read_list(const char* key, std::vector<T>& out, Parse parse) {
    if (const json* v = find(key)) {
      if (!v->is_array()) throw error(key, "expected an array");
      std::vector<T> values;
      for (const json& item : *v) values.push_back(parse(item));
      out = std::move(values);
    }
  }

  std::uint64_t unsigned_value(const json& v, const std::string& key) const {
    if (!v.is_number_unsigned()) throw error(key, "expected a non-negative integer");
    return v.get<std::uint64_t>();
  }

  ConfigError error(const std::string& key, const std::string& why) const {
    return ConfigError(where_ + "." + key + ": " + why);
  }

  void finish() const {
    for (auto it = j_.begin(); it != j_.end(); ++it) {
      if (!seen_.contains(it.key())) throw ConfigError(where_ + ": unknown key '" + it.key() + "'");
    }
  }

 private:
  const json& j_;
  std::string where_;
  std::set<std::string> seen_;
};

std::string path_string(const std::filesystem::path& p) { return p.generic_string(); }

ordered_json optional_path(const std::optional<std::filesystem::path>& p) {
  return p ? ordered_json(path_string(*p)) : ordered_json();
}

ordered_json synthetic_json(const SyntheticSpec& s) {
  ordered_json j;
  j["documents"] = s.documents;
  j["facts_per_document"] = s.facts_per_document;
  j["vocab_size"] = s.vocab_size;
  j["train_instances"] = s.train_instances;
  j["validation_instances"] = s.validation_instances;
  j["test_instances"] = s.test_instances;
  j["distractor_rate"] = s.distractor_rate;
  j["seed"] = s.seed;
  j["topics"] = s.topics;
  j["documents_per_entity"] = s.documents_per_entity;
  j["held_out_docs"] = s.held_out_docs;
  j["fact_values"] = s.fact_values;
  return j;
}

SyntheticSpec synthetic_from(const json& j) {
  ObjectReader r(j, "synthetic");
  SyntheticSpec s;
  r.read("documents", s.documents);
  r.read("facts_per_document", s.facts_per_document);
  r.read("vocab_size", s.vocab_size);
  r.read("train_instances", s.train_instances);
  r.read("validation_instances", s.validation_instances);
  r.read("test_instances", s.test_instances);
  r.read("distractor_rate", s.distractor_rate);
  r.read("seed", s.seed);
  r.read("topics", s.topics);
  r.read("documents_per_entity", s.documents_per_entity);
  r.read("held_out_docs", s.held_out_docs);
  r.read("fact_values", s.fact_values);
  r.finish();
  return s;
}

ordered_json training_json(const TrainConfig& t) {
  ordered_json j;
  j["objective"] = to_string(t.objective);
  j["k"] = t.k;
  j["learning_rate"] = t.optimizer.learning_rate;
  j["beta1"] = t.optimizer.beta1;
  j["beta2"] = t.optimizer.beta2;
  j["eps"] = t.optimizer.eps;
  j["weight_decay"] = t.optimizer.weight_decay;
  j["max_epochs"] = t.max_epochs;
  j["patience"] = t.patience;
  j["batch_size"] = t.batch_size;
  j["log_train_retrieval"] = t.log_train_retrieval;
  return j;
}

ordered_json dims_json(const ModelDims& d) {
  ordered_json j;
  j["embedding"] = d.embedding;
  j["retrieval"] = d.retrieval;
  j["hidden"] = d.hidden;
  return j;
}

ordered_json budget_json(const EncodingBudget& b) {
  ordered_json j;
  j["context"] = b.context;
  j["document"] = b.document;
  j["response"] = b.response;
  return j;
}

}  // namespace

DatasetPaths ExperimentPaths::dataset() const {
  DatasetPaths p = DatasetPaths::in_directory(data_dir);
  if (documents) p.documents = *documents;
  if (train) p.train = *train;
  if (validation) p.validation = *validation;
  if (test) p.test = *test;
  return p;
}

ExperimentConfig ExperimentConfig::from_json(const json& j) {
  ExperimentConfig c;
  ObjectReader top(j, "config");

  if (const json* v = top.find("paths")) {
    ObjectReader r(*v, "paths");
    r.read("data_dir", c.paths.data_dir);
    r.read("documents", c.paths.documents);
    r.read("train", c.paths.train);
    r.read("validation", c.paths.validation);
    r.read("test", c.paths.test);
    r.read("output_dir", c.paths.output_dir);
    r.finish();
  }
  if (const json* v = top.find("model")) {
    ObjectReader r(*v, "model");
    r.read("embedding", c.dims.embedding);
    r.read("retrieval", c.dims.retrieval);
    r.read("hidden", c.dims.hidden);
    r.finish();
  }
  if (const json* v = top.find("train")) {
    ObjectReader r(*v, "train");
    std::string objective = to_string(c.train.objective);
    r.read("objective", objective);
    c.train.objective = parse_objective(objective);
    r.read("k", c.train.k);
    r.read("learning_rate", c.train.optimizer.learning_rate);
    r.read("beta1", c.train.optimizer.beta1);
    r.read("beta2", c.train.optimizer.beta2);
    r.read("eps", c.train.optimizer.eps);
    r.read("weight_decay", c.train.optimizer.weight_decay);
    r.read("max_epochs", c.train.max_epochs);
    r.read("patience", c.train.patience);
    r.read("batch_size", c.train.batch_size);
    r.read("log_train_retrieval", c.train.log_train_retrieval);
    r.finish();
  }
  top.read("finetune", c.finetune);
  if (const json* v = top.find("decode")) {
    ObjectReader r(*v, "decode");
    r.read("width", c.decode.width);
    r.read("max_length", c.decode.max_length);
    r.read("k", c.decode.k);
    r.finish();
  }
  top.read_list("strategies", c.strategies, [&](const json& item) {
    if (!item.is_string()) throw top.error("strategies", "expected strategy names");
    return parse_strategy(item.get<std::string>());
  });
  top.read_list("seeds", c.seeds, [&](const json& item) { return top.unsigned_value(item, "seeds"); });
  top.read("vocab_min_count", c.vocab_min_count);
  if (const json* v = top.find("encoding")) {
    ObjectReader r(*v, "encoding");
    r.read("context", c.budget.context);
    r.read("document", c.budget.document);
    r.read("response", c.budget.response);
    r.finish();
  }
  if (const json* v = top.find("synthetic")) {
    if (!v->is_null()) c.synthetic = synthetic_from(*v);
  }
  if (const json* v = top.find("study")) {
    ObjectReader study(*v, "study");
    if (const json* t = study.find("topk")) {
      ObjectReader r(*t, "study.topk");
      r.read_list("k_values", c.topk.k_values,
                  [&](const json& item) { return static_cast<std::size_t>(r.unsigned_value(item, "k_values")); });
      r.read_list("objectives", c.topk.objectives, [&](const json& item) {
        if (!item.is_string()) throw r.error("objectives", "expected objective names");
        return parse_objective(item.get<std::string>());
      });
      r.finish();
    }
    if (const json* t = study.find("klcheck")) {
      ObjectReader r(*t, "study.klcheck");
      r.read("trials", c.klcheck.trials);
      r.read_list("support_sizes", c.klcheck.support_sizes, [&](const json& item) {
        return static_cast<std::size_t>(r.unsigned_value(item, "support_sizes"));
      });
      r.read_list("epsilons", c.klcheck.epsilons, [&](const json& item) {
        if (!item.is_number()) throw r.error("epsilons", "expected numbers");
        return item.get<double>();
      });
      r.read("seed", c.klcheck.seed);
      if (const json* d = r.find("forced_delta")) {
        if (d->is_null()) {
          c.klcheck.forced_delta.reset();
        } else if (d->is_number()) {
          c.klcheck.forced_delta = d->get<double>();
        } else {
          throw r.error("forced_delta", "expected a number or null");
        }
      }
      r.finish();
    }
    study.finish();
  }
  top.finish();
  c.validate();
  return c;
}

ExperimentConfig ExperimentConfig::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file " + path.string());
  json j;
  try {
    j = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError(path.string() + ": invalid JSON: " + e.what());
  }
  return from_json(j);
}

ordered_json ExperimentConfig::to_json() const {
  ordered_json j;
  ordered_json p;
  p["data_dir"] = path_string(paths.data_dir);
  p["documents"] = optional_path(paths.documents);
  p["train"] = optional_path(paths.train);
  p["validation"] = optional_path(paths.validation);
  p["test"] = optional_path(paths.test);
  p["output_dir"] = path_string(paths.output_dir);
  j["paths"] = p;
  j["model"] = dims_json(dims);
  j["train"] = training_json(train);
  j["finetune"] = finetune;
  ordered_json d;
  d["width"] = decode.width;
  d["max_length"] = decode.max_length;
  d["k"] = decode.k;
  j["decode"] = d;
  ordered_json s = ordered_json::array();
  for (Strategy st : strategies) s.push_back(to_string(st));
  j["strategies"] = s;
  j["seeds"] = seeds;
  j["vocab_min_count"] = vocab_min_count;
  j["encoding"] = budget_json(budget);
  j["synthetic"] = synthetic ? synthetic_json(*synthetic) : ordered_json();
  ordered_json study;
  ordered_json topk_json;
  topk_json["k_values"] = topk.k_values;
  ordered_json objectives = ordered_json::array();
  for (Objective o : topk.objectives) objectives.push_back(to_string(o));
  topk_json["objectives"] = objectives;
  study["topk"] = topk_json;
  ordered_json kl;
  kl["trials"] = klcheck.trials;
  kl["support_sizes"] = klcheck.support_sizes;
  kl["epsilons"] = klcheck.epsilons;
  kl["seed"] = klcheck.seed;
  kl["forced_delta"] = klcheck.forced_delta ? ordered_json(*klcheck.forced_delta) : ordered_json();
  study["klcheck"] = kl;
  j["study"] = study;
  return j;
}

void ExperimentConfig::validate() const {
  if (dims.embedding == 0 || dims.retrieval == 0 || dims.hidden == 0) {
    throw ConfigError("model dimensions must be positive");
  }
  train.validate();
  decode.validate();
  if (strategies.empty()) throw ConfigError("at least one decoding strategy is required");
  if (seeds.empty()) throw ConfigError("at least one seed is required");
  if (vocab_min_count == 0) throw ConfigError("vocab_min_count must be at least 1");
  if (budget.context < 2 || budget.document < 1 || budget.response < 1) {
    throw ConfigError("encoding budgets too small");
  }
  if (synthetic) synthetic->validate();
  for (std::size_t k : topk.k_values) {
    if (k == 0) throw ConfigError("study.topk.k_values must be positive");
  }
  if (klcheck.trials == 0) throw ConfigError("study.klcheck.trials must be positive");
  for (std::size_t n : klcheck.support_sizes) {
    if (n == 0) throw ConfigError("study.klcheck.support_sizes must be positive");
  }
  for (double e : klcheck.epsilons) {
    if (!(e > 0.0)) throw ConfigError("study.klcheck.epsilons must be positive");
  }
}

std::string ExperimentConfig::run_hash() const {
  const DatasetPaths data = paths.dataset();
  ordered_json j;
  j["documents"] = path_string(data.documents);
  j["train"] = path_string(data.train);
  j["validation"] = path_string(data.validation);
  j["test"] = path_string(data.test);
  j["model"] = dims_json(dims);
  j["train_config"] = training_json(train);
  j["finetune"] = finetune;
  j["vocab_min_count"] = vocab_min_count;
  j["encoding"] = budget_json(budget);
  return fnv1a_hex(j.dump());
}

std::filesystem::path ExperimentConfig::run_dir(std::uint64_t seed) const {
  return paths.output_dir / (run_hash() + "-s" + std::to_string(seed));
}

void ConfigOverrides::apply(ExperimentConfig& config) const {
  if (seed) {
    config.seeds = {*seed};
    if (config.synthetic) config.synthetic->seed = *seed;
  }
  if (objective) config.train.objective = *objective;
  if (k) {
    config.train.k = *k;
    config.decode.k = *k;
  }
  if (finetune) config.finetune = true;
  if (strategies) config.strategies = *strategies;
  config.validate();
}

std::string fnv1a_hex(std::string_view bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

}  // namespace vrag
