// SPDX-License-Identifier: Apache-2.0
#include "vrag/evaluation/studies.hpp"

#include <algorithm>
#include <cstdio>
#include <map>
#include <set>
#include <sstream>
#include <stdexcept>

#include "vrag/errors.hpp"

namespace vrag {

std::optional<double> percentage_change(double before, double after) {
  if (before == 0.0) return std::nullopt;
  return 100.0 * (after - before) / before;
}

const MemorizationRow& MemorizationReport::row(const std::string& metric, Strategy strategy) const {
  for (const MemorizationRow& r : rows) {
    if (r.metric == metric && r.strategy == strategy) return r;
  }
  throw std::out_of_range("no memorization row for " + metric + "/" + to_string(strategy));
}

MemorizationReport memorization_study(const ModelBundle& bundle, const KnowledgeBase& kb,
                                      std::span<const EncodedInstance> test, const Vocabulary& vocab,
                                      const EvalOptions& options) {
  std::set<std::string> gold;
  for (const EncodedInstance& inst : test) {
    if (inst.gold_doc_id) gold.insert(*inst.gold_doc_id);
  }
  if (gold.empty()) throw DataError("memorization study: no test instance has a gold document");
  std::string missing;
  for (const std::string& id : gold) {
    if (!kb.index.contains(id)) missing += (missing.empty() ? "" : ", ") + id;
  }
  if (!missing.empty()) throw DataError("memorization study: gold documents absent from the index: " + missing);
  if (gold.size() == kb.index.size()) {
    throw DataError("memorization study: removing the test gold documents would empty the index");
  }

  MemorizationReport report;
  report.removed_documents.assign(gold.begin(), gold.end());
  report.full_index = evaluate(bundle, kb, test, vocab, options);
  const KnowledgeBase ablated = kb.without(report.removed_documents);
  report.ablated_index = evaluate(bundle, ablated, test, vocab, options);

  for (const StrategyResult& before : report.full_index.strategies) {
    const GenerationMetrics& a = report.ablated_index.result(before.strategy).metrics;
    const GenerationMetrics& b = before.metrics;
    const std::pair<const char*, std::pair<double, double>> metrics[] = {
        {"b1", {b.b1, a.b1}}, {"b4", {b.b4, a.b4}}, {"bp1", {b.bp1, a.bp1}}, {"bp4", {b.bp4, a.bp4}}};
    for (const auto& [name, values] : metrics) {
      report.rows.push_back(
          {name, before.strategy, values.first, values.second, percentage_change(values.first, values.second)});
    }
  }
  return report;
}

namespace {

std::string exact(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::vector<std::string> split_fields(const std::string& line) {
  std::vector<std::string> out;
  std::string field;
  std::istringstream in(line);
  while (std::getline(in, field, ',')) out.push_back(field);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

constexpr const char* kAblationHeader = "objective,k,seed,r_at_1,r_at_3,r_at_5,mrr_at_5,count,epochs";

}  // namespace

std::string TopkAblation::to_csv() const {
  std::string out = std::string(kAblationHeader) + "\n";
  for (const AblationRow& r : rows) {
    out += to_string(r.objective) + "," + std::to_string(r.k) + "," + std::to_string(r.seed) + "," +
           exact(r.test_prior.r_at_1) + "," + exact(r.test_prior.r_at_3) + "," + exact(r.test_prior.r_at_5) + "," +
           exact(r.test_prior.mrr_at_5) + "," + std::to_string(r.test_prior.count) + "," +
           std::to_string(r.epochs) + "\n";
  }
  return out;
}

TopkAblation TopkAblation::from_csv(std::string_view text) {
  std::istringstream in{std::string(text)};
  std::string line;
  if (!std::getline(in, line) || line != kAblationHeader) throw DataError("top-k ablation table: bad header");
  TopkAblation table;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    const std::vector<std::string> f = split_fields(line);
    auto fail = [&](const std::string& why) -> DataError {
      return DataError("top-k ablation table line " + std::to_string(line_no) + ": " + why);
    };
    if (f.size() != 9) throw fail("expected 9 fields");
    try {
      AblationRow r;
      r.objective = parse_objective(f[0]);
      r.k = std::stoull(f[1]);
      r.seed = std::stoull(f[2]);
      r.test_prior.r_at_1 = std::stod(f[3]);
      r.test_prior.r_at_3 = std::stod(f[4]);
      r.test_prior.r_at_5 = std::stod(f[5]);
      r.test_prior.mrr_at_5 = std::stod(f[6]);
      r.test_prior.count = std::stoull(f[7]);
      r.epochs = std::stoull(f[8]);
      table.rows.push_back(r);
    } catch (const ConfigError& e) {
      throw fail(e.what());
    } catch (const std::logic_error&) {
      throw fail("unparsable number");
    }
  }
  return table;
}

std::vector<AblationAverage> TopkAblation::averages() const {
  std::vector<AblationAverage> out;
  for (const AblationRow& r : rows) {
    auto it = std::find_if(out.begin(), out.end(),
                           [&](const AblationAverage& a) { return a.objective == r.objective && a.k == r.k; });
    if (it == out.end()) {
      out.push_back({r.objective, r.k, 0.0, 0.0, 0.0, 0});
      it = out.end() - 1;
    }
    it->r_at_1 += r.test_prior.r_at_1;
    it->r_at_3 += r.test_prior.r_at_3;
    it->r_at_5 += r.test_prior.r_at_5;
    ++it->seeds;
  }
  for (AblationAverage& a : out) {
    const double n = static_cast<double>(a.seeds);
    a.r_at_1 /= n;
    a.r_at_3 /= n;
    a.r_at_5 /= n;
  }
  return out;
}

TopkAblation topk_ablation(const StudyData& data, const ModelDims& dims, const TrainConfig& base,
                           std::span<const Objective> objectives, std::span<const std::size_t> k_values,
                           std::span<const std::uint64_t> seeds, const EpochCallback& on_epoch) {
  for (std::size_t k : k_values) {
    if (k == 0) throw ConfigError("top-k ablation: k values must be at least 1");
  }
  TopkAblation table;
  for (Objective objective : objectives) {
    for (std::size_t k : k_values) {
      for (std::uint64_t seed : seeds) {
        const ModelBundle initial = ModelBundle::init(dims, seed);
        const KnowledgeBase kb = KnowledgeBase::build(data.documents, data.vocab, initial.document);
        TrainConfig config = base;
        config.objective = objective;
        config.k = k;
        config.seed = seed;
        const TrainResult result = train(initial, kb, {data.train, data.validation}, config, on_epoch);
        table.rows.push_back(
            {objective, k, seed, measure_retrieval(result.bundle, kb, data.test, RetrievalQuery::Prior),
             result.log.epochs.size()});
      }
    }
  }
  return table;
}

std::vector<RecallCurvePoint> recall_curve(std::span<const TrainLog> logs) {
  std::map<std::size_t, RecallCurvePoint> points;
  std::map<std::size_t, std::size_t> with_posterior;
  for (const TrainLog& log : logs) {
    for (const EpochRecord& e : log.epochs) {
      if (e.phase != Phase::Joint) continue;
      RecallCurvePoint& p = points[e.epoch];
      p.epoch = e.epoch;
      p.prior_r1 += e.train_prior.r_at_1;
      if (e.train_posterior) {
        p.posterior_r1 = p.posterior_r1.value_or(0.0) + e.train_posterior->r_at_1;
        ++with_posterior[e.epoch];
      }
      ++p.runs;
    }
  }
  std::vector<RecallCurvePoint> out;
  for (auto& [epoch, p] : points) {
    const double n = static_cast<double>(p.runs);
    p.prior_r1 /= n;
    if (with_posterior[epoch] != p.runs) {
      p.posterior_r1.reset();
    } else if (p.posterior_r1) {
      *p.posterior_r1 /= n;
    }
    out.push_back(p);
  }
  return out;
}

}  // namespace vrag
