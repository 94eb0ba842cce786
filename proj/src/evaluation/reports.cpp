// SPDX-License-Identifier: Apache-2.0
#include "vrag/evaluation/reports.hpp"

#include <cstdio>

namespace vrag {
namespace {

double pct(double fraction) { return 100.0 * fraction; }

std::string number(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.6f", v);
  return buf;
}

nlohmann::ordered_json to_json(const GenerationMetrics& m) {
  nlohmann::ordered_json j;
  j["b1"] = pct(m.b1);
  j["b4"] = pct(m.b4);
  j["bp1"] = pct(m.bp1);
  j["bp4"] = pct(m.bp4);
  return j;
}

std::string join(const Tokens& tokens) {
  std::string s;
  for (const std::string& t : tokens) {
    if (!s.empty()) s += ' ';
    s += t;
  }
  return s;
}

}  // namespace

nlohmann::ordered_json to_json(const EvalReport& report) {
  nlohmann::ordered_json j;
  j["instances"] = report.instances;
  j["k"] = report.k;
  nlohmann::ordered_json r;
  r["r_at_1"] = pct(report.retrieval.r_at_1);
  r["r_at_5"] = pct(report.retrieval.r_at_5);
  r["mrr_at_5"] = pct(report.retrieval.mrr_at_5);
  r["count"] = report.retrieval.count;
  r["excluded"] = report.retrieval.excluded;
  j["retrieval"] = r;
  nlohmann::ordered_json g = nlohmann::ordered_json::object();
  for (const StrategyResult& s : report.strategies) g[to_string(s.strategy)] = to_json(s.metrics);
  j["generation"] = g;
  return j;
}

std::string to_csv(const EvalReport& report) {
  std::string out = "metric,strategy,value\n";
  out += "r_at_1,prior," + number(pct(report.retrieval.r_at_1)) + "\n";
  out += "r_at_5,prior," + number(pct(report.retrieval.r_at_5)) + "\n";
  out += "mrr_at_5,prior," + number(pct(report.retrieval.mrr_at_5)) + "\n";
  for (const StrategyResult& s : report.strategies) {
    const std::string name = to_string(s.strategy);
    out += "b1," + name + "," + number(pct(s.metrics.b1)) + "\n";
    out += "b4," + name + "," + number(pct(s.metrics.b4)) + "\n";
    out += "bp1," + name + "," + number(pct(s.metrics.bp1)) + "\n";
    out += "bp4," + name + "," + number(pct(s.metrics.bp4)) + "\n";
  }
  return out;
}

std::string predictions_jsonl(const EvalReport& report) {
  std::string out;
  for (const StrategyResult& s : report.strategies) {
    for (const Prediction& p : s.predictions) {
      nlohmann::ordered_json j;
      j["instance"] = p.instance_id;
      j["strategy"] = to_string(s.strategy);
      j["document"] = p.document_id;
      j["hypothesis"] = join(p.hypothesis);
      j["b1"] = pct(p.b1);
      j["b4"] = pct(p.b4);
      out += j.dump() + "\n";
    }
  }
  return out;
}

nlohmann::ordered_json to_json(const MemorizationReport& report) {
  nlohmann::ordered_json j;
  j["removed_documents"] = report.removed_documents.size();
  j["full_index"] = to_json(report.full_index);
  j["ablated_index"] = to_json(report.ablated_index);
  nlohmann::ordered_json rows = nlohmann::ordered_json::array();
  for (const MemorizationRow& r : report.rows) {
    nlohmann::ordered_json row;
    row["metric"] = r.metric;
    row["strategy"] = to_string(r.strategy);
    row["before"] = pct(r.before);
    row["after"] = pct(r.after);
    row["change_percent"] = r.change_percent ? nlohmann::ordered_json(*r.change_percent) : nlohmann::ordered_json();
    rows.push_back(row);
  }
  j["rows"] = rows;
  return j;
}

std::string to_csv(const MemorizationReport& report) {
  std::string out = "metric,strategy,before,after,change_percent\n";
  for (const MemorizationRow& r : report.rows) {
    out += r.metric + "," + to_string(r.strategy) + "," + number(pct(r.before)) + "," + number(pct(r.after)) + "," +
           (r.change_percent ? number(*r.change_percent) : "") + "\n";
  }
  return out;
}

std::string to_csv(std::span<const RecallCurvePoint> curve) {
  std::string out = "epoch,prior_r1,post_r1,runs\n";
  for (const RecallCurvePoint& p : curve) {
    out += std::to_string(p.epoch) + "," + number(p.prior_r1) + "," + (p.posterior_r1 ? number(*p.posterior_r1) : "") +
           "," + std::to_string(p.runs) + "\n";
  }
  return out;
}

}  // namespace vrag
