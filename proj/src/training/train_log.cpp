// SPDX-License-Identifier: Apache-2.0
#include "vrag/training/train_log.hpp"

#include <cstdio>
#include <fstream>

#include "vrag/errors.hpp"

namespace vrag {
namespace {

std::string number(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6f", v);
  return buf;
}

}  // namespace

std::string to_string(Phase phase) { return phase == Phase::Joint ? "joint" : "finetune"; }

nlohmann::ordered_json to_json(const RetrievalMetrics& m) {
  nlohmann::ordered_json j;
  j["r_at_1"] = m.r_at_1;
  j["r_at_3"] = m.r_at_3;
  j["r_at_5"] = m.r_at_5;
  j["mrr_at_5"] = m.mrr_at_5;
  j["count"] = m.count;
  j["excluded"] = m.excluded;
  return j;
}

std::string TrainLog::to_csv(bool with_phase) const {
  std::string out;
  if (with_phase) out += "phase,";
  out += "epoch,loss,prior_r1,prior_r5,prior_mrr5,post_r1,post_r5,post_mrr5,seconds\n";
  for (const EpochRecord& e : epochs) {
    if (with_phase) out += to_string(e.phase) + ",";
    out += std::to_string(e.epoch) + "," + number(e.loss) + ",";
    out += number(e.train_prior.r_at_1) + "," + number(e.train_prior.r_at_5) + "," +
           number(e.train_prior.mrr_at_5) + ",";
    if (e.train_posterior) {
      out += number(e.train_posterior->r_at_1) + "," + number(e.train_posterior->r_at_5) + "," +
             number(e.train_posterior->mrr_at_5) + ",";
    } else {
      out += ",,,";
    }
    out += number(e.seconds) + "\n";
  }
  return out;
}

void TrainLog::write_csv(const std::filesystem::path& path, bool with_phase) const {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw DataError("cannot write " + path.string());
  f << to_csv(with_phase);
  if (!f) throw DataError("failed writing " + path.string());
}

nlohmann::ordered_json TrainLog::to_json(bool with_timing) const {
  nlohmann::ordered_json j;
  j["monitored_metric"] = monitored_metric;
  j["baseline"] = baseline;
  j["best_epoch"] = best_epoch;
  j["best_value"] = best_value;
  j["stopped_early"] = stopped_early;
  j["epochs"] = nlohmann::ordered_json::array();
  for (const EpochRecord& e : epochs) {
    nlohmann::ordered_json r;
    r["phase"] = to_string(e.phase);
    r["epoch"] = e.epoch;
    r["loss"] = e.loss;
    r["train_prior"] = vrag::to_json(e.train_prior);
    r["train_posterior"] = e.train_posterior ? vrag::to_json(*e.train_posterior) : nlohmann::ordered_json();
    r["validation_prior"] = vrag::to_json(e.validation_prior);
    r["validation_posterior"] =
        e.validation_posterior ? vrag::to_json(*e.validation_posterior) : nlohmann::ordered_json();
    r["monitored"] = e.monitored;
    if (with_timing) r["seconds"] = e.seconds;
    j["epochs"].push_back(std::move(r));
  }
  return j;
}

void TrainLog::append(const TrainLog& other) {
  epochs.insert(epochs.end(), other.epochs.begin(), other.epochs.end());
  monitored_metric = other.monitored_metric;
  baseline = other.baseline;
  best_epoch = other.best_epoch;
  best_value = other.best_value;
  stopped_early = other.stopped_early;
}

}  // namespace vrag
