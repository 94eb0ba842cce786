// SPDX-License-Identifier: Apache-2.0
#include "vrag/cli/commands.hpp"

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <ctime>
#include <fstream>
#include <map>
#include <ostream>

#include "CLI11.hpp"
#include "vrag/errors.hpp"
#include "vrag/evaluation/reports.hpp"
#include "vrag/evaluation/studies.hpp"

namespace vrag {
namespace {

namespace fs = std::filesystem;
using nlohmann::ordered_json;

std::string utc_timestamp() {
  const std::time_t t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

ordered_json metadata(std::string_view command, const ExperimentConfig& config, std::optional<std::uint64_t> seed) {
  ordered_json m;
  m["timestamp"] = utc_timestamp();
  m["command"] = std::string(command);
  m["config_hash"] = config.run_hash();
  m["seed"] = seed ? ordered_json(*seed) : ordered_json();
  return m;
}

void make_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec || !fs::is_directory(dir)) throw DataError("cannot create directory " + dir.string());
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw DataError("cannot write " + path.string());
  f << text;
  if (!f) throw DataError("failed writing " + path.string());
}

std::string fmt(const char* format, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, format, v);
  return buf;
}

struct Prepared {
  StudyData data;
  ModelDims dims;
};

Prepared prepare(const ExperimentConfig& config, std::ostream& log) {
  const Dataset ds = load_dataset(config.paths.dataset());
  Prepared p;
  p.data.vocab = build_vocabulary(ds, config.vocab_min_count);
  p.data.documents = ds.documents;
  p.data.train = encode_instances(ds.train.instances, p.data.vocab, config.budget);
  p.data.validation = encode_instances(ds.validation.instances, p.data.vocab, config.budget);
  p.data.test = encode_instances(ds.test.instances, p.data.vocab, config.budget);
  p.dims = config.dims;
  p.dims.vocab_size = p.data.vocab.size();
  log << "data: " << ds.documents.size() << " documents, " << p.data.train.size() << " train / "
      << p.data.validation.size() << " val / " << p.data.test.size() << " test instances, vocabulary "
      << p.data.vocab.size() << "\n";
  const std::size_t dropped =
      ds.train.dropped_cannot_answer + ds.validation.dropped_cannot_answer + ds.test.dropped_cannot_answer;
  if (dropped > 0) log << "dropped " << dropped << " unanswerable instances\n";
  return p;
}

EpochCallback epoch_printer(std::ostream& log, std::uint64_t seed) {
  return [&log, seed](const EpochRecord& e) {
    log << "[seed " << seed << "] " << to_string(e.phase) << " epoch " << e.epoch << " loss "
        << fmt("%.4f", e.loss) << " train prior R@1 " << fmt("%.3f", e.train_prior.r_at_1);
    if (e.train_posterior) log << " post R@1 " << fmt("%.3f", e.train_posterior->r_at_1);
    log << " val " << fmt("%.4f", e.monitored) << " (" << fmt("%.1f", e.seconds) << "s)\n";
  };
}

ModelBundle load_checkpoint(const fs::path& path, const ModelDims& expected) {
  if (!fs::exists(path)) throw DataError("checkpoint not found: " + path.string() + " (run train first)");
  ModelBundle bundle = ModelBundle::load(path);
  if (!(bundle.dims == expected)) {
    throw DataError("checkpoint " + path.string() + " has dims (V=" + std::to_string(bundle.dims.vocab_size) +
                    ", emb=" + std::to_string(bundle.dims.embedding) + ", ret=" +
                    std::to_string(bundle.dims.retrieval) + ", hid=" + std::to_string(bundle.dims.hidden) +
                    ") but the config and data give (V=" + std::to_string(expected.vocab_size) + ", emb=" +
                    std::to_string(expected.embedding) + ", ret=" + std::to_string(expected.retrieval) +
                    ", hid=" + std::to_string(expected.hidden) + ")");
  }
  return bundle;
}

fs::path checkpoint_for(const ExperimentConfig& config, std::uint64_t seed,
                        const std::optional<fs::path>& checkpoint) {
  return checkpoint ? *checkpoint : config.run_dir(seed) / "checkpoint.bin";
}

void require_single_seed(const ExperimentConfig& config, const std::optional<fs::path>& checkpoint) {
  if (checkpoint && config.seeds.size() != 1) {
    throw ConfigError("--checkpoint needs exactly one seed (use --seed)");
  }
}

std::string joined_seeds(const std::vector<std::uint64_t>& seeds) {
  std::string s;
  for (std::uint64_t seed : seeds) s += (s.empty() ? "" : "_") + std::to_string(seed);
  return s;
}

ExitCode study_memorization(const ExperimentConfig& config, const std::optional<fs::path>& checkpoint,
                            std::ostream& log) {
  require_single_seed(config, checkpoint);
  const Prepared p = prepare(config, log);
  bool all_dropped = true;
  const Strategy checked = std::find(config.strategies.begin(), config.strategies.end(), Strategy::Top1) !=
                                   config.strategies.end()
                               ? Strategy::Top1
                               : config.strategies.front();
  for (std::uint64_t seed : config.seeds) {
    const ModelBundle bundle = load_checkpoint(checkpoint_for(config, seed, checkpoint), p.dims);
    const KnowledgeBase kb = KnowledgeBase::build(p.data.documents, p.data.vocab, bundle.document, config.budget);
    const MemorizationReport report =
        memorization_study(bundle, kb, p.data.test, p.data.vocab, EvalOptions{config.decode, config.strategies});
    const fs::path dir = config.run_dir(seed);
    make_dir(dir);
    ordered_json j;
    j["metadata"] = metadata("study memorization", config, seed);
    j["report"] = to_json(report);
    write_text(dir / "memorization.json", j.dump(2) + "\n");
    write_text(dir / "memorization.csv", to_csv(report));
    const MemorizationRow& b1 = report.row("b1", checked);
    log << "[seed " << seed << "] removed " << report.removed_documents.size() << " documents; "
        << to_string(checked) << " B-1 " << fmt("%.2f", 100.0 * b1.before) << " -> " << fmt("%.2f", 100.0 * b1.after);
    if (b1.change_percent) log << " (" << fmt("%+.2f", *b1.change_percent) << "%)";
    log << "\n";
    if (!(b1.after < b1.before)) all_dropped = false;
  }
  if (!all_dropped) {
    log << "check failed: B-1 did not drop for every seed\n";
    return ExitCode::CheckFailed;
  }
  return ExitCode::Ok;
}

ExitCode study_topk(const ExperimentConfig& config, std::ostream& log) {
  const Prepared p = prepare(config, log);
  const TopkAblation table = topk_ablation(p.data, p.dims, config.train, config.topk.objectives,
                                           config.topk.k_values, config.seeds, [&log](const EpochRecord& e) {
                                             if (e.epoch % 5 == 0) log << "  epoch " << e.epoch << "\n";
                                           });
  const fs::path dir = config.paths.output_dir / (config.run_hash() + "-topk-s" + joined_seeds(config.seeds));
  make_dir(dir);
  write_text(dir / "topk_ablation.csv", table.to_csv());

  bool ok = true;
  ordered_json averages = ordered_json::array();
  std::map<Objective, std::vector<AblationAverage>> by_objective;
  for (const AblationAverage& a : table.averages()) {
    ordered_json row;
    row["objective"] = to_string(a.objective);
    row["k"] = a.k;
    row["r_at_1"] = 100.0 * a.r_at_1;
    row["r_at_3"] = 100.0 * a.r_at_3;
    row["r_at_5"] = 100.0 * a.r_at_5;
    row["seeds"] = a.seeds;
    averages.push_back(row);
    by_objective[a.objective].push_back(a);
    log << to_string(a.objective) << " k=" << a.k << " R@3 " << fmt("%.4f", a.r_at_3) << "\n";
  }
  for (auto& [objective, rows] : by_objective) {
    std::sort(rows.begin(), rows.end(), [](const AblationAverage& a, const AblationAverage& b) { return a.k > b.k; });
    for (std::size_t i = 1; i < rows.size(); ++i) {
      if (rows[i].r_at_3 > rows[i - 1].r_at_3 + 0.01) ok = false;
    }
  }
  ordered_json j;
  j["metadata"] = metadata("study topk", config, std::nullopt);
  j["seeds"] = config.seeds;
  j["averages"] = averages;
  j["non_increasing_as_k_decreases"] = ok;
  write_text(dir / "topk_summary.json", j.dump(2) + "\n");
  if (!ok) {
    log << "check failed: R@3 increased as k decreased\n";
    return ExitCode::CheckFailed;
  }
  return ExitCode::Ok;
}

ExitCode study_klcheck(const ExperimentConfig& config, std::ostream& log) {
  const std::vector<KlCheckCell> cells = verify_kl_truncation(config.klcheck);
  ordered_json kl = config.to_json()["study"]["klcheck"];
  const fs::path dir = config.paths.output_dir / ("klcheck-" + fnv1a_hex(kl.dump()));
  make_dir(dir);
  std::string csv = "support_size,epsilon,delta,trials,violations,max_error\n";
  ordered_json rows = ordered_json::array();
  std::size_t violations = 0;
  for (const KlCheckCell& c : cells) {
    csv += std::to_string(c.support_size) + "," + fmt("%.17g", c.epsilon) + "," + fmt("%.17g", c.delta) + "," +
           std::to_string(c.trials) + "," + std::to_string(c.violations) + "," + fmt("%.17g", c.max_error) + "\n";
    ordered_json row;
    row["support_size"] = c.support_size;
    row["epsilon"] = c.epsilon;
    row["delta"] = c.delta;
    row["trials"] = c.trials;
    row["violations"] = c.violations;
    row["max_error"] = c.max_error;
    rows.push_back(row);
    violations += c.violations;
    log << "N=" << c.support_size << " eps=" << fmt("%g", c.epsilon) << " delta=" << fmt("%.3e", c.delta)
        << " max|KL-KLd|=" << fmt("%.3e", c.max_error) << " violations " << c.violations << "/" << c.trials << "\n";
  }
  ordered_json j;
  j["metadata"] = metadata("study klcheck", config, std::nullopt);
  j["config"] = kl;
  j["cells"] = rows;
  j["violations"] = violations;
  write_text(dir / "klcheck.json", j.dump(2) + "\n");
  write_text(dir / "klcheck.csv", csv);
  if (violations > 0) {
    log << "check failed: " << violations << " trials violate the bound\n";
    return ExitCode::CheckFailed;
  }
  return ExitCode::Ok;
}

}  // namespace

ExitCode cmd_generate_data(const ExperimentConfig& config, std::ostream& log) {
  if (!config.synthetic) throw ConfigError("generate-data needs a \"synthetic\" section in the config");
  const SyntheticCorpus corpus = generate_synthetic(*config.synthetic);
  make_dir(config.paths.data_dir);
  write_corpus(corpus, config.paths.data_dir);
  log << "wrote " << corpus.documents.size() << " documents, " << corpus.train.size() << " train, "
      << corpus.validation.size() << " val and " << corpus.test.size() << " test instances to "
      << config.paths.data_dir.string() << "\n";
  return ExitCode::Ok;
}

ExitCode cmd_train(const ExperimentConfig& config, std::ostream& log) {
  const Prepared p = prepare(config, log);
  for (std::uint64_t seed : config.seeds) {
    const fs::path dir = config.run_dir(seed);
    make_dir(dir);
    const ModelBundle initial = ModelBundle::init(p.dims, seed);
    const KnowledgeBase kb = KnowledgeBase::build(p.data.documents, p.data.vocab, initial.document, config.budget);
    TrainConfig tc = config.train;
    tc.seed = seed;
    log << "[seed " << seed << "] training " << to_string(tc.objective) << " into " << dir.string() << "\n";
    TrainResult result = train(initial, kb, {p.data.train, p.data.validation}, tc, epoch_printer(log, seed));
    ordered_json logs;
    logs["metadata"] = metadata("train", config, seed);
    logs["joint"] = result.log.to_json();
    TrainLog combined = result.log;
    if (config.finetune) {
      TrainResult tuned = finetune_decoder(result.bundle, kb, {p.data.train, p.data.validation}, tc,
                                           epoch_printer(log, seed));
      logs["finetune"] = tuned.log.to_json();
      combined.append(tuned.log);
      result.bundle = std::move(tuned.bundle);
    }
    result.bundle.save(dir / "checkpoint.bin");
    kb.index.save(dir / "index.bin");
    std::string vocab_text;
    for (const std::string& t : p.data.vocab.ordinary_tokens()) vocab_text += t + "\n";
    write_text(dir / "vocab.txt", vocab_text);
    write_text(dir / "config.json", config.to_json().dump(2) + "\n");
    combined.write_csv(dir / "train_log.csv", config.finetune);
    write_text(dir / "train_log.json", logs.dump(2) + "\n");
    log << "[seed " << seed << "] best epoch " << result.log.best_epoch << ", validation prior R@1 "
        << fmt("%.4f", result.log.best_value) << "\n";
  }
  return ExitCode::Ok;
}

ExitCode cmd_evaluate(const ExperimentConfig& config, const std::optional<fs::path>& checkpoint, std::ostream& log) {
  require_single_seed(config, checkpoint);
  const Prepared p = prepare(config, log);
  for (std::uint64_t seed : config.seeds) {
    const ModelBundle bundle = load_checkpoint(checkpoint_for(config, seed, checkpoint), p.dims);
    const KnowledgeBase kb = KnowledgeBase::build(p.data.documents, p.data.vocab, bundle.document, config.budget);
    const EvalReport report = evaluate(bundle, kb, p.data.test, p.data.vocab, EvalOptions{config.decode, config.strategies});
    const fs::path dir = config.run_dir(seed);
    make_dir(dir);
    ordered_json j;
    j["metadata"] = metadata("evaluate", config, seed);
    j["metrics"] = to_json(report);
    write_text(dir / "eval_report.json", j.dump(2) + "\n");
    write_text(dir / "eval_report.csv", to_csv(report));
    write_text(dir / "predictions.jsonl", predictions_jsonl(report));
    log << "[seed " << seed << "] R@1 " << fmt("%.2f", 100.0 * report.retrieval.r_at_1) << " R@5 "
        << fmt("%.2f", 100.0 * report.retrieval.r_at_5) << " MRR@5 " << fmt("%.2f", 100.0 * report.retrieval.mrr_at_5);
    for (const StrategyResult& s : report.strategies) {
      log << " | " << to_string(s.strategy) << " B-1 " << fmt("%.2f", 100.0 * s.metrics.b1) << " B-4 "
          << fmt("%.2f", 100.0 * s.metrics.b4) << " BP-1 " << fmt("%.2f", 100.0 * s.metrics.bp1) << " BP-4 "
          << fmt("%.2f", 100.0 * s.metrics.bp4);
    }
    log << "\n";
  }
  return ExitCode::Ok;
}

ExitCode cmd_study(const ExperimentConfig& config, std::string_view study, const std::optional<fs::path>& checkpoint,
                   std::ostream& log) {
  if (study == "memorization") return study_memorization(config, checkpoint, log);
  if (study == "topk") return study_topk(config, log);
  if (study == "klcheck") return study_klcheck(config, log);
  throw ConfigError("unknown study '" + std::string(study) + "' (expected memorization, topk or klcheck)");
}

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Knowledge-grounded dialog with RAG and variational (VRAG) retrievers"};
  app.name("vrag");
  app.require_subcommand(1, 1);
  app.fallthrough();

  std::string config_path;
  std::uint64_t seed = 0;
  std::string objective;
  std::size_t k = 0;
  bool finetune = false;
  std::string strategy;
  std::string out_dir;
  std::string checkpoint;
  double delta = 0.0;
  std::size_t trials = 0;
  std::string study_name;

  app.add_option("--config", config_path, "Experiment config (JSON); defaults apply when omitted");
  auto* seed_opt = app.add_option("--seed", seed, "Run with this single seed (overrides the config)");
  app.add_option("--objective", objective, "Training objective")->check(CLI::IsMember({"rag", "vrag"}));
  auto* k_opt = app.add_option("--k", k, "Retrieved documents for training and top-k decoding")
                    ->check(CLI::PositiveNumber);
  app.add_flag("--finetune", finetune, "Fine-tune the decoder after joint training");
  app.add_option("--strategy", strategy, "Decoding strategy")->check(CLI::IsMember({"top1", "topk", "both"}));
  app.add_option("--out", out_dir, "Output directory (data directory for generate-data)");
  app.add_option("--checkpoint", checkpoint, "Checkpoint to evaluate instead of the run directory's");
  auto* delta_opt = app.add_option("--delta", delta, "klcheck: force this delta in every cell");
  auto* trials_opt = app.add_option("--trials", trials, "klcheck: trials per cell")->check(CLI::PositiveNumber);

  auto* gen = app.add_subcommand("generate-data", "Write a synthetic corpus as JSON Lines");
  auto* train_cmd = app.add_subcommand("train", "Train one model per seed");
  auto* eval_cmd = app.add_subcommand("evaluate", "Evaluate trained checkpoints on the test split");
  auto* study_cmd = app.add_subcommand("study", "Run a study: memorization, topk or klcheck");
  study_cmd->add_option("name", study_name, "Study to run")
      ->required()
      ->check(CLI::IsMember({"memorization", "topk", "klcheck"}));

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::ParseError& e) {
    app.exit(e, out, err);
    return static_cast<int>(ExitCode::Config);
  }

  try {
    ExperimentConfig config = config_path.empty() ? ExperimentConfig{} : ExperimentConfig::load(config_path);
    ConfigOverrides overrides;
    if (seed_opt->count() > 0) overrides.seed = seed;
    if (!objective.empty()) overrides.objective = parse_objective(objective);
    if (k_opt->count() > 0) overrides.k = k;
    overrides.finetune = finetune;
    if (strategy == "both") {
      overrides.strategies = std::vector<Strategy>{Strategy::Top1, Strategy::TopK};
    } else if (!strategy.empty()) {
      overrides.strategies = std::vector<Strategy>{parse_strategy(strategy)};
    }
    overrides.apply(config);
    if (delta_opt->count() > 0) config.klcheck.forced_delta = delta;
    if (trials_opt->count() > 0) config.klcheck.trials = trials;
    if (!out_dir.empty()) {
      if (gen->parsed()) {
        config.paths.data_dir = out_dir;
      } else {
        config.paths.output_dir = out_dir;
      }
    }
    const std::optional<fs::path> ckpt = checkpoint.empty() ? std::nullopt : std::optional<fs::path>(checkpoint);

    ExitCode code = ExitCode::Ok;
    if (gen->parsed()) {
      code = cmd_generate_data(config, out);
    } else if (train_cmd->parsed()) {
      code = cmd_train(config, out);
    } else if (eval_cmd->parsed()) {
      code = cmd_evaluate(config, ckpt, out);
    } else if (study_cmd->parsed()) {
      code = cmd_study(config, study_name, ckpt, out);
    }
    return static_cast<int>(code);
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << "\n";
    return static_cast<int>(ExitCode::Config);
  } catch (const DataError& e) {
    err << "data error: " << e.what() << "\n";
    return static_cast<int>(ExitCode::Data);
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return static_cast<int>(ExitCode::Failure);
  }
}

}  // namespace vrag
