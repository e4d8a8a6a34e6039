// Command-line front door for the privacy-preserving intrusion detection
// pipeline: ingest -> rank/select -> EM fit -> detect -> evaluate/report.

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "ppid/pipeline.hpp"

namespace fs = std::filesystem;
using namespace ppid;

namespace {

// Exit codes: 0 success, 2 config, 3 data, 4 numerical, 5 metric undefined,
// 1 anything unexpected.
constexpr int kExitConfig = 2;
constexpr int kExitData = 3;
constexpr int kExitNumeric = 4;
constexpr int kExitMetric = 5;

struct CommonFlags {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::string out_dir;
  std::string data_path;
  std::string label_column;
  std::string label_map;
  std::string delimiter;
  std::string mode;
  std::optional<std::size_t> k;
};

void add_common_options(CLI::App* cmd, CommonFlags& flags, bool with_data = true) {
  cmd->add_option("--config", flags.config_path, "config file (key = value with sections)");
  cmd->add_option("--seed", flags.seed, "seed; overrides [run] seed");
  cmd->add_option("--out", flags.out_dir, "output directory; overrides [run] out");
  if (with_data) {
    cmd->add_option("--data", flags.data_path, "dataset CSV; overrides [data] path");
    cmd->add_option("--label-column", flags.label_column, "label column name (default marker)");
    cmd->add_option("--label-map", flags.label_map,
                    "label map: auto, none, power37 or a scenario,class CSV");
    cmd->add_option("--delimiter", flags.delimiter, "field delimiter (single character)");
  }
}

RunConfig resolve_config(const CommonFlags& flags) {
  RunConfig cfg;
  if (!flags.config_path.empty()) cfg = load_run_config(flags.config_path);
  if (flags.seed) cfg.seed = *flags.seed;
  if (!flags.out_dir.empty()) cfg.out_dir = flags.out_dir;
  if (!flags.data_path.empty()) cfg.data_path = flags.data_path;
  if (!flags.label_column.empty()) cfg.label_column = flags.label_column;
  if (!flags.label_map.empty()) cfg.label_map = flags.label_map;
  if (!flags.delimiter.empty()) {
    if (flags.delimiter.size() != 1) throw ConfigError("--delimiter must be a single character");
    cfg.delimiter = flags.delimiter[0];
  }
  if (!flags.mode.empty()) {
    if (flags.mode == "label_correlation") cfg.ranking_mode = RankingMode::LabelCorrelation;
    else if (flags.mode == "mean_pairwise") cfg.ranking_mode = RankingMode::MeanPairwise;
    else throw ConfigError("--mode must be label_correlation or mean_pairwise");
  }
  if (flags.k) cfg.gmm.k = *flags.k;
  return cfg;
}

fs::path ensure_out_dir(const RunConfig& cfg) {
  fs::path dir(cfg.out_dir);
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw DataError("cannot create output directory '" + cfg.out_dir + "'");
  return dir;
}

std::string pct_tag(double pct) {
  std::string s = fmt_short(pct);
  for (auto& ch : s)
    if (ch == '.') ch = '_';
  return s;
}

void print_report_summary(const EvaluationReport& rep) {
  std::printf("  accuracy %.4f  DR %.4f  FPR %.4f  AUC %.4f  disclosure %.4f\n",
              rep.accuracy, rep.detection_rate, rep.false_positive_rate, rep.auc,
              rep.disclosure);
  std::printf("  confusion TP %llu TN %llu FP %llu FN %llu\n",
              static_cast<unsigned long long>(rep.confusion.tp),
              static_cast<unsigned long long>(rep.confusion.tn),
              static_cast<unsigned long long>(rep.confusion.fp),
              static_cast<unsigned long long>(rep.confusion.fn));
}

int cmd_rank(const CommonFlags& flags) {
  RunConfig cfg = resolve_config(flags);
  cfg.validate();
  const auto out = ensure_out_dir(cfg);
  const LabeledMatrix data = load_and_prepare(cfg);
  const CorrelationRanking ranking = rank_features(data, cfg.ranking_mode);
  const auto path = out / "ranking.csv";
  write_ranking_csv(ranking, path.string());
  std::printf("ranked %zu features (%s) -> %s\n", ranking.entries.size(),
              to_string(cfg.ranking_mode), path.c_str());
  const std::size_t top = std::min<std::size_t>(10, ranking.entries.size());
  for (std::size_t i = 0; i < top; ++i)
    std::printf("  %2zu. %-24s %.6f\n", i + 1, ranking.entries[i].feature.c_str(),
                ranking.entries[i].score);
  return 0;
}

int cmd_train(const CommonFlags& flags, double percentage) {
  RunConfig cfg = resolve_config(flags);
  cfg.validate();
  if (!(percentage > 0.0 && percentage <= 100.0))
    throw ConfigError("--percent must lie in (0, 100]");
  const auto out = ensure_out_dir(cfg);
  const LabeledMatrix data = load_and_prepare(cfg);
  TrainResult res = train_detector(data, cfg, percentage);

  const auto detector_path = out / "detector.txt";
  save_detector(res.detector, detector_path.string());
  write_ranking_csv(res.ranking, (out / "ranking.csv").string());
  write_selection_list(res.detector.selection, (out / "selected_features.txt").string());
  write_csv(res.test, (out / "holdout.csv").string(), cfg.label_column, cfg.delimiter);

  std::printf("trained detector: %zu/%zu features (%s%%), K=%zu -> %s\n",
              res.detector.selection.selected.size(), res.detector.selection.total_features,
              fmt_short(percentage).c_str(), res.detector.model.components(),
              detector_path.c_str());
  std::printf("  fit: %zu iterations, final log-likelihood %.6f, converged %s\n",
              res.trace.iterations_run, res.trace.log_likelihood.back(),
              res.trace.converged ? "yes" : "no");
  if (res.detector.cluster_map.degenerate)
    std::printf("  warning: degenerate cluster labeling (%s)\n",
                res.detector.cluster_map.degenerate_note.c_str());
  std::printf("  holdout split written to %s\n", (out / "holdout.csv").c_str());
  return 0;
}

int cmd_evaluate(const CommonFlags& flags, const std::string& detector_path, bool roc_only) {
  RunConfig cfg = resolve_config(flags);
  if (!cfg.seed) cfg.seed = 0;  // evaluation is deterministic; seed unused
  cfg.validate();
  if (detector_path.empty()) throw ConfigError("--detector is required");
  const auto out = ensure_out_dir(cfg);
  const DetectorModel det = load_detector(detector_path);
  const LabeledMatrix data = load_and_prepare(cfg);
  const EvaluationReport rep = evaluate_detector(det, data);

  write_roc_csv(rep.roc, (out / "roc.csv").string());
  if (!roc_only) {
    write_report_txt(rep, (out / "report.txt").string());
    write_report_json(rep, (out / "report.json").string());
    std::printf("evaluated %zu rows\n", static_cast<std::size_t>(rep.confusion.total()));
    print_report_summary(rep);
    std::printf("  wrote %s, %s, %s\n", (out / "report.txt").c_str(),
                (out / "report.json").c_str(), (out / "roc.csv").c_str());
  } else {
    std::printf("ROC over %zu rows: AUC %.6f, %zu points -> %s\n",
                static_cast<std::size_t>(rep.confusion.total()), rep.auc,
                rep.roc.points.size(), (out / "roc.csv").c_str());
  }
  return 0;
}

int cmd_sweep(const CommonFlags& flags, const std::string& percentages_csv) {
  RunConfig cfg = resolve_config(flags);
  if (!percentages_csv.empty()) cfg.percentages = parse_percentages(percentages_csv);
  cfg.validate();
  const auto out = ensure_out_dir(cfg);
  const LabeledMatrix data = load_and_prepare(cfg);
  const SweepResult sweep = run_sweep(data, cfg);

  write_sweep_csv(sweep, (out / "sweep.csv").string());
  write_comparison_csv(sweep, (out / "comparison.csv").string());
  for (const auto& row : sweep.rows) {
    const std::string tag = pct_tag(row.percentage);
    save_detector(row.detector, (out / ("detector_" + tag + ".txt")).string());
    write_report_txt(row.report, (out / ("report_" + tag + ".txt")).string());
    write_report_json(row.report, (out / ("report_" + tag + ".json")).string());
    write_roc_csv(row.report.roc, (out / ("roc_" + tag + ".csv")).string());
  }

  std::printf("sweep over %zu percentages -> %s\n", sweep.rows.size(),
              (out / "sweep.csv").c_str());
  std::printf("  %%feat      DR    accuracy     FPR   disclosure     AUC\n");
  for (const auto& row : sweep.rows)
    std::printf("  %5s  %.4f      %.4f  %.4f       %.4f  %.4f\n",
                fmt_short(row.percentage).c_str(), row.report.detection_rate,
                row.report.accuracy, row.report.false_positive_rate, row.report.disclosure,
                row.report.auc);
  std::printf("comparison (local = computed here, quoted = published reference):\n");
  for (const auto& row : sweep.comparison)
    std::printf("  %-6s %-18s %5s  DR %.4f  FPR %.4f\n", row.source.c_str(),
                row.technique.c_str(), row.percentage.empty() ? "-" : row.percentage.c_str(),
                row.dr, row.fpr);
  return 0;
}

int cmd_synth(const CommonFlags& flags, const std::string& spec_path) {
  RunConfig cfg = resolve_config(flags);
  cfg.validate();
  if (spec_path.empty()) throw ConfigError("--spec is required");
  const auto out = ensure_out_dir(cfg);
  const auto specs = parse_synth_spec_file(spec_path);
  const LabeledMatrix m = synth_generate(specs, cfg.seed_value());
  const auto path = out / "synth.csv";
  write_csv(m, path.string(), cfg.label_column.empty() ? "marker" : cfg.label_column,
            cfg.delimiter);
  std::printf("generated %zu rows x %zu features -> %s\n", m.row_count(), m.feature_count(),
              path.c_str());
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"privacy-preserving intrusion detection pipeline for SCADA telemetry"};
  app.require_subcommand(1);

  CommonFlags rank_flags, train_flags, eval_flags, sweep_flags, roc_flags, synth_flags;
  double train_percent = 100.0;
  std::string eval_detector, roc_detector, sweep_percentages, synth_spec;

  auto* rank = app.add_subcommand("rank", "rank features by correlation, write ranking CSV");
  add_common_options(rank, rank_flags);
  rank->add_option("--mode", rank_flags.mode, "label_correlation or mean_pairwise");

  auto* train = app.add_subcommand("train", "train a detector at a feature percentage");
  add_common_options(train, train_flags);
  train->add_option("--mode", train_flags.mode, "label_correlation or mean_pairwise");
  train->add_option("--k", train_flags.k, "mixture components");
  train->add_option("--percent", train_percent, "feature percentage in (0, 100]");

  auto* evaluate = app.add_subcommand("evaluate", "evaluate a detector on a labeled dataset");
  add_common_options(evaluate, eval_flags);
  evaluate->add_option("--detector", eval_detector, "detector file from train/sweep");

  auto* sweep = app.add_subcommand("sweep", "train/evaluate across feature percentages");
  add_common_options(sweep, sweep_flags);
  sweep->add_option("--mode", sweep_flags.mode, "label_correlation or mean_pairwise");
  sweep->add_option("--k", sweep_flags.k, "mixture components");
  sweep->add_option("--percentages", sweep_percentages, "comma-separated list, default 25,50,75,100");

  auto* roc = app.add_subcommand("roc", "write the ROC curve for a detector on a dataset");
  add_common_options(roc, roc_flags);
  roc->add_option("--detector", roc_detector, "detector file from train/sweep");

  auto* synth = app.add_subcommand("synth", "generate a synthetic Gaussian dataset");
  add_common_options(synth, synth_flags, false);
  synth->add_option("--spec", synth_spec, "spec file: class,count,means,stddevs per line");
  synth->add_option("--label-column", synth_flags.label_column, "label column name for output");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);  // prints help or the parse error
    return rc == 0 ? 0 : kExitConfig;
  }

  try {
    if (rank->parsed()) return cmd_rank(rank_flags);
    if (train->parsed()) return cmd_train(train_flags, train_percent);
    if (evaluate->parsed()) return cmd_evaluate(eval_flags, eval_detector, false);
    if (sweep->parsed()) return cmd_sweep(sweep_flags, sweep_percentages);
    if (roc->parsed()) return cmd_evaluate(roc_flags, roc_detector, true);
    if (synth->parsed()) return cmd_synth(synth_flags, synth_spec);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const DataError& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return kExitData;
  } catch (const NumericError& e) {
    std::cerr << "numerical error: " << e.what() << "\n";
    return kExitNumeric;
  } catch (const MetricError& e) {
    std::cerr << "metric undefined: " << e.what() << "\n";
    return kExitMetric;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
