#pragma once

#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "ppid/baselines.hpp"
#include "ppid/common.hpp"
#include "ppid/correlation.hpp"
#include "ppid/dataset.hpp"
#include "ppid/detection.hpp"
#include "ppid/gmm.hpp"
#include "ppid/metrics.hpp"

namespace ppid {

// ---------------------------------------------------------------------------
// Run configuration (INI-style config file, flat key = value with sections)
// ---------------------------------------------------------------------------

struct RunConfig {
  // [data]
  std::string data_path;
  std::string label_column = "marker";
  char delimiter = ',';
  std::string label_map = "auto";  // auto | none | power37 | <path>
  std::string features_file;       // optional: one feature name per line
  // [preprocess]
  PreprocessConfig preprocess;
  // [ranking]
  RankingMode ranking_mode = RankingMode::LabelCorrelation;
  // [gmm]
  GmmConfig gmm;
  // [sweep]
  std::vector<double> percentages = {25.0, 50.0, 75.0, 100.0};
  // [run]
  std::optional<std::uint64_t> seed;
  std::string out_dir = "out";

  void validate() const {
    if (!seed) throw ConfigError("seed is mandatory; set [run] seed or pass --seed");
    preprocess.validate();
    gmm.validate();
    if (percentages.empty()) throw ConfigError("percentages list is empty");
    for (const double p : percentages)
      if (!(p > 0.0 && p <= 100.0))
        throw ConfigError("percentage " + fmt_short(p) + " outside (0, 100]");
  }

  std::uint64_t seed_value() const {
    if (!seed) throw ConfigError("seed is mandatory; set [run] seed or pass --seed");
    return *seed;
  }
};

namespace detail {

inline bool parse_bool(const std::string& v, const std::string& key) {
  if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
  if (v == "false" || v == "0" || v == "no" || v == "off") return false;
  throw ConfigError("config key '" + key + "': expected a boolean, got '" + v + "'");
}

inline double parse_double(const std::string& v, const std::string& key) {
  char* end = nullptr;
  const double x = std::strtod(v.c_str(), &end);
  if (end != v.c_str() + v.size() || v.empty())
    throw ConfigError("config key '" + key + "': expected a number, got '" + v + "'");
  return x;
}

inline std::uint64_t parse_u64(const std::string& v, const std::string& key) {
  char* end = nullptr;
  const unsigned long long x = std::strtoull(v.c_str(), &end, 10);
  if (end != v.c_str() + v.size() || v.empty())
    throw ConfigError("config key '" + key + "': expected an unsigned integer, got '" + v + "'");
  return x;
}

}  // namespace detail

inline std::vector<double> parse_percentages(const std::string& csv) {
  std::vector<double> out;
  for (const auto& tok : split_fields(csv, ',')) {
    const std::string t = trim(tok);
    if (t.empty()) continue;
    out.push_back(detail::parse_double(t, "percentages"));
  }
  if (out.empty()) throw ConfigError("percentages list is empty");
  return out;
}

/// Strict INI reader: unknown sections or keys are config errors so typos
/// never silently fall back to defaults.
inline RunConfig load_run_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file '" + path + "'");
  RunConfig cfg;
  std::string line, section;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const std::string t = trim(line);
    if (t.empty() || t[0] == '#' || t[0] == ';') continue;
    if (t.front() == '[' && t.back() == ']') {
      section = trim(t.substr(1, t.size() - 2));
      if (section != "data" && section != "preprocess" && section != "ranking" &&
          section != "gmm" && section != "sweep" && section != "run")
        throw ConfigError("config '" + path + "' line " + std::to_string(line_no) +
                          ": unknown section [" + section + "]");
      continue;
    }
    const auto eq = t.find('=');
    if (eq == std::string::npos)
      throw ConfigError("config '" + path + "' line " + std::to_string(line_no) +
                        ": expected 'key = value'");
    const std::string key = trim(t.substr(0, eq));
    const std::string value = trim(t.substr(eq + 1));
    const std::string qualified = section + "." + key;

    if (qualified == "data.path") cfg.data_path = value;
    else if (qualified == "data.label_column") cfg.label_column = value;
    else if (qualified == "data.delimiter") {
      if (value.size() != 1)
        throw ConfigError("config key 'data.delimiter' must be a single character");
      cfg.delimiter = value[0];
    } else if (qualified == "data.label_map") cfg.label_map = value;
    else if (qualified == "data.features") cfg.features_file = value;
    else if (qualified == "preprocess.nonfinite_policy") {
      if (value == "clamp") cfg.preprocess.nonfinite_policy = NonfinitePolicy::Clamp;
      else if (value == "drop_row") cfg.preprocess.nonfinite_policy = NonfinitePolicy::DropRow;
      else throw ConfigError("config key 'preprocess.nonfinite_policy' must be clamp or drop_row");
    } else if (qualified == "preprocess.clamp_sentinel")
      cfg.preprocess.clamp_sentinel = detail::parse_double(value, qualified);
    else if (qualified == "preprocess.standardize")
      cfg.preprocess.standardize = detail::parse_bool(value, qualified);
    else if (qualified == "preprocess.split_fraction")
      cfg.preprocess.split_fraction = detail::parse_double(value, qualified);
    else if (qualified == "ranking.mode") {
      if (value == "label_correlation") cfg.ranking_mode = RankingMode::LabelCorrelation;
      else if (value == "mean_pairwise") cfg.ranking_mode = RankingMode::MeanPairwise;
      else throw ConfigError("config key 'ranking.mode' must be label_correlation or mean_pairwise");
    } else if (qualified == "gmm.k")
      cfg.gmm.k = static_cast<std::size_t>(detail::parse_u64(value, qualified));
    else if (qualified == "gmm.epsilon") cfg.gmm.epsilon = detail::parse_double(value, qualified);
    else if (qualified == "gmm.max_iterations")
      cfg.gmm.max_iterations = static_cast<std::size_t>(detail::parse_u64(value, qualified));
    else if (qualified == "gmm.init") {
      if (value == "farthest_point") cfg.gmm.init_method = GmmInit::FarthestPoint;
      else if (value == "random_assignment") cfg.gmm.init_method = GmmInit::RandomAssignment;
      else throw ConfigError("config key 'gmm.init' must be farthest_point or random_assignment");
    } else if (qualified == "gmm.variance_floor")
      cfg.gmm.variance_floor = detail::parse_double(value, qualified);
    else if (qualified == "sweep.percentages") cfg.percentages = parse_percentages(value);
    else if (qualified == "run.seed") cfg.seed = detail::parse_u64(value, qualified);
    else if (qualified == "run.out") cfg.out_dir = value;
    else
      throw ConfigError("config '" + path + "' line " + std::to_string(line_no) +
                        ": unknown key '" + qualified + "'");
  }
  return cfg;
}

// ---------------------------------------------------------------------------
// Pipeline stages
// ---------------------------------------------------------------------------

namespace detail {

// Rethrows preserving the error category, with the pipeline stage named.
template <class Fn>
auto stage(const std::string& name, Fn&& fn) {
  try {
    return fn();
  } catch (const ConfigError& e) {
    throw ConfigError("[" + name + "] " + e.what());
  } catch (const DataError& e) {
    throw DataError("[" + name + "] " + e.what());
  } catch (const NumericError& e) {
    throw NumericError("[" + name + "] " + e.what());
  } catch (const MetricError& e) {
    throw MetricError("[" + name + "] " + e.what());
  }
}

inline Matrix project_columns(const LabeledMatrix& m, const std::vector<std::size_t>& idx) {
  Matrix out(m.row_count(), idx.size());
  for (std::size_t r = 0; r < m.row_count(); ++r) {
    const auto row = m.values.row(r);
    for (std::size_t d = 0; d < idx.size(); ++d) out(r, d) = row[idx[d]];
  }
  return out;
}

}  // namespace detail

/// Loads the dataset, applies the label map, and sanitizes non-finite cells.
/// label_map "auto" keeps already-binary labels and falls back to the builtin
/// power-system map for integer scenario ids.
inline LabeledMatrix load_and_prepare(const RunConfig& cfg) {
  return detail::stage("load", [&] {
    if (cfg.data_path.empty()) throw ConfigError("no dataset path configured");
    DatasetSchema schema;
    if (!cfg.features_file.empty()) {
      std::ifstream in(cfg.features_file);
      if (!in) throw DataError("cannot open features file '" + cfg.features_file + "'");
      std::string line;
      while (std::getline(in, line)) {
        const std::string t = trim(line);
        if (!t.empty()) schema.feature_columns.push_back(t);
      }
      schema.label_column = cfg.label_column;
      schema.delimiter = cfg.delimiter;
    } else {
      schema = schema_from_header(cfg.data_path, cfg.label_column, cfg.delimiter);
    }
    LabeledMatrix m = load_csv(cfg.data_path, schema);

    if (cfg.label_map == "none") {
      // labels used as-is
    } else if (cfg.label_map == "power37") {
      m = map_labels(m, LabelMap::power_system_default());
    } else if (cfg.label_map == "auto") {
      if (!m.labels_binary()) m = map_labels(m, LabelMap::power_system_default());
    } else {
      m = map_labels(m, LabelMap::from_csv(cfg.label_map));
    }
    return sanitize(m, cfg.preprocess.nonfinite_policy, cfg.preprocess.clamp_sentinel);
  });
}

struct TrainResult {
  DetectorModel detector;
  FitTrace trace;
  CorrelationRanking ranking;
  LabeledMatrix train;
  LabeledMatrix test;
};

namespace detail {

// Core of training once the split and ranking are fixed; shared by
// train_detector and run_sweep so sweep reuses one split and one ranking.
inline std::pair<DetectorModel, FitTrace> train_on_selection(
    const LabeledMatrix& train, const CorrelationRanking& ranking, const RunConfig& cfg,
    double percentage) {
  FeatureSelection sel =
      stage("select", [&] { return select_quartile(ranking, percentage); });

  const auto idx = stage("select", [&] {
    return selection_indices(sel, train.feature_names);
  });
  const Matrix projected = project_columns(train, idx);

  StandardizeStats stats;
  Matrix train_space;
  if (cfg.preprocess.standardize) {
    stage("standardize", [&] {
      LabeledMatrix tmp;
      tmp.values = projected;
      tmp.feature_names = sel.selected;
      tmp.labels = train.labels;
      auto [standardized, st] = standardize(tmp);
      stats = std::move(st);
      train_space = std::move(standardized.values);
      return 0;
    });
  } else {
    // identity transform
    stats.mean.assign(sel.selected.size(), 0.0);
    stats.stddev.assign(sel.selected.size(), 1.0);
    stats.zero_variance.assign(sel.selected.size(), 0);
    train_space = projected;
  }

  GmmConfig gmm_cfg = cfg.gmm;
  gmm_cfg.seed = cfg.seed_value();
  auto [model, trace] = stage("fit", [&] { return fit_gmm(train_space, gmm_cfg); });

  ClusterLabelMap cluster_map = stage("label-clusters", [&] {
    return assign_cluster_labels(model, train_space, train.class_labels());
  });

  DetectorModel det;
  det.model = std::move(model);
  det.cluster_map = std::move(cluster_map);
  det.selection = std::move(sel);
  det.stats = std::move(stats);
  return {std::move(det), std::move(trace)};
}

}  // namespace detail

/// split -> rank -> select -> fit -> label clusters, on the training side only.
inline TrainResult train_detector(const LabeledMatrix& data, const RunConfig& cfg,
                                  double percentage) {
  auto [train, test] = detail::stage("split", [&] {
    return split(data, cfg.preprocess.split_fraction, cfg.seed_value());
  });
  CorrelationRanking ranking =
      detail::stage("rank", [&] { return rank_features(train, cfg.ranking_mode); });
  auto [det, trace] = detail::train_on_selection(train, ranking, cfg, percentage);
  return {std::move(det), std::move(trace), std::move(ranking), std::move(train),
          std::move(test)};
}

/// Scores a labeled dataset with the detector and assembles the full report.
inline EvaluationReport evaluate_detector(const DetectorModel& det, const LabeledMatrix& data) {
  const auto truth = data.class_labels();
  const auto detections = score_dataset(det, data);
  std::vector<ClassLabel> predicted;
  std::vector<double> scores;
  predicted.reserve(detections.size());
  scores.reserve(detections.size());
  for (const auto& d : detections) {
    predicted.push_back(d.label);
    scores.push_back(d.attack_score);
  }
  const ConfusionMatrix cm = confusion(predicted, truth);
  const RocCurve roc = roc_curve(scores, truth);
  return make_report(cm, roc, det.selection.disclosure, det.selection.percentage);
}

// ---------------------------------------------------------------------------
// Sweep
// ---------------------------------------------------------------------------

struct BaselineRow {
  std::string source;     // "local" or "quoted"
  std::string technique;
  std::string percentage; // empty for quoted reference rows
  double dr = 0.0;
  double fpr = 0.0;
};

struct SweepRow {
  double percentage = 0.0;
  EvaluationReport report;
  FitTrace trace;
  DetectorModel detector;
};

struct SweepResult {
  std::vector<SweepRow> rows;
  std::vector<BaselineRow> comparison;
  LabeledMatrix train;  // the one split shared by every percentage
  LabeledMatrix test;
};

/// Published comparison figures reported as reference rows next to locally
/// computed results; sources are flagged so the two are never conflated.
inline std::vector<BaselineRow> quoted_reference_rows() {
  return {
      {"quoted", "nearest-neighbour", "", 0.553, 0.448},
      {"quoted", "naive-bayes", "", 0.444, 0.526},
      {"quoted", "random-forests", "", 0.605, 0.384},
      {"quoted", "em-detector", "", 0.889, 0.117},
  };
}

/// One detector per percentage over a single shared split, plus k-NN and
/// Gaussian NB baselines on the same selections.
inline SweepResult run_sweep(const LabeledMatrix& data, const RunConfig& cfg) {
  SweepResult result;
  auto [train, test] = detail::stage("split", [&] {
    return split(data, cfg.preprocess.split_fraction, cfg.seed_value());
  });
  result.train = std::move(train);
  result.test = std::move(test);
  CorrelationRanking ranking =
      detail::stage("rank", [&] { return rank_features(result.train, cfg.ranking_mode); });

  const auto test_truth = result.test.class_labels();
  for (const double pct : cfg.percentages) {
    detail::stage("sweep " + fmt_short(pct) + "%", [&] {
      SweepRow row;
      row.percentage = pct;
      auto [det, trace] = detail::train_on_selection(result.train, ranking, cfg, pct);
      row.detector = std::move(det);
      row.trace = std::move(trace);
      row.report = evaluate_detector(row.detector, result.test);

      // baselines in the same standardized selected-feature space
      const auto train_idx =
          detail::selection_indices(row.detector.selection, result.train.feature_names);
      const auto test_idx =
          detail::selection_indices(row.detector.selection, result.test.feature_names);
      const Matrix train_space =
          row.detector.stats.apply(detail::project_columns(result.train, train_idx));
      const Matrix test_space =
          row.detector.stats.apply(detail::project_columns(result.test, test_idx));
      const auto train_truth = result.train.class_labels();

      const KnnModel knn = knn_fit(train_space, train_truth, 1);
      std::vector<ClassLabel> knn_pred;
      knn_pred.reserve(test_space.rows());
      for (std::size_t r = 0; r < test_space.rows(); ++r)
        knn_pred.push_back(knn_classify(knn, test_space.row(r)));
      const ConfusionMatrix knn_cm = confusion(knn_pred, test_truth);

      const GnbModel gnb = gnb_fit(train_space, train_truth);
      std::vector<ClassLabel> gnb_pred;
      gnb_pred.reserve(test_space.rows());
      for (std::size_t r = 0; r < test_space.rows(); ++r)
        gnb_pred.push_back(gnb_classify(gnb, test_space.row(r)));
      const ConfusionMatrix gnb_cm = confusion(gnb_pred, test_truth);

      const std::string pct_str = fmt_short(pct);
      result.comparison.push_back({"local", "knn-1", pct_str, detection_rate(knn_cm),
                                   false_positive_rate(knn_cm)});
      result.comparison.push_back({"local", "gaussian-nb", pct_str, detection_rate(gnb_cm),
                                   false_positive_rate(gnb_cm)});
      result.rows.push_back(std::move(row));
      return 0;
    });
  }
  for (auto& q : quoted_reference_rows()) result.comparison.push_back(q);
  return result;
}

// ---------------------------------------------------------------------------
// Synthetic dataset spec file
// ---------------------------------------------------------------------------

/// One class per line: `label,count,mean;mean;...,stddev;stddev;...`
/// Blank lines and lines starting with # are skipped.
inline std::vector<SynthClassSpec> parse_synth_spec_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open synthetic spec file '" + path + "'");
  std::vector<SynthClassSpec> specs;
  std::string line;
  std::size_t line_no = 0;
  auto parse_vec = [&](const std::string& field, const char* what) {
    std::vector<double> v;
    for (const auto& tok : split_fields(field, ';')) {
      const std::string t = trim(tok);
      if (t.empty())
        throw ConfigError("synthetic spec '" + path + "' line " + std::to_string(line_no) +
                          ": empty " + what + " entry");
      v.push_back(detail::parse_double(t, what));
    }
    return v;
  };
  while (std::getline(in, line)) {
    ++line_no;
    const std::string t = trim(line);
    if (t.empty() || t[0] == '#') continue;
    const auto fields = split_fields(t, ',');
    if (fields.size() != 4)
      throw ConfigError("synthetic spec '" + path + "' line " + std::to_string(line_no) +
                        ": expected 'class,count,means,stddevs'");
    SynthClassSpec spec;
    spec.label = trim(fields[0]);
    if (spec.label.empty())
      throw ConfigError("synthetic spec '" + path + "' line " + std::to_string(line_no) +
                        ": empty class label");
    spec.count = static_cast<std::size_t>(detail::parse_u64(trim(fields[1]), "count"));
    spec.mean = parse_vec(fields[2], "mean");
    spec.stddev = parse_vec(fields[3], "stddev");
    specs.push_back(std::move(spec));
  }
  if (specs.empty()) throw ConfigError("synthetic spec '" + path + "' defines no classes");
  return specs;
}

// ---------------------------------------------------------------------------
// Output writers (all deterministic byte-for-byte for fixed inputs)
// ---------------------------------------------------------------------------

inline void write_ranking_csv(const CorrelationRanking& ranking, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write ranking file '" + path + "'");
  out << "rank,feature,score\n";
  for (std::size_t i = 0; i < ranking.entries.size(); ++i)
    out << (i + 1) << ',' << ranking.entries[i].feature << ','
        << fmt_full(ranking.entries[i].score) << '\n';
}

inline void write_roc_csv(const RocCurve& roc, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write ROC file '" + path + "'");
  out << "threshold,fpr,tpr\n";
  for (const auto& p : roc.points)
    out << fmt_full(p.threshold) << ',' << fmt_full(p.fpr) << ',' << fmt_full(p.tpr) << '\n';
}

inline void write_selection_list(const FeatureSelection& sel, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write selection file '" + path + "'");
  for (const auto& f : sel.selected) out << f << '\n';
}

// The printed rates must recompute exactly from the printed confusion matrix;
// checked here on every emit.
inline void check_report_consistency(const EvaluationReport& rep) {
  if (accuracy(rep.confusion) != rep.accuracy ||
      detection_rate(rep.confusion) != rep.detection_rate ||
      false_positive_rate(rep.confusion) != rep.false_positive_rate)
    throw NumericError("report rates do not recompute from the confusion matrix");
}

inline void write_report_txt(const EvaluationReport& rep, const std::string& path) {
  check_report_consistency(rep);
  std::ofstream out(path);
  if (!out) throw DataError("cannot write report file '" + path + "'");
  out << "tp = " << rep.confusion.tp << '\n';
  out << "tn = " << rep.confusion.tn << '\n';
  out << "fp = " << rep.confusion.fp << '\n';
  out << "fn = " << rep.confusion.fn << '\n';
  out << "accuracy = " << fmt_full(rep.accuracy) << '\n';
  out << "detection_rate = " << fmt_full(rep.detection_rate) << '\n';
  out << "false_positive_rate = " << fmt_full(rep.false_positive_rate) << '\n';
  out << "disclosure = " << fmt_full(rep.disclosure) << '\n';
  out << "feature_percentage = " << fmt_full(rep.feature_percentage) << '\n';
  out << "auc = " << fmt_full(rep.auc) << '\n';
}

inline nlohmann::ordered_json report_to_json(const EvaluationReport& rep) {
  check_report_consistency(rep);
  nlohmann::ordered_json j;
  j["confusion"] = {{"tp", rep.confusion.tp},
                    {"tn", rep.confusion.tn},
                    {"fp", rep.confusion.fp},
                    {"fn", rep.confusion.fn}};
  j["accuracy"] = rep.accuracy;
  j["detection_rate"] = rep.detection_rate;
  j["false_positive_rate"] = rep.false_positive_rate;
  j["disclosure"] = rep.disclosure;
  j["feature_percentage"] = rep.feature_percentage;
  j["auc"] = rep.auc;
  return j;
}

inline void write_report_json(const EvaluationReport& rep, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write report file '" + path + "'");
  out << report_to_json(rep).dump(2) << '\n';
}

inline void write_sweep_csv(const SweepResult& sweep, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write sweep file '" + path + "'");
  out << "percentage,DR,accuracy,FPR,disclosure,AUC\n";
  for (const auto& row : sweep.rows) {
    check_report_consistency(row.report);
    out << fmt_short(row.percentage) << ',' << fmt_full(row.report.detection_rate) << ','
        << fmt_full(row.report.accuracy) << ',' << fmt_full(row.report.false_positive_rate)
        << ',' << fmt_full(row.report.disclosure) << ',' << fmt_full(row.report.auc) << '\n';
  }
}

inline void write_comparison_csv(const SweepResult& sweep, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write comparison file '" + path + "'");
  out << "source,technique,percentage,DR,FPR\n";
  for (const auto& row : sweep.comparison)
    out << row.source << ',' << row.technique << ',' << row.percentage << ','
        << fmt_full(row.dr) << ',' << fmt_full(row.fpr) << '\n';
}

}  // namespace ppid
