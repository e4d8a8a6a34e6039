#pragma once

#include <algorithm>
#include <cstdint>
#include <fstream>
#include <map>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include "ppid/common.hpp"
#include "ppid/correlation.hpp"
#include "ppid/dataset.hpp"
#include "ppid/gmm.hpp"

namespace ppid {

// ---------------------------------------------------------------------------
// Cluster -> class mapping
// ---------------------------------------------------------------------------

struct ClusterLabelMap {
  std::vector<ClassLabel> labels;          // one per component
  std::vector<std::uint64_t> normal_counts;
  std::vector<std::uint64_t> attack_counts;
  bool degenerate = false;
  std::string degenerate_note;
};

/// Majority-vote labeling of components from hard cluster assignments of the
/// training rows. Ties and empty components go to Attack. The map is flagged
/// degenerate when training data is single-class or when some class ends up
/// with no component.
inline ClusterLabelMap assign_cluster_labels(const GmmModel& model, const Matrix& train,
                                             const std::vector<ClassLabel>& train_labels) {
  if (train.rows() != train_labels.size())
    throw DataError("assign_cluster_labels: label count does not match row count");
  if (train.rows() == 0) throw DataError("assign_cluster_labels: empty training data");
  const std::size_t K = model.components();
  ClusterLabelMap map;
  map.labels.resize(K);
  map.normal_counts.assign(K, 0);
  map.attack_counts.assign(K, 0);

  for (std::size_t i = 0; i < train.rows(); ++i) {
    const auto pred = predict_cluster(model, train.row(i));
    if (train_labels[i] == ClassLabel::Attack) ++map.attack_counts[pred.component];
    else ++map.normal_counts[pred.component];
  }

  std::vector<std::string> notes;
  for (std::size_t k = 0; k < K; ++k) {
    const auto a = map.attack_counts[k];
    const auto n = map.normal_counts[k];
    if (a + n == 0) {
      map.labels[k] = ClassLabel::Attack;
      notes.push_back("component " + std::to_string(k) + " received no training rows");
    } else {
      map.labels[k] = a >= n ? ClassLabel::Attack : ClassLabel::Normal;
    }
  }

  const bool has_normal_rows =
      std::any_of(train_labels.begin(), train_labels.end(),
                  [](ClassLabel c) { return c == ClassLabel::Normal; });
  const bool has_attack_rows =
      std::any_of(train_labels.begin(), train_labels.end(),
                  [](ClassLabel c) { return c == ClassLabel::Attack; });
  if (!has_normal_rows || !has_attack_rows)
    notes.push_back("training data contains a single class");
  else {
    const bool any_normal = std::count(map.labels.begin(), map.labels.end(),
                                       ClassLabel::Normal) > 0;
    const bool any_attack = std::count(map.labels.begin(), map.labels.end(),
                                       ClassLabel::Attack) > 0;
    if (!any_normal || !any_attack)
      notes.push_back("both classes present in training data but only one cluster label used");
  }

  if (!notes.empty()) {
    map.degenerate = true;
    for (std::size_t i = 0; i < notes.size(); ++i)
      map.degenerate_note += (i ? "; " : "") + notes[i];
  }
  return map;
}

// ---------------------------------------------------------------------------
// Detector
// ---------------------------------------------------------------------------

/// A fitted mixture over the selected standardized features, with the
/// cluster->class map and everything needed to transform raw rows.
struct DetectorModel {
  GmmModel model;
  ClusterLabelMap cluster_map;
  FeatureSelection selection;
  StandardizeStats stats;  // per selected feature, in selection order
};

struct Detection {
  ClassLabel label = ClassLabel::Normal;
  double attack_score = 0.0;  // summed posterior of Attack-labeled components
  std::size_t component = 0;
};

namespace detail {

// Column index of each selected feature inside `names`; errors name the
// missing feature.
inline std::vector<std::size_t> selection_indices(const FeatureSelection& sel,
                                                  const std::vector<std::string>& names) {
  std::map<std::string, std::size_t> index;
  for (std::size_t i = 0; i < names.size(); ++i) index.emplace(names[i], i);
  std::vector<std::size_t> out;
  out.reserve(sel.selected.size());
  for (const auto& f : sel.selected) {
    const auto it = index.find(f);
    if (it == index.end()) throw DataError("selected feature '" + f + "' missing from input row");
    out.push_back(it->second);
  }
  return out;
}

inline void write_counts(std::ostream& out, const ClusterLabelMap& map) {
  out << "normal-counts";
  for (const auto c : map.normal_counts) out << ' ' << c;
  out << "\nattack-counts";
  for (const auto c : map.attack_counts) out << ' ' << c;
  out << '\n';
}

inline Detection classify_projected(const DetectorModel& det, std::span<const double> raw_selected) {
  std::vector<double> z(raw_selected.size());
  for (std::size_t d = 0; d < z.size(); ++d) z[d] = det.stats.apply_one(d, raw_selected[d]);
  const auto pred = predict_cluster(det.model, z);

  Detection out;
  out.attack_score = 0.0;
  for (std::size_t k = 0; k < pred.posterior.size(); ++k)
    if (det.cluster_map.labels[k] == ClassLabel::Attack) out.attack_score += pred.posterior[k];

  // argmax posterior; exact ties prefer an Attack-labeled component so the
  // label agrees with thresholding attack_score at 0.5 when K = 2
  std::size_t best = 0;
  for (std::size_t k = 1; k < pred.posterior.size(); ++k) {
    if (pred.posterior[k] > pred.posterior[best] ||
        (pred.posterior[k] == pred.posterior[best] &&
         det.cluster_map.labels[k] == ClassLabel::Attack &&
         det.cluster_map.labels[best] == ClassLabel::Normal))
      best = k;
  }
  out.component = best;
  out.label = det.cluster_map.labels[best];
  return out;
}

}  // namespace detail

/// Classifies one raw row. The row is projected onto the selected features by
/// name, standardized with the stored stats, and scored against the mixture.
inline Detection classify(const DetectorModel& det, const std::vector<std::string>& feature_names,
                          std::span<const double> row) {
  const auto idx = detail::selection_indices(det.selection, feature_names);
  std::vector<double> projected(idx.size());
  for (std::size_t d = 0; d < idx.size(); ++d) projected[d] = row[idx[d]];
  return detail::classify_projected(det, projected);
}

inline std::vector<Detection> score_dataset(const DetectorModel& det, const LabeledMatrix& m) {
  const auto idx = detail::selection_indices(det.selection, m.feature_names);
  std::vector<Detection> out;
  out.reserve(m.row_count());
  std::vector<double> projected(idx.size());
  for (std::size_t r = 0; r < m.row_count(); ++r) {
    const auto row = m.values.row(r);
    for (std::size_t d = 0; d < idx.size(); ++d) projected[d] = row[idx[d]];
    out.push_back(detail::classify_projected(det, projected));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Serialization (value-exact round trip)
// ---------------------------------------------------------------------------

inline void save_detector(const DetectorModel& det, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write detector file '" + path + "'");
  out << "ppid-detector 1\n";
  write_gmm(out, det.model);
  out << "cluster-labels";
  for (const auto c : det.cluster_map.labels) out << ' ' << to_string(c);
  out << '\n';
  detail::write_counts(out, det.cluster_map);
  out << "degenerate " << (det.cluster_map.degenerate ? 1 : 0) << '\n';
  out << "note " << det.cluster_map.degenerate_note << '\n';
  out << "percentage " << fmt_full(det.selection.percentage) << '\n';
  out << "total-features " << det.selection.total_features << '\n';
  out << "selected " << det.selection.selected.size() << '\n';
  for (const auto& f : det.selection.selected) out << f << '\n';
  detail::write_vector(out, "stat-mean", det.stats.mean);
  detail::write_vector(out, "stat-stddev", det.stats.stddev);
  out << "stat-zero-variance";
  for (const auto z : det.stats.zero_variance) out << ' ' << int(z);
  out << '\n';
}

inline DetectorModel load_detector(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open detector file '" + path + "'");
  std::string line;
  auto next_line = [&](const char* what) {
    if (!std::getline(in, line))
      throw DataError(std::string("detector file: truncated before ") + what);
    return line;
  };
  if (next_line("header") != "ppid-detector 1")
    throw DataError("detector file: unrecognized header '" + line + "'");

  DetectorModel det;
  det.model = read_gmm(in);
  const std::size_t K = det.model.components();

  {
    std::istringstream ss(next_line("cluster-labels"));
    std::string tag, word;
    ss >> tag;
    if (tag != "cluster-labels") throw DataError("detector file: bad cluster-labels line");
    while (ss >> word) det.cluster_map.labels.push_back(parse_class_label(word));
    if (det.cluster_map.labels.size() != K)
      throw DataError("detector file: cluster label count does not match components");
  }
  auto read_counts = [&](const char* tag, std::vector<std::uint64_t>& v) {
    std::istringstream ss(next_line(tag));
    std::string head;
    ss >> head;
    if (head != tag) throw DataError(std::string("detector file: bad ") + tag + " line");
    std::uint64_t x;
    while (ss >> x) v.push_back(x);
    if (v.size() != K)
      throw DataError(std::string("detector file: ") + tag + " count does not match components");
  };
  read_counts("normal-counts", det.cluster_map.normal_counts);
  read_counts("attack-counts", det.cluster_map.attack_counts);
  {
    std::istringstream ss(next_line("degenerate"));
    std::string tag;
    int flag;
    if (!(ss >> tag >> flag) || tag != "degenerate")
      throw DataError("detector file: bad degenerate line");
    det.cluster_map.degenerate = flag != 0;
  }
  {
    const std::string& l = next_line("note");
    if (l.rfind("note", 0) != 0) throw DataError("detector file: bad note line");
    det.cluster_map.degenerate_note = l.size() > 5 ? l.substr(5) : "";
  }
  {
    std::istringstream ss(next_line("percentage"));
    std::string tag;
    if (!(ss >> tag >> det.selection.percentage) || tag != "percentage")
      throw DataError("detector file: bad percentage line");
  }
  {
    std::istringstream ss(next_line("total-features"));
    std::string tag;
    if (!(ss >> tag >> det.selection.total_features) || tag != "total-features")
      throw DataError("detector file: bad total-features line");
  }
  std::size_t n_selected = 0;
  {
    std::istringstream ss(next_line("selected"));
    std::string tag;
    if (!(ss >> tag >> n_selected) || tag != "selected" || n_selected == 0)
      throw DataError("detector file: bad selected line");
  }
  for (std::size_t i = 0; i < n_selected; ++i)
    det.selection.selected.push_back(next_line("selected feature"));
  det.selection.disclosure = static_cast<double>(n_selected) /
                             static_cast<double>(det.selection.total_features);

  det.stats.mean = detail::parse_tagged_vector(next_line("stat-mean"), "stat-mean",
                                               det.model.dim(), "detector file");
  det.stats.stddev = detail::parse_tagged_vector(next_line("stat-stddev"), "stat-stddev",
                                                 det.model.dim(), "detector file");
  {
    std::istringstream ss(next_line("stat-zero-variance"));
    std::string tag;
    ss >> tag;
    if (tag != "stat-zero-variance") throw DataError("detector file: bad stat-zero-variance line");
    int z;
    while (ss >> z) det.stats.zero_variance.push_back(z ? 1 : 0);
    if (det.stats.zero_variance.size() != det.model.dim())
      throw DataError("detector file: zero-variance flag count does not match dim");
  }
  if (det.model.dim() != det.selection.selected.size())
    throw DataError("detector file: model dimension does not match selected feature count");
  return det;
}

}  // namespace ppid
