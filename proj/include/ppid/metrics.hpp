#pragma once

#include <algorithm>
#include <cstdint>
#include <limits>
#include <string>
#include <vector>

#include "ppid/common.hpp"

namespace ppid {

struct ConfusionMatrix {
  std::uint64_t tp = 0;
  std::uint64_t tn = 0;
  std::uint64_t fp = 0;
  std::uint64_t fn = 0;

  std::uint64_t total() const { return tp + tn + fp + fn; }
  bool operator==(const ConfusionMatrix&) const = default;
};

/// Attack is the positive class throughout.
inline ConfusionMatrix confusion(const std::vector<ClassLabel>& predicted,
                                 const std::vector<ClassLabel>& truth) {
  if (predicted.size() != truth.size())
    throw DataError("confusion: prediction and truth lengths differ");
  if (predicted.empty()) throw DataError("confusion: empty input");
  ConfusionMatrix cm;
  for (std::size_t i = 0; i < truth.size(); ++i) {
    const bool actual_attack = truth[i] == ClassLabel::Attack;
    const bool predicted_attack = predicted[i] == ClassLabel::Attack;
    if (actual_attack && predicted_attack) ++cm.tp;
    else if (!actual_attack && !predicted_attack) ++cm.tn;
    else if (!actual_attack && predicted_attack) ++cm.fp;
    else ++cm.fn;
  }
  return cm;
}

inline double accuracy(const ConfusionMatrix& cm) {
  if (cm.total() == 0) throw MetricError("accuracy undefined: empty confusion matrix");
  return static_cast<double>(cm.tp + cm.tn) / static_cast<double>(cm.total());
}

inline double detection_rate(const ConfusionMatrix& cm) {
  if (cm.tp + cm.fn == 0)
    throw MetricError("detection rate undefined: no actual attack records (TP+FN = 0)");
  return static_cast<double>(cm.tp) / static_cast<double>(cm.tp + cm.fn);
}

inline double false_positive_rate(const ConfusionMatrix& cm) {
  if (cm.fp + cm.tn == 0)
    throw MetricError("false positive rate undefined: no actual normal records (FP+TN = 0)");
  return static_cast<double>(cm.fp) / static_cast<double>(cm.fp + cm.tn);
}

// ---------------------------------------------------------------------------
// ROC
// ---------------------------------------------------------------------------

struct RocPoint {
  double threshold;  // +inf for the (0,0) anchor
  double fpr;
  double tpr;
};

struct RocCurve {
  std::vector<RocPoint> points;  // starts at (0,0), ends at (1,1), fpr nondecreasing
  double auc = 0.0;              // trapezoidal
};

/// Threshold sweep over the distinct scores in descending order; rows with
/// score >= threshold are predicted Attack. Equal scores collapse into a
/// single step, which makes the trapezoidal AUC equal the pairwise
/// concordance count with ties worth one half.
inline RocCurve roc_curve(const std::vector<double>& attack_scores,
                          const std::vector<ClassLabel>& truth) {
  if (attack_scores.size() != truth.size())
    throw DataError("roc_curve: score and truth lengths differ");
  std::uint64_t pos = 0, neg = 0;
  for (const auto c : truth) (c == ClassLabel::Attack ? pos : neg)++;
  if (pos == 0 || neg == 0)
    throw MetricError("roc undefined: both classes must be present in the truth labels");

  std::vector<std::size_t> order(truth.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return attack_scores[a] > attack_scores[b];
  });

  RocCurve curve;
  curve.points.push_back({std::numeric_limits<double>::infinity(), 0.0, 0.0});
  std::uint64_t tp = 0, fp = 0;
  std::size_t i = 0;
  while (i < order.size()) {
    const double threshold = attack_scores[order[i]];
    while (i < order.size() && attack_scores[order[i]] == threshold) {
      if (truth[order[i]] == ClassLabel::Attack) ++tp;
      else ++fp;
      ++i;
    }
    curve.points.push_back({threshold,
                            static_cast<double>(fp) / static_cast<double>(neg),
                            static_cast<double>(tp) / static_cast<double>(pos)});
  }

  for (std::size_t j = 1; j < curve.points.size(); ++j) {
    const auto& a = curve.points[j - 1];
    const auto& b = curve.points[j];
    curve.auc += (b.fpr - a.fpr) * (a.tpr + b.tpr) * 0.5;
  }
  return curve;
}

// ---------------------------------------------------------------------------
// Report
// ---------------------------------------------------------------------------

struct EvaluationReport {
  ConfusionMatrix confusion;
  double accuracy = 0.0;
  double detection_rate = 0.0;
  double false_positive_rate = 0.0;
  double disclosure = 1.0;
  double feature_percentage = 100.0;
  double auc = 0.0;
  RocCurve roc;
};

inline EvaluationReport make_report(const ConfusionMatrix& cm, const RocCurve& roc,
                                    double disclosure, double feature_percentage) {
  EvaluationReport rep;
  rep.confusion = cm;
  rep.accuracy = accuracy(cm);
  rep.detection_rate = detection_rate(cm);
  rep.false_positive_rate = false_positive_rate(cm);
  rep.roc = roc;
  rep.auc = roc.auc;
  rep.disclosure = disclosure;
  rep.feature_percentage = feature_percentage;
  return rep;
}

}  // namespace ppid
