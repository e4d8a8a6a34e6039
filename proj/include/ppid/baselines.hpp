#pragma once

#include <algorithm>
#include <cmath>
#include <span>
#include <utility>
#include <vector>

#include "ppid/common.hpp"
#include "ppid/matrix.hpp"

namespace ppid {

// ---------------------------------------------------------------------------
// k-nearest neighbours
// ---------------------------------------------------------------------------

struct KnnModel {
  Matrix train;
  std::vector<ClassLabel> labels;
  std::size_t k = 1;
};

inline KnnModel knn_fit(Matrix train, std::vector<ClassLabel> labels, std::size_t k = 1) {
  if (train.rows() != labels.size())
    throw DataError("knn: label count does not match training rows");
  if (train.rows() == 0) throw DataError("knn: empty training data");
  if (k == 0 || k % 2 == 0) throw ConfigError("knn: k must be odd and positive");
  if (k > train.rows()) throw ConfigError("knn: k exceeds the number of training rows");
  return {std::move(train), std::move(labels), k};
}

/// Majority label among the k nearest training rows (Euclidean distance);
/// distance ties resolve to the lower training-row index.
inline ClassLabel knn_classify(const KnnModel& model, std::span<const double> row) {
  if (row.size() != model.train.cols())
    throw DataError("knn: query dimension does not match training data");
  const std::size_t n = model.train.rows();
  std::vector<std::pair<double, std::size_t>> dist(n);
  for (std::size_t i = 0; i < n; ++i) {
    const auto t = model.train.row(i);
    double d2 = 0.0;
    for (std::size_t d = 0; d < row.size(); ++d) {
      const double diff = row[d] - t[d];
      d2 += diff * diff;
    }
    dist[i] = {d2, i};
  }
  std::partial_sort(dist.begin(), dist.begin() + model.k, dist.end());
  std::size_t attack = 0;
  for (std::size_t i = 0; i < model.k; ++i)
    if (model.labels[dist[i].second] == ClassLabel::Attack) ++attack;
  return 2 * attack > model.k ? ClassLabel::Attack : ClassLabel::Normal;
}

// ---------------------------------------------------------------------------
// Gaussian naive Bayes
// ---------------------------------------------------------------------------

struct GnbModel {
  // class order: [Normal, Attack]
  double prior[2] = {0.0, 0.0};
  std::vector<double> mean[2];
  std::vector<double> variance[2];  // floored
};

inline GnbModel gnb_fit(const Matrix& train, const std::vector<ClassLabel>& labels,
                        double variance_floor = 1e-9) {
  if (train.rows() != labels.size())
    throw DataError("gnb: label count does not match training rows");
  const std::size_t dim = train.cols();
  GnbModel model;
  for (int c = 0; c < 2; ++c) {
    const auto want = c == 0 ? ClassLabel::Normal : ClassLabel::Attack;
    std::vector<std::size_t> rows;
    for (std::size_t i = 0; i < labels.size(); ++i)
      if (labels[i] == want) rows.push_back(i);
    if (rows.size() < 2)
      throw DataError(std::string("gnb: class ") + to_string(want) + " has fewer than 2 rows");
    model.prior[c] = static_cast<double>(rows.size()) / static_cast<double>(labels.size());
    model.mean[c].assign(dim, 0.0);
    model.variance[c].assign(dim, 0.0);
    for (const auto r : rows)
      for (std::size_t d = 0; d < dim; ++d) model.mean[c][d] += train(r, d);
    for (std::size_t d = 0; d < dim; ++d) model.mean[c][d] /= static_cast<double>(rows.size());
    for (const auto r : rows)
      for (std::size_t d = 0; d < dim; ++d) {
        const double diff = train(r, d) - model.mean[c][d];
        model.variance[c][d] += diff * diff;
      }
    for (std::size_t d = 0; d < dim; ++d)
      model.variance[c][d] =
          std::max(model.variance[c][d] / static_cast<double>(rows.size()), variance_floor);
  }
  return model;
}

/// argmax over classes of log prior + sum of per-feature log densities;
/// exact ties go to Attack.
inline ClassLabel gnb_classify(const GnbModel& model, std::span<const double> row) {
  if (row.size() != model.mean[0].size())
    throw DataError("gnb: query dimension does not match training data");
  double score[2];
  for (int c = 0; c < 2; ++c) {
    double acc = std::log(model.prior[c]);
    for (std::size_t d = 0; d < row.size(); ++d) {
      const double diff = row[d] - model.mean[c][d];
      const double v = model.variance[c][d];
      acc += -0.5 * (1.8378770664093454835606594728 + std::log(v)) - diff * diff / (2.0 * v);
    }
    score[c] = acc;
  }
  return score[1] >= score[0] ? ClassLabel::Attack : ClassLabel::Normal;
}

}  // namespace ppid
