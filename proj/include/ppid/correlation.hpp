#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "ppid/common.hpp"
#include "ppid/dataset.hpp"
#include "ppid/matrix.hpp"

namespace ppid {

namespace detail {

// Roundoff at the 1e-12 level is clamped onto the boundary, so perfect linear
// relations score exactly +-1.
inline double snap_unit(double r) {
  if (r > 1.0 - 1e-12) return 1.0;
  if (r < -1.0 + 1e-12) return -1.0;
  return r;
}

// Sum of centered products over the product of centered L2 norms. Returns
// nullopt when either vector has zero variance.
inline std::optional<double> pcc_opt(std::span<const double> x, std::span<const double> y) {
  const std::size_t n = x.size();
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < n; ++i) { mx += x[i]; my += y[i]; }
  mx /= static_cast<double>(n);
  my /= static_cast<double>(n);
  double num = 0.0, sx = 0.0, sy = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double dx = x[i] - mx;
    const double dy = y[i] - my;
    num += dx * dy;
    sx += dx * dx;
    sy += dy * dy;
  }
  if (sx == 0.0 || sy == 0.0) return std::nullopt;
  return snap_unit(num / (std::sqrt(sx) * std::sqrt(sy)));
}

struct CenteredColumns {
  std::vector<std::vector<double>> centered;  // per feature, x_i - mean
  std::vector<double> norm;                   // sqrt of centered sum of squares
  std::vector<bool> defined;                  // norm > 0
};

inline CenteredColumns center_columns(const Matrix& values) {
  const std::size_t n = values.rows(), p = values.cols();
  CenteredColumns out;
  out.centered.resize(p);
  out.norm.resize(p);
  out.defined.resize(p);
  for (std::size_t c = 0; c < p; ++c) {
    auto& col = out.centered[c];
    col.resize(n);
    double sum = 0.0;
    for (std::size_t r = 0; r < n; ++r) sum += values(r, c);
    const double mean = sum / static_cast<double>(n);
    double ss = 0.0;
    for (std::size_t r = 0; r < n; ++r) {
      col[r] = values(r, c) - mean;
      ss += col[r] * col[r];
    }
    out.defined[c] = ss > 0.0;
    out.norm[c] = std::sqrt(ss);
  }
  return out;
}

// Assumes both columns are defined. Identical arithmetic to pcc_opt.
inline double pcc_centered(const CenteredColumns& cc, std::size_t i, std::size_t j) {
  double num = 0.0;
  const auto& a = cc.centered[i];
  const auto& b = cc.centered[j];
  for (std::size_t r = 0; r < a.size(); ++r) num += a[r] * b[r];
  return snap_unit(num / (cc.norm[i] * cc.norm[j]));
}

}  // namespace detail

inline double pcc(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size())
    throw DataError("pcc: vectors have different lengths (" + std::to_string(x.size()) +
                    " vs " + std::to_string(y.size()) + ")");
  if (x.size() < 2) throw DataError("pcc: need at least 2 observations");
  const auto r = detail::pcc_opt(x, y);
  if (!r) throw DataError("pcc undefined: zero variance input");
  return *r;
}

/// Symmetric matrix of pairwise correlations; unit diagonal. Entries involving
/// a zero-variance column carry NaN as the designated undefined marker.
inline Matrix correlation_matrix(const LabeledMatrix& m) {
  if (m.row_count() < 2) throw DataError("correlation_matrix: need at least 2 rows");
  const std::size_t p = m.feature_count();
  const auto cc = detail::center_columns(m.values);
  Matrix out(p, p, std::numeric_limits<double>::quiet_NaN());
  for (std::size_t i = 0; i < p; ++i) {
    out(i, i) = 1.0;
    for (std::size_t j = i + 1; j < p; ++j) {
      if (cc.defined[i] && cc.defined[j])
        out(i, j) = out(j, i) = detail::pcc_centered(cc, i, j);
    }
  }
  return out;
}

enum class RankingMode { LabelCorrelation, MeanPairwise };

inline const char* to_string(RankingMode m) {
  return m == RankingMode::LabelCorrelation ? "label_correlation" : "mean_pairwise";
}

struct CorrelationRanking {
  struct Entry {
    std::string feature;
    double score;
  };
  std::vector<Entry> entries;  // descending score, name-ascending tiebreak
  RankingMode mode = RankingMode::LabelCorrelation;
};

/// Scores every feature by |PCC|: against the 0/1 class encoding in
/// label_correlation mode, or as the mean |PCC| against all other features in
/// mean_pairwise mode (undefined pairs excluded). Zero-variance features score
/// 0 and sort last.
inline CorrelationRanking rank_features(const LabeledMatrix& m, RankingMode mode) {
  if (m.row_count() < 2) throw DataError("rank_features: need at least 2 rows");
  const std::size_t p = m.feature_count();
  const auto cc = detail::center_columns(m.values);
  const std::size_t n_defined =
      static_cast<std::size_t>(std::count(cc.defined.begin(), cc.defined.end(), true));

  std::vector<double> scores(p, 0.0);
  if (mode == RankingMode::LabelCorrelation) {
    const auto classes = m.class_labels();  // throws if labels are not binary
    std::vector<double> encoded(classes.size());
    for (std::size_t i = 0; i < classes.size(); ++i)
      encoded[i] = classes[i] == ClassLabel::Attack ? 1.0 : 0.0;
    if (n_defined == 0)
      throw DataError("rank_features: every feature has zero variance; ranking is degenerate");
    for (std::size_t c = 0; c < p; ++c) {
      if (!cc.defined[c]) continue;
      const auto r = detail::pcc_opt(cc.centered[c], encoded);
      if (!r)
        throw DataError("rank_features: labels are single-class; every correlation is undefined");
      scores[c] = std::fabs(*r);
    }
  } else {
    if (n_defined < 2)
      throw DataError("rank_features: no feature pair has a defined correlation; "
                      "ranking is degenerate");
    for (std::size_t c = 0; c < p; ++c) {
      if (!cc.defined[c]) continue;
      double sum = 0.0;
      std::size_t count = 0;
      for (std::size_t j = 0; j < p; ++j) {
        if (j == c || !cc.defined[j]) continue;
        sum += std::fabs(detail::pcc_centered(cc, c, j));
        ++count;
      }
      scores[c] = count > 0 ? sum / static_cast<double>(count) : 0.0;
    }
  }

  CorrelationRanking ranking;
  ranking.mode = mode;
  for (std::size_t c = 0; c < p; ++c)
    ranking.entries.push_back({m.feature_names[c], scores[c]});
  std::sort(ranking.entries.begin(), ranking.entries.end(),
            [](const auto& a, const auto& b) {
              if (a.score != b.score) return a.score > b.score;
              return a.feature < b.feature;
            });
  return ranking;
}

struct FeatureSelection {
  std::vector<std::string> selected;  // in ranking order
  double percentage = 100.0;
  std::size_t total_features = 0;
  double disclosure = 1.0;            // |selected| / total_features
};

/// Top ceil(percentage/100 * n) entries of the ranking.
inline FeatureSelection select_quartile(const CorrelationRanking& ranking, double percentage) {
  if (!(percentage > 0.0 && percentage <= 100.0))
    throw ConfigError("feature percentage must lie in (0, 100], got " + fmt_short(percentage));
  const std::size_t n = ranking.entries.size();
  if (n == 0) throw DataError("select_quartile: empty ranking");
  // floating-point slack so e.g. 10% of 30 rounds to 3, not 4
  const auto raw = std::ceil(percentage / 100.0 * static_cast<double>(n) - 1e-9);
  const std::size_t k = std::clamp<std::size_t>(static_cast<std::size_t>(raw), 1, n);
  FeatureSelection sel;
  sel.percentage = percentage;
  sel.total_features = n;
  sel.selected.reserve(k);
  for (std::size_t i = 0; i < k; ++i) sel.selected.push_back(ranking.entries[i].feature);
  sel.disclosure = static_cast<double>(k) / static_cast<double>(n);
  return sel;
}

inline double disclosure_percentage(const FeatureSelection& sel) {
  if (sel.selected.empty() || sel.total_features == 0)
    throw DataError("disclosure_percentage: empty selection");
  return static_cast<double>(sel.selected.size()) / static_cast<double>(sel.total_features);
}

}  // namespace ppid
