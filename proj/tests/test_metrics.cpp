#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <vector>

#include "ppid/metrics.hpp"
#include "test_util.hpp"

using namespace ppid;
using namespace ppid::test;

namespace {

constexpr ClassLabel kA = ClassLabel::Attack;
constexpr ClassLabel kN = ClassLabel::Normal;

// Brute-force AUC: fraction of (attack, normal) pairs ranked concordantly,
// ties worth one half.
double auc_oracle(const std::vector<double>& scores, const std::vector<ClassLabel>& truth) {
  double concordant = 0.0;
  std::size_t pairs = 0;
  for (std::size_t i = 0; i < truth.size(); ++i) {
    if (truth[i] != kA) continue;
    for (std::size_t j = 0; j < truth.size(); ++j) {
      if (truth[j] != kN) continue;
      ++pairs;
      if (scores[i] > scores[j]) concordant += 1.0;
      else if (scores[i] == scores[j]) concordant += 0.5;
    }
  }
  return concordant / static_cast<double>(pairs);
}

}  // namespace

TEST_CASE("confusion counts with Attack as the positive class") {
  SUBCASE("all correct") {
    const std::vector<ClassLabel> truth{kA, kA, kA, kN, kN};
    const auto cm = confusion(truth, truth);
    CHECK(cm == ConfusionMatrix{3, 2, 0, 0});
  }
  SUBCASE("all inverted") {
    const std::vector<ClassLabel> truth{kA, kA, kA, kN, kN};
    std::vector<ClassLabel> flipped;
    for (const auto c : truth) flipped.push_back(c == kA ? kN : kA);
    const auto cm = confusion(flipped, truth);
    CHECK(cm == ConfusionMatrix{0, 0, 2, 3});
  }
  SUBCASE("everything predicted Attack on all-Normal truth") {
    const std::vector<ClassLabel> truth{kN, kN, kN, kN};
    const std::vector<ClassLabel> pred{kA, kA, kA, kA};
    const auto cm = confusion(pred, truth);
    CHECK(cm == ConfusionMatrix{0, 0, 4, 0});
  }
  SUBCASE("errors") {
    CHECK_THROWS_AS(confusion({kA}, {kA, kN}), DataError);
    CHECK_THROWS_AS(confusion({}, {}), DataError);
  }
}

TEST_CASE("accuracy, detection rate, false positive rate") {
  SUBCASE("TP=5 TN=3 FP=1 FN=1") {
    const ConfusionMatrix cm{5, 3, 1, 1};
    CHECK(accuracy(cm) == 0.8);
    CHECK(detection_rate(cm) == doctest::Approx(5.0 / 6.0).epsilon(1e-15));
    CHECK(false_positive_rate(cm) == 0.25);
  }
  SUBCASE("perfect classifier") {
    const ConfusionMatrix cm{10, 10, 0, 0};
    CHECK(accuracy(cm) == 1.0);
    CHECK(detection_rate(cm) == 1.0);
    CHECK(false_positive_rate(cm) == 0.0);
  }
  SUBCASE("zero denominators raise, never return silent values") {
    CHECK_THROWS_AS(detection_rate(ConfusionMatrix{0, 5, 2, 0}), MetricError);
    CHECK_THROWS_AS(false_positive_rate(ConfusionMatrix{3, 0, 0, 1}), MetricError);
    CHECK_THROWS_AS(accuracy(ConfusionMatrix{0, 0, 0, 0}), MetricError);
  }
  SUBCASE("rates are scale-free in the counts") {
    Rng rng(21);
    for (int trial = 0; trial < 100; ++trial) {
      const ConfusionMatrix cm{1 + rng.below(50), 1 + rng.below(50), 1 + rng.below(50),
                               1 + rng.below(50)};
      const std::uint64_t s = 2 + rng.below(9);
      const ConfusionMatrix scaled{cm.tp * s, cm.tn * s, cm.fp * s, cm.fn * s};
      CHECK(accuracy(scaled) == accuracy(cm));
      CHECK(detection_rate(scaled) == detection_rate(cm));
      CHECK(false_positive_rate(scaled) == false_positive_rate(cm));
    }
  }
}

TEST_CASE("roc_curve") {
  SUBCASE("perfect separation gives AUC 1 and anchored endpoints") {
    const std::vector<double> scores{0.9, 0.8, 0.2, 0.1};
    const std::vector<ClassLabel> truth{kA, kA, kN, kN};
    const auto roc = roc_curve(scores, truth);
    CHECK(roc.auc == 1.0);
    CHECK(roc.points.front().fpr == 0.0);
    CHECK(roc.points.front().tpr == 0.0);
    CHECK(roc.points.back().fpr == 1.0);
    CHECK(roc.points.back().tpr == 1.0);
  }
  SUBCASE("constant scores collapse to the diagonal with AUC 0.5") {
    const std::vector<double> scores{0.7, 0.7, 0.7, 0.7};
    const std::vector<ClassLabel> truth{kA, kN, kA, kN};
    const auto roc = roc_curve(scores, truth);
    REQUIRE(roc.points.size() == 2);
    CHECK(roc.points[0].fpr == 0.0);
    CHECK(roc.points[0].tpr == 0.0);
    CHECK(roc.points[1].fpr == 1.0);
    CHECK(roc.points[1].tpr == 1.0);
    CHECK(roc.auc == 0.5);
  }
  SUBCASE("one concordant and one discordant pair give AUC 0.5") {
    // oracle: pairs (0.9 vs 0.8) concordant, (0.3 vs 0.8) discordant
    const std::vector<double> scores{0.9, 0.8, 0.3};
    const std::vector<ClassLabel> truth{kA, kN, kA};
    const auto roc = roc_curve(scores, truth);
    CHECK(roc.auc == 0.5);
    CHECK(auc_oracle(scores, truth) == 0.5);
  }
  SUBCASE("fpr is nondecreasing along the curve") {
    Rng rng(31);
    std::vector<double> scores;
    std::vector<ClassLabel> truth;
    for (int i = 0; i < 40; ++i) {
      scores.push_back(rng.uniform());
      truth.push_back(rng.below(2) ? kA : kN);
    }
    const auto roc = roc_curve(scores, truth);
    for (std::size_t i = 1; i < roc.points.size(); ++i)
      CHECK(roc.points[i].fpr >= roc.points[i - 1].fpr);
  }
  SUBCASE("single-class truth is an error") {
    CHECK_THROWS_AS(roc_curve({0.1, 0.9}, {kA, kA}), MetricError);
    CHECK_THROWS_AS(roc_curve({0.1, 0.9}, {kN, kN}), MetricError);
  }
}

TEST_CASE("trapezoidal AUC equals the pairwise concordance oracle") {
  Rng rng(41);
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t n = 2 + rng.below(19);  // <= 20 rows
    std::vector<double> scores(n);
    std::vector<ClassLabel> truth(n);
    // coarse score grid to force plenty of ties
    for (std::size_t i = 0; i < n; ++i) scores[i] = static_cast<double>(rng.below(5)) / 4.0;
    bool saw_a = false, saw_n = false;
    for (std::size_t i = 0; i < n; ++i) {
      truth[i] = rng.below(2) ? kA : kN;
      (truth[i] == kA ? saw_a : saw_n) = true;
    }
    if (!saw_a) truth[0] = kA;
    if (!saw_n) truth[n - 1] = kN;
    const auto roc = roc_curve(scores, truth);
    CHECK(std::fabs(roc.auc - auc_oracle(scores, truth)) < 1e-12);
  }
}

TEST_CASE("roc_curve is invariant under strictly increasing score transforms") {
  Rng rng(51);
  std::vector<double> scores;
  std::vector<ClassLabel> truth;
  for (int i = 0; i < 30; ++i) {
    scores.push_back(rng.uniform());
    truth.push_back(rng.below(2) ? kA : kN);
  }
  truth[0] = kA;
  truth[1] = kN;
  const auto base = roc_curve(scores, truth);
  auto transformed = scores;
  for (auto& s : transformed) s = std::exp(3.0 * s) + 7.0;  // strictly increasing
  const auto after = roc_curve(transformed, truth);
  REQUIRE(after.points.size() == base.points.size());
  CHECK(after.auc == base.auc);
  for (std::size_t i = 0; i < base.points.size(); ++i) {
    CHECK(after.points[i].fpr == base.points[i].fpr);
    CHECK(after.points[i].tpr == base.points[i].tpr);
  }
}

TEST_CASE("make_report wires rates consistently") {
  const std::vector<double> scores{0.9, 0.8, 0.2, 0.6};
  const std::vector<ClassLabel> truth{kA, kA, kN, kN};
  const std::vector<ClassLabel> pred{kA, kA, kN, kA};
  const auto cm = confusion(pred, truth);
  const auto roc = roc_curve(scores, truth);
  const auto rep = make_report(cm, roc, 0.25, 25.0);
  CHECK(rep.accuracy == accuracy(cm));
  CHECK(rep.detection_rate == detection_rate(cm));
  CHECK(rep.false_positive_rate == false_positive_rate(cm));
  CHECK(rep.auc == roc.auc);
  CHECK(rep.disclosure == 0.25);
}
