#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <cstring>
#include <vector>

#include "ppid/detection.hpp"
#include "ppid/pipeline.hpp"
#include "test_util.hpp"

using namespace ppid;
using namespace ppid::test;

namespace {

// A detector built by hand around a 2-component 1-D mixture; selection picks
// feature "b" out of (a, b, c) and standardization is identity.
DetectorModel toy_detector(ClassLabel first_label, ClassLabel second_label) {
  DetectorModel det;
  det.model = GmmModel{{0.5, 0.5}, {{0.0}, {10.0}}, {{1.0}, {1.0}}};
  det.cluster_map.labels = {first_label, second_label};
  det.cluster_map.normal_counts = {5, 0};
  det.cluster_map.attack_counts = {0, 5};
  det.selection.selected = {"b"};
  det.selection.total_features = 3;
  det.selection.percentage = 100.0 / 3.0;
  det.selection.disclosure = 1.0 / 3.0;
  det.stats.mean = {0.0};
  det.stats.stddev = {1.0};
  det.stats.zero_variance = {0};
  return det;
}

const std::vector<std::string> kAbc{"a", "b", "c"};

}  // namespace

TEST_CASE("assign_cluster_labels") {
  GmmModel model{{0.5, 0.5}, {{0.0}, {10.0}}, {{1.0}, {1.0}}};

  SUBCASE("majority vote labels each component") {
    // component 0 sees 9 attack / 1 normal, component 1 sees normals only
    std::vector<std::vector<double>> rows;
    std::vector<ClassLabel> labels;
    for (int i = 0; i < 9; ++i) { rows.push_back({0.1 * i}); labels.push_back(ClassLabel::Attack); }
    rows.push_back({0.5});
    labels.push_back(ClassLabel::Normal);
    for (int i = 0; i < 4; ++i) { rows.push_back({10.0 + 0.1 * i}); labels.push_back(ClassLabel::Normal); }
    const auto map = assign_cluster_labels(model, make_values(rows), labels);
    CHECK(map.labels[0] == ClassLabel::Attack);
    CHECK(map.labels[1] == ClassLabel::Normal);
    CHECK(map.attack_counts[0] == 9);
    CHECK(map.normal_counts[0] == 1);
    CHECK_FALSE(map.degenerate);
  }
  SUBCASE("exact tie goes to Attack") {
    std::vector<std::vector<double>> rows;
    std::vector<ClassLabel> labels;
    for (int i = 0; i < 5; ++i) { rows.push_back({-0.2 * i}); labels.push_back(ClassLabel::Attack); }
    for (int i = 0; i < 5; ++i) { rows.push_back({0.2 * i}); labels.push_back(ClassLabel::Normal); }
    for (int i = 0; i < 2; ++i) { rows.push_back({10.0}); labels.push_back(ClassLabel::Normal); }
    const auto map = assign_cluster_labels(model, make_values(rows), labels);
    CHECK(map.labels[0] == ClassLabel::Attack);  // 5 vs 5
  }
  SUBCASE("empty component labeled Attack and flagged degenerate") {
    const auto data = make_values({{0.0}, {0.1}, {0.2}, {0.3}});
    const std::vector<ClassLabel> labels{ClassLabel::Normal, ClassLabel::Normal,
                                         ClassLabel::Attack, ClassLabel::Attack};
    const auto map = assign_cluster_labels(model, data, labels);
    CHECK(map.labels[1] == ClassLabel::Attack);
    CHECK(map.degenerate);
    CHECK(map.degenerate_note.find("component 1") != std::string::npos);
  }
  SUBCASE("single-class training data is flagged, not silently accepted") {
    const auto data = make_values({{0.0}, {10.0}});
    const std::vector<ClassLabel> labels{ClassLabel::Normal, ClassLabel::Normal};
    const auto map = assign_cluster_labels(model, data, labels);
    CHECK(map.degenerate);
    CHECK(map.degenerate_note.find("single class") != std::string::npos);
  }
}

TEST_CASE("classify") {
  const auto det = toy_detector(ClassLabel::Normal, ClassLabel::Attack);

  SUBCASE("row at the Attack mean scores ~1, at the Normal mean ~0") {
    const std::vector<double> attack_row{99.0, 10.0, -3.0};
    const auto d_attack = classify(det, kAbc, attack_row);
    CHECK(d_attack.label == ClassLabel::Attack);
    CHECK(d_attack.attack_score > 0.999);
    CHECK(d_attack.component == 1);

    const std::vector<double> normal_row{-7.0, 0.0, 55.0};
    const auto d_normal = classify(det, kAbc, normal_row);
    CHECK(d_normal.label == ClassLabel::Normal);
    CHECK(d_normal.attack_score < 0.001);
  }
  SUBCASE("with K=2 the attack score is the Attack component's posterior") {
    Rng rng(8);
    for (int i = 0; i < 25; ++i) {
      const std::vector<double> row{0.0, rng.normal() * 6.0 + 5.0, 0.0};
      const auto d = classify(det, kAbc, row);
      std::vector<double> z{det.stats.apply_one(0, row[1])};
      const auto pred = predict_cluster(det.model, z);
      CHECK(d.attack_score == pred.posterior[1]);
    }
  }
  SUBCASE("attack and normal scores sum to one") {
    Rng rng(9);
    for (int i = 0; i < 25; ++i) {
      const std::vector<double> row{0.0, rng.normal() * 8.0, 0.0};
      const auto d = classify(det, kAbc, row);
      CHECK(d.attack_score >= 0.0);
      CHECK(d.attack_score <= 1.0);
      // normal score is the complement by construction of the posterior
      std::vector<double> z{det.stats.apply_one(0, row[1])};
      const auto pred = predict_cluster(det.model, z);
      CHECK(std::fabs(d.attack_score + pred.posterior[0] - 1.0) < 1e-9);
    }
  }
  SUBCASE("thresholding the attack score at 0.5 reproduces the labels") {
    Rng rng(10);
    for (int i = 0; i < 100; ++i) {
      const std::vector<double> row{0.0, rng.uniform() * 14.0 - 2.0, 0.0};
      const auto d = classify(det, kAbc, row);
      CHECK((d.attack_score >= 0.5) == (d.label == ClassLabel::Attack));
    }
  }
  SUBCASE("missing selected feature is named") {
    const std::vector<double> row{1.0, 2.0};
    CHECK_THROWS_WITH_AS(classify(det, {"a", "c"}, row), doctest::Contains("'b'"), DataError);
  }
}

TEST_CASE("score_dataset") {
  const auto det = toy_detector(ClassLabel::Normal, ClassLabel::Attack);

  SUBCASE("empty matrix gives an empty list") {
    LabeledMatrix m;
    m.feature_names = kAbc;
    m.values = Matrix(0, 3);
    CHECK(score_dataset(det, m).empty());
  }
  SUBCASE("single row matches classify") {
    const auto m = make_matrix(kAbc, {{1.0, 9.5, 2.0}}, {"Attack"});
    const auto out = score_dataset(det, m);
    REQUIRE(out.size() == 1);
    const auto direct = classify(det, kAbc, std::vector<double>{1.0, 9.5, 2.0});
    CHECK(out[0].label == direct.label);
    CHECK(out[0].attack_score == direct.attack_score);
  }
  SUBCASE("permuting rows permutes detections identically") {
    Rng rng(11);
    std::vector<std::vector<double>> rows;
    for (int i = 0; i < 12; ++i) rows.push_back({rng.normal(), rng.normal() * 5.0 + 5.0, 0.0});
    auto m = make_matrix(kAbc, rows, std::vector<std::string>(12, "Normal"));
    const auto base = score_dataset(det, m);
    std::reverse(rows.begin(), rows.end());
    const auto rev = score_dataset(det, make_matrix(kAbc, rows, m.labels));
    for (std::size_t i = 0; i < rows.size(); ++i) {
      CHECK(rev[i].label == base[rows.size() - 1 - i].label);
      CHECK(rev[i].attack_score == base[rows.size() - 1 - i].attack_score);
    }
  }
}

TEST_CASE("detections depend only on selected features") {
  // the privacy guarantee made testable: perturb non-selected features and
  // require bit-identical outputs
  const auto det = toy_detector(ClassLabel::Normal, ClassLabel::Attack);
  Rng rng(12);
  for (int i = 0; i < 100; ++i) {
    std::vector<double> row{rng.normal(), rng.normal() * 7.0 + 3.0, rng.normal()};
    const auto base = classify(det, kAbc, row);
    std::vector<double> perturbed = row;
    perturbed[0] += rng.normal() * 100.0;
    perturbed[2] = rng.uniform() * 1e9;
    const auto after = classify(det, kAbc, perturbed);
    CHECK(after.label == base.label);
    CHECK(std::memcmp(&after.attack_score, &base.attack_score, sizeof(double)) == 0);
    CHECK(after.component == base.component);
  }
}

TEST_CASE("detector serialization round-trips value-exactly") {
  const auto data = two_blob_data(80, 9.0, 23, 4);
  RunConfig cfg;
  cfg.seed = 77;
  const auto res = train_detector(data, cfg, 50.0);
  TempDir tmp("detector_io");
  save_detector(res.detector, tmp.file("det.txt"));
  const auto back = load_detector(tmp.file("det.txt"));

  CHECK(back.model.weights == res.detector.model.weights);
  CHECK(back.model.means == res.detector.model.means);
  CHECK(back.model.variances == res.detector.model.variances);
  CHECK(back.cluster_map.labels == res.detector.cluster_map.labels);
  CHECK(back.cluster_map.normal_counts == res.detector.cluster_map.normal_counts);
  CHECK(back.cluster_map.attack_counts == res.detector.cluster_map.attack_counts);
  CHECK(back.selection.selected == res.detector.selection.selected);
  CHECK(back.selection.total_features == res.detector.selection.total_features);
  CHECK(back.stats.mean == res.detector.stats.mean);
  CHECK(back.stats.stddev == res.detector.stats.stddev);

  // loaded detector classifies identically
  const auto a = score_dataset(res.detector, data);
  const auto b = score_dataset(back, data);
  for (std::size_t i = 0; i < a.size(); ++i) {
    CHECK(a[i].label == b[i].label);
    CHECK(a[i].attack_score == b[i].attack_score);
  }
}
