#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>

#include "detkit/eval.hpp"
#include "support/reference_eval.hpp"

using detkit::ApMode;
using detkit::BoundingBox;
using detkit::ClassMap;
using detkit::Detection;
using detkit::GroundTruthObject;
using detkit::MatchRecord;
using detkit::PRPoint;
using detkit::Verdict;

namespace {

Detection det(const std::string& img, int cls, double conf, double x0, double y0, double x1,
              double y1) {
  return Detection{img, cls, conf, BoundingBox(x0, y0, x1, y1)};
}

GroundTruthObject gt(const std::string& img, int cls, double x0, double y0, double x1, double y1) {
  return GroundTruthObject{img, cls, BoundingBox(x0, y0, x1, y1)};
}

std::vector<PRPoint> curve_of(const std::vector<Verdict>& verdicts, std::size_t total_gt) {
  std::vector<MatchRecord> records;
  double conf = 0.99;
  for (Verdict v : verdicts) {
    MatchRecord r;
    r.detection_index = records.size();
    r.confidence = conf;
    r.verdict = v;
    records.push_back(r);
    conf -= 0.01;
  }
  return detkit::precision_recall(records, total_gt);
}

}  // namespace

TEST_CASE("matching: below-threshold overlap is a false positive") {
  // IOU = 4/ (10+10-4) = 0.25... choose boxes with IOU 0.4: 4x1 overlap? Use
  // widths: a=(0,0,10,1), b=(6-?,...) simpler: 1-D style boxes.
  // a: (0,0,10,1) area 10; b: (4,0,11,1) area 7; inter (4..10)=6; union 11; iou=6/11=0.545
  // pick overlap for 0.4: b=(7,0,17,1): inter 3, union 17, iou 0.176...
  // Use exact: a=(0,0,4,1), b=(2,0,6,1): inter 2, union 6, iou=1/3 < 0.5.
  const auto gts = std::vector<GroundTruthObject>{gt("i", 0, 0, 0, 4, 1)};
  const auto dets = std::vector<Detection>{det("i", 0, 0.9, 2, 0, 6, 1)};
  const auto result = detkit::match_detections(dets, gts, 0.5);
  REQUIRE(result.records.size() == 1);
  CHECK(result.records[0].verdict == Verdict::fp);
  CHECK(result.unmatched_gt == 1);
}

TEST_CASE("matching: one GT can only be claimed once, highest confidence first") {
  const auto gts = std::vector<GroundTruthObject>{gt("i", 0, 0, 0, 10, 10)};
  const auto dets = std::vector<Detection>{
      det("i", 0, 0.8, 0, 0, 9, 10),   // second by confidence
      det("i", 0, 0.9, 0, 0, 10, 9),   // first by confidence
  };
  const auto result = detkit::match_detections(dets, gts, 0.5);
  REQUIRE(result.records.size() == 2);
  CHECK(result.records[0].detection_index == 1);
  CHECK(result.records[0].verdict == Verdict::tp);
  CHECK(result.records[1].detection_index == 0);
  CHECK(result.records[1].verdict == Verdict::fp);
  CHECK(result.unmatched_gt == 0);
}

TEST_CASE("matching: per-image isolation and argument checks") {
  const auto gts = std::vector<GroundTruthObject>{gt("a", 0, 0, 0, 10, 10)};
  const auto dets = std::vector<Detection>{det("b", 0, 0.9, 0, 0, 10, 10)};
  const auto result = detkit::match_detections(dets, gts, 0.5);
  CHECK(result.records[0].verdict == Verdict::fp);
  CHECK(result.unmatched_gt == 1);

  CHECK_THROWS_AS(detkit::match_detections(dets, gts, 0.0), detkit::ArgumentError);
  CHECK_THROWS_AS(detkit::match_detections(dets, gts, 1.5), detkit::ArgumentError);
  const auto bad = std::vector<Detection>{
      det("a", 0, std::numeric_limits<double>::quiet_NaN(), 0, 0, 1, 1)};
  CHECK_THROWS_AS(detkit::match_detections(bad, gts, 0.5), detkit::DataError);
}

TEST_CASE("precision_recall prefix curve") {
  const auto curve = curve_of({Verdict::tp, Verdict::fp, Verdict::tp}, 2);
  REQUIRE(curve.size() == 3);
  CHECK(curve[0].precision == doctest::Approx(1.0));
  CHECK(curve[0].recall == doctest::Approx(0.5));
  CHECK(curve[1].precision == doctest::Approx(0.5));
  CHECK(curve[1].recall == doctest::Approx(0.5));
  CHECK(curve[2].precision == doctest::Approx(2.0 / 3.0));
  CHECK(curve[2].recall == doctest::Approx(1.0));
  CHECK(curve[0].confidence > curve[2].confidence);

  const auto perfect = curve_of({Verdict::tp, Verdict::tp, Verdict::tp}, 3);
  CHECK(perfect.back().precision == doctest::Approx(1.0));
  CHECK(perfect.back().recall == doctest::Approx(1.0));

  CHECK(curve_of({}, 5).empty());
}

TEST_CASE("average_precision all-points") {
  CHECK(detkit::average_precision(curve_of({Verdict::tp}, 1)) == doctest::Approx(1.0));

  // envelope: 0.5 * 1.0 + 0.5 * (2/3)
  CHECK(detkit::average_precision(curve_of({Verdict::tp, Verdict::fp, Verdict::tp}, 2)) ==
        doctest::Approx(0.5 + 0.5 * 2.0 / 3.0).epsilon(1e-12));

  // 1/3 * (1 + 2/3 + 3/5)
  const auto five =
      curve_of({Verdict::tp, Verdict::fp, Verdict::tp, Verdict::fp, Verdict::tp}, 3);
  CHECK(detkit::average_precision(five) ==
        doctest::Approx((1.0 + 2.0 / 3.0 + 3.0 / 5.0) / 3.0).epsilon(1e-12));
}

TEST_CASE("average_precision eleven-point") {
  const auto five =
      curve_of({Verdict::tp, Verdict::fp, Verdict::tp, Verdict::fp, Verdict::tp}, 3);
  // p_interp: 1.0 for r in {0,...,0.3}, 2/3 for {0.4,...,0.6}, 3/5 for {0.7,...,1.0}
  const double expected = (4 * 1.0 + 3 * (2.0 / 3.0) + 4 * (3.0 / 5.0)) / 11.0;
  CHECK(detkit::average_precision(five, ApMode::eleven_point) ==
        doctest::Approx(expected).epsilon(1e-12));

  CHECK(detkit::ap_mode_from_string("eleven-point") == ApMode::eleven_point);
  CHECK_THROWS_AS(detkit::ap_mode_from_string("area"), detkit::ArgumentError);
}

TEST_CASE("mean_average_precision reproduces the reference mAP cells") {
  CHECK(detkit::mean_average_precision({0.8035, 0.6824}) ==
        doctest::Approx(0.74295).epsilon(1e-12));
  CHECK(detkit::mean_average_precision({0.7726, 0.5613}) ==
        doctest::Approx(0.66695).epsilon(1e-12));
  CHECK(detkit::mean_average_precision({1.0, 1.0}) == 1.0);
  CHECK_THROWS_AS(detkit::mean_average_precision({}), detkit::ArgumentError);
}

TEST_CASE("evaluate: vacuous and perfect detectors") {
  const ClassMap classes = ClassMap::default_apples();
  std::vector<GroundTruthObject> gts = {gt("a", 0, 0, 0, 10, 10), gt("a", 1, 20, 20, 30, 30),
                                        gt("b", 0, 5, 5, 9, 9)};

  const auto empty_report = detkit::evaluate({}, gts, classes);
  for (std::size_t ti = 0; ti < empty_report.thresholds.size(); ++ti) {
    CHECK(empty_report.map[ti] == 0.0);
    for (const auto& r : empty_report.per_threshold[ti]) {
      CHECK(r.ap == 0.0);
      CHECK(r.fn == r.total_gt);
    }
  }

  std::vector<Detection> perfect;
  for (const auto& g : gts) perfect.push_back(Detection{g.image_id, g.class_id, 1.0, g.box});
  const auto perfect_report = detkit::evaluate(perfect, gts, classes);
  for (std::size_t ti = 0; ti < perfect_report.thresholds.size(); ++ti) {
    CHECK(perfect_report.map[ti] == doctest::Approx(1.0));
    for (const auto& r : perfect_report.per_threshold[ti]) {
      CHECK(r.ap == doctest::Approx(1.0));
      CHECK(r.fp == 0);
      CHECK(r.fn == 0);
    }
  }
}

TEST_CASE("evaluate: class outside the map is a data error listing offenders") {
  const ClassMap classes = ClassMap::default_apples();
  const auto gts = std::vector<GroundTruthObject>{gt("a", 0, 0, 0, 10, 10)};
  const auto dets = std::vector<Detection>{det("a", 7, 0.9, 0, 0, 10, 10)};
  bool threw = false;
  try {
    detkit::evaluate(dets, gts, classes);
  } catch (const detkit::DataError& e) {
    threw = true;
    CHECK(std::string(e.what()).find("class 7") != std::string::npos);
  }
  CHECK(threw);
}

TEST_CASE("evaluate: no-GT classes") {
  const ClassMap classes = ClassMap::default_apples();
  // class 1 has detections but no GT -> AP 0, included; class 0 perfect.
  const auto gts = std::vector<GroundTruthObject>{gt("a", 0, 0, 0, 10, 10)};
  const auto dets = std::vector<Detection>{det("a", 0, 0.9, 0, 0, 10, 10),
                                           det("a", 1, 0.8, 3, 3, 6, 6)};
  const auto report = detkit::evaluate(dets, gts, classes, {0.5});
  CHECK(report.result(0, 0).ap == doctest::Approx(1.0));
  CHECK(report.result(0, 1).ap == 0.0);
  CHECK(report.result(0, 1).applicable);
  CHECK(report.map[0] == doctest::Approx(0.5));

  // class 1 with neither GT nor detections -> skipped from the mAP entirely
  const auto only0 = std::vector<Detection>{det("a", 0, 0.9, 0, 0, 10, 10)};
  const auto skipped = detkit::evaluate(only0, gts, classes, {0.5});
  CHECK_FALSE(skipped.result(0, 1).applicable);
  CHECK(skipped.map[0] == doctest::Approx(1.0));
}

TEST_CASE("evaluate: duplicate detections of one GT count as FP") {
  const ClassMap classes = ClassMap::default_apples();
  const auto gts = std::vector<GroundTruthObject>{gt("a", 0, 0, 0, 10, 10)};
  const auto dets = std::vector<Detection>{det("a", 0, 0.9, 0, 0, 10, 10),
                                           det("a", 0, 0.8, 0, 0, 10, 10),
                                           det("a", 0, 0.7, 0, 0, 10, 10)};
  const auto report = detkit::evaluate(dets, gts, classes, {0.5});
  CHECK(report.result(0, 0).tp == 1);
  CHECK(report.result(0, 0).fp == 2);
}

TEST_CASE("AP is monotonically non-increasing in the IOU threshold") {
  std::mt19937_64 rng(23);
  std::uniform_real_distribution<double> coord(0.0, 90.0);
  std::uniform_real_distribution<double> size(2.0, 30.0);
  std::uniform_real_distribution<double> conf(0.0, 1.0);
  const ClassMap classes({"only"});

  for (int scene = 0; scene < 50; ++scene) {
    std::vector<GroundTruthObject> gts;
    std::vector<Detection> dets;
    for (int g = 0; g < 6; ++g) {
      const double x = coord(rng), y = coord(rng);
      gts.push_back(gt("img", 0, x, y, x + size(rng), y + size(rng)));
    }
    for (int d = 0; d < 12; ++d) {
      const double x = coord(rng), y = coord(rng);
      dets.push_back(det("img", 0, conf(rng), x, y, x + size(rng), y + size(rng)));
    }
    const auto report =
        detkit::evaluate(dets, gts, classes, {0.1, 0.3, 0.5, 0.7, 0.9});
    for (std::size_t ti = 1; ti < report.thresholds.size(); ++ti) {
      CHECK(report.result(ti, 0).ap <= report.result(ti - 1, 0).ap + 1e-15);
    }
  }
}

TEST_CASE("AP depends only on the confidence ranking") {
  std::mt19937_64 rng(29);
  std::uniform_real_distribution<double> coord(0.0, 90.0);
  std::uniform_real_distribution<double> size(2.0, 30.0);
  const ClassMap classes({"only"});

  std::vector<GroundTruthObject> gts;
  std::vector<Detection> dets;
  for (int g = 0; g < 8; ++g) {
    const double x = coord(rng), y = coord(rng);
    gts.push_back(gt("img", 0, x, y, x + size(rng), y + size(rng)));
  }
  for (int d = 0; d < 15; ++d) {
    const double x = coord(rng), y = coord(rng);
    // strictly decreasing confidences
    dets.push_back(det("img", 0, 1.0 - 0.05 * d, x, y, x + size(rng), y + size(rng)));
  }
  const auto base = detkit::evaluate(dets, gts, classes, {0.5});

  // any strictly monotonic transform of the confidences preserves the ranking
  std::vector<Detection> squashed = dets;
  for (auto& d : squashed) d.confidence = 1.0 / (1.0 + std::exp(-3.0 * (d.confidence - 0.4)));
  const auto transformed = detkit::evaluate(squashed, gts, classes, {0.5});
  CHECK(transformed.result(0, 0).ap == base.result(0, 0).ap);
}

TEST_CASE("evaluate is invariant to storage order for distinct confidences") {
  std::mt19937_64 rng(31);
  std::uniform_real_distribution<double> coord(0.0, 90.0);
  std::uniform_real_distribution<double> size(2.0, 30.0);
  const ClassMap classes = ClassMap::default_apples();

  std::vector<GroundTruthObject> gts;
  std::vector<Detection> dets;
  for (int g = 0; g < 10; ++g) {
    const double x = coord(rng), y = coord(rng);
    gts.push_back(gt(g % 2 ? "a" : "b", g % 2, x, y, x + size(rng), y + size(rng)));
  }
  for (int d = 0; d < 20; ++d) {
    const double x = coord(rng), y = coord(rng);
    dets.push_back(det(d % 2 ? "a" : "b", d % 3 ? 0 : 1, (d + 1) / 40.0, x, y, x + size(rng),
                       y + size(rng)));
  }
  const auto before = detkit::evaluate(dets, gts, classes);
  std::shuffle(dets.begin(), dets.end(), rng);
  std::shuffle(gts.begin(), gts.end(), rng);
  const auto after = detkit::evaluate(dets, gts, classes);
  for (std::size_t ti = 0; ti < before.thresholds.size(); ++ti) {
    CHECK(before.map[ti] == after.map[ti]);
    for (int c = 0; c < classes.size(); ++c) {
      CHECK(before.result(ti, c).ap == after.result(ti, c).ap);
      CHECK(before.result(ti, c).tp == after.result(ti, c).tp);
    }
  }
}

TEST_CASE("randomized scenes match the independent reference implementation") {
  std::mt19937_64 rng(37);
  std::uniform_int_distribution<int> gt_count(0, 10);
  std::uniform_int_distribution<int> det_count(0, 20);
  std::uniform_int_distribution<int> cls(0, 1);
  std::uniform_real_distribution<double> coord(0.0, 80.0);
  std::uniform_real_distribution<double> size(1.0, 40.0);
  std::uniform_real_distribution<double> conf(0.0, 1.0);
  std::uniform_int_distribution<int> tie(0, 3);
  const ClassMap classes = ClassMap::default_apples();
  const std::vector<double> thresholds{0.3, 0.5, 0.7};

  for (int scene = 0; scene < 300; ++scene) {
    std::vector<GroundTruthObject> gts;
    std::vector<Detection> dets;
    std::vector<refeval::Gt> ref_gts;
    std::vector<refeval::Det> ref_dets;
    const std::string image = "scene-" + std::to_string(scene);

    const int n_gt = gt_count(rng);
    for (int g = 0; g < n_gt; ++g) {
      const double x = coord(rng), y = coord(rng), w = size(rng), h = size(rng);
      const int c = cls(rng);
      gts.push_back(gt(image, c, x, y, x + w, y + h));
      ref_gts.push_back({image, c, refeval::Box{x, y, x + w, y + h}});
    }
    const int n_det = det_count(rng);
    for (int d = 0; d < n_det; ++d) {
      const double x = coord(rng), y = coord(rng), w = size(rng), h = size(rng);
      const int c = cls(rng);
      // occasionally quantize confidence to force ties
      double score = conf(rng);
      if (tie(rng) == 0) score = std::round(score * 8.0) / 8.0;
      dets.push_back(det(image, c, score, x, y, x + w, y + h));
      ref_dets.push_back({image, c, score, refeval::Box{x, y, x + w, y + h}});
    }

    const auto report = detkit::evaluate(dets, gts, classes, thresholds);
    const auto reference = refeval::score_dataset(ref_dets, ref_gts, 2, thresholds, false);
    for (std::size_t ti = 0; ti < thresholds.size(); ++ti) {
      CHECK(std::abs(report.map[ti] - reference.map[ti]) < 1e-9);
      for (int c = 0; c < 2; ++c) {
        const auto& mine = report.result(ti, c);
        const auto& ref = reference.grid[ti][static_cast<std::size_t>(c)];
        if (ref.ap < 0.0) {
          CHECK_FALSE(mine.applicable);
          continue;
        }
        CHECK(std::abs(mine.ap - ref.ap) < 1e-9);
        CHECK(mine.tp == ref.tp);
        CHECK(mine.fp == ref.fp);
        CHECK(mine.fn == ref.fn);
        CHECK(mine.tp + mine.fn == mine.total_gt);
        CHECK(mine.tp + mine.fp == static_cast<std::size_t>(
                                       std::count_if(dets.begin(), dets.end(),
                                                     [&](const Detection& d) {
                                                       return d.class_id == c;
                                                     })));
      }
    }
    detkit::check_report_invariants(report);
  }
}
