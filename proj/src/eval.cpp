#include "detkit/eval.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>
#include <unordered_map>

#include "detkit/error.hpp"

namespace detkit {

namespace {

void check_threshold(double iou_threshold) {
  if (!(iou_threshold > 0.0) || !(iou_threshold <= 1.0)) {
    throw ArgumentError("iou threshold must lie in (0, 1], got " +
                        std::to_string(iou_threshold));
  }
}

}  // namespace

MatchResult match_detections(std::span<const Detection> detections,
                             std::span<const GroundTruthObject> ground_truths,
                             double iou_threshold) {
  check_threshold(iou_threshold);
  for (const Detection& d : detections) {
    if (std::isnan(d.confidence)) throw DataError("detection confidence is NaN");
  }

  // Rank by descending confidence; stable_sort keeps input order on ties.
  std::vector<std::size_t> order(detections.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return detections[a].confidence > detections[b].confidence;
  });

  std::unordered_map<std::string, std::vector<std::size_t>> gts_by_image;
  for (std::size_t g = 0; g < ground_truths.size(); ++g) {
    gts_by_image[ground_truths[g].image_id].push_back(g);
  }
  std::vector<bool> gt_matched(ground_truths.size(), false);

  MatchResult result;
  result.records.reserve(detections.size());
  for (std::size_t rank = 0; rank < order.size(); ++rank) {
    const std::size_t di = order[rank];
    const Detection& det = detections[di];
    MatchRecord record;
    record.detection_index = di;
    record.confidence = det.confidence;

    // Best-IOU unmatched ground truth of the same image; ties keep the
    // earliest ground truth in input order.
    double best_iou = 0.0;
    std::size_t best_gt = 0;
    bool found = false;
    if (auto it = gts_by_image.find(det.image_id); it != gts_by_image.end()) {
      for (std::size_t gi : it->second) {
        if (gt_matched[gi]) continue;
        const double overlap = iou(det.box, ground_truths[gi].box);
        if (overlap > best_iou) {
          best_iou = overlap;
          best_gt = gi;
          found = true;
        }
      }
    }
    if (found && best_iou >= iou_threshold) {
      gt_matched[best_gt] = true;
      record.verdict = Verdict::tp;
      record.gt_index = best_gt;
    } else {
      record.verdict = Verdict::fp;
    }
    result.records.push_back(std::move(record));
  }

  result.unmatched_gt =
      static_cast<std::size_t>(std::count(gt_matched.begin(), gt_matched.end(), false));
  return result;
}

std::vector<PRPoint> precision_recall(const std::vector<MatchRecord>& records,
                                      std::size_t total_gt) {
  std::vector<PRPoint> curve;
  curve.reserve(records.size());
  std::size_t tp = 0;
  std::size_t fp = 0;
  for (const MatchRecord& r : records) {
    (r.verdict == Verdict::tp ? tp : fp)++;
    PRPoint p;
    p.precision = static_cast<double>(tp) / static_cast<double>(tp + fp);
    p.recall = total_gt == 0 ? 0.0 : static_cast<double>(tp) / static_cast<double>(total_gt);
    p.confidence = r.confidence;
    curve.push_back(p);
  }
  return curve;
}

ApMode ap_mode_from_string(const std::string& name) {
  if (name == "all-points") return ApMode::all_points;
  if (name == "eleven-point") return ApMode::eleven_point;
  throw ArgumentError("unknown AP mode '" + name + "' (expected all-points or eleven-point)");
}

const char* to_string(ApMode mode) {
  return mode == ApMode::all_points ? "all-points" : "eleven-point";
}

double average_precision(const std::vector<PRPoint>& curve, ApMode mode) {
  if (curve.empty()) return 0.0;

  // Precision envelope from the right: envelope[k] = max precision over all
  // points with recall >= recall[k]. Recall is non-decreasing along the curve,
  // so a suffix max over rank order realizes it.
  std::vector<double> envelope(curve.size());
  double running = 0.0;
  for (std::size_t k = curve.size(); k-- > 0;) {
    running = std::max(running, curve[k].precision);
    envelope[k] = running;
  }

  if (mode == ApMode::all_points) {
    double ap = 0.0;
    double prev_recall = 0.0;
    for (std::size_t k = 0; k < curve.size(); ++k) {
      if (curve[k].recall > prev_recall) {
        ap += (curve[k].recall - prev_recall) * envelope[k];
        prev_recall = curve[k].recall;
      }
    }
    return ap;
  }

  // eleven_point: mean of p_interp at r in {0.0, 0.1, ..., 1.0}; p_interp(r)
  // is 0 when no point reaches recall r.
  double sum = 0.0;
  for (int step = 0; step <= 10; ++step) {
    const double r = static_cast<double>(step) / 10.0;
    double p = 0.0;
    for (std::size_t k = 0; k < curve.size(); ++k) {
      if (curve[k].recall + 1e-12 >= r) {
        p = envelope[k];
        break;
      }
    }
    sum += p;
  }
  return sum / 11.0;
}

double mean_average_precision(const std::vector<double>& class_aps) {
  if (class_aps.empty()) throw ArgumentError("mean_average_precision needs at least one class AP");
  const double sum = std::accumulate(class_aps.begin(), class_aps.end(), 0.0);
  return sum / static_cast<double>(class_aps.size());
}

EvalReport evaluate(std::span<const Detection> detections,
                    std::span<const GroundTruthObject> ground_truths, const ClassMap& classes,
                    const std::vector<double>& thresholds, ApMode mode) {
  for (double t : thresholds) check_threshold(t);
  if (thresholds.empty()) throw ArgumentError("at least one IOU threshold is required");

  std::string offenders;
  for (const Detection& d : detections) {
    if (!classes.contains(d.class_id)) {
      offenders += "\n  image " + d.image_id + ": class " + std::to_string(d.class_id);
    }
  }
  for (const GroundTruthObject& g : ground_truths) {
    if (!classes.contains(g.class_id)) {
      offenders += "\n  image " + g.image_id + ": class " + std::to_string(g.class_id);
    }
  }
  if (!offenders.empty()) {
    throw DataError("records with class ids outside the class map:" + offenders);
  }

  // Partition by class once; filtering preserves input order, which keeps the
  // stable tie-break identical to a per-class run.
  std::vector<std::vector<Detection>> dets_by_class(static_cast<std::size_t>(classes.size()));
  std::vector<std::vector<GroundTruthObject>> gts_by_class(
      static_cast<std::size_t>(classes.size()));
  for (const Detection& d : detections) {
    dets_by_class[static_cast<std::size_t>(d.class_id)].push_back(d);
  }
  for (const GroundTruthObject& g : ground_truths) {
    gts_by_class[static_cast<std::size_t>(g.class_id)].push_back(g);
  }

  EvalReport report;
  report.classes = classes;
  report.thresholds = thresholds;
  report.mode = mode;
  report.per_threshold.resize(thresholds.size());
  report.map.resize(thresholds.size(), 0.0);

  for (std::size_t ti = 0; ti < thresholds.size(); ++ti) {
    std::vector<double> class_aps;
    for (int c = 0; c < classes.size(); ++c) {
      const auto& dets = dets_by_class[static_cast<std::size_t>(c)];
      const auto& gts = gts_by_class[static_cast<std::size_t>(c)];

      APResult r;
      r.class_id = c;
      r.iou_threshold = thresholds[ti];
      r.total_gt = gts.size();
      r.applicable = !(gts.empty() && dets.empty());

      if (r.applicable) {
        MatchResult matches = match_detections(dets, gts, thresholds[ti]);
        r.curve = precision_recall(matches.records, gts.size());
        r.ap = average_precision(r.curve, mode);
        for (const MatchRecord& m : matches.records) {
          (m.verdict == Verdict::tp ? r.tp : r.fp)++;
        }
        r.fn = matches.unmatched_gt;
        class_aps.push_back(r.ap);
      } else {
        r.fn = 0;
      }
      report.per_threshold[ti].push_back(std::move(r));
    }
    report.map[ti] = class_aps.empty() ? 0.0 : mean_average_precision(class_aps);
  }

  check_report_invariants(report);
  return report;
}

void check_report_invariants(const EvalReport& report) {
  if (report.per_threshold.size() != report.thresholds.size() ||
      report.map.size() != report.thresholds.size()) {
    throw Error("report grid does not cover every threshold");
  }
  for (std::size_t ti = 0; ti < report.thresholds.size(); ++ti) {
    std::vector<double> aps;
    for (const APResult& r : report.per_threshold[ti]) {
      if (r.ap < 0.0 || r.ap > 1.0) throw Error("AP outside [0, 1]");
      if (r.applicable && r.tp + r.fn != r.total_gt) {
        throw Error("tp + fn does not equal the class ground-truth count");
      }
      if (r.applicable) aps.push_back(r.ap);
    }
    const double expected = aps.empty() ? 0.0 : mean_average_precision(aps);
    if (std::abs(report.map[ti] - expected) > 1e-12) {
      throw Error("mAP is not the mean of its class APs");
    }
  }
}

}  // namespace detkit
