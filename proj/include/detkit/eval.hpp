#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <vector>

#include "detkit/types.hpp"

namespace detkit {

enum class Verdict { tp, fp };

/// One scored detection after matching. `detection_index` refers into the
/// detection list passed to match_detections; `gt_index` is set for TPs only.
struct MatchRecord {
  std::size_t detection_index = 0;
  double confidence = 0.0;
  Verdict verdict = Verdict::fp;
  std::optional<std::size_t> gt_index;
};

struct MatchResult {
  std::vector<MatchRecord> records;  // descending confidence, ties in input order
  std::size_t unmatched_gt = 0;      // false negatives
};

/// Greedy one-to-one matching of detections against ground truth at a fixed
/// IOU threshold. All inputs must share one class; matching is per-image.
/// Detections are processed in strictly descending confidence (ties broken by
/// stable input order); a detection is a TP iff its best-IOU unmatched
/// same-image ground truth reaches the threshold, which then becomes matched.
MatchResult match_detections(std::span<const Detection> detections,
                             std::span<const GroundTruthObject> ground_truths,
                             double iou_threshold);

/// One point of the precision-recall curve at a confidence cutoff.
struct PRPoint {
  double precision = 0.0;
  double recall = 0.0;
  double confidence = 0.0;
};

/// Prefix precision/recall over a ranked match list. With total_gt == 0 the
/// recall is defined as 0 so the curve (and AP downstream) stays NaN-free.
std::vector<PRPoint> precision_recall(const std::vector<MatchRecord>& records,
                                      std::size_t total_gt);

enum class ApMode { all_points, eleven_point };

ApMode ap_mode_from_string(const std::string& name);
const char* to_string(ApMode mode);

/// Area under the interpolated precision envelope. all_points integrates
/// p_interp(r) = max precision over recall >= r across every distinct recall
/// step; eleven_point averages p_interp at r in {0, 0.1, ..., 1.0}.
double average_precision(const std::vector<PRPoint>& curve, ApMode mode = ApMode::all_points);

/// Arithmetic mean of per-class APs; rejects an empty list.
double mean_average_precision(const std::vector<double>& class_aps);

/// Per-class, per-threshold outcome.
struct APResult {
  int class_id = 0;
  double iou_threshold = 0.0;
  double ap = 0.0;
  bool applicable = true;  // false when the class has no GT and no detections
  std::vector<PRPoint> curve;
  std::size_t tp = 0;
  std::size_t fp = 0;
  std::size_t fn = 0;
  std::size_t total_gt = 0;
};

/// The full AP/mAP grid: one APResult per (threshold, class) plus the mAP of
/// each threshold taken over its applicable classes.
struct EvalReport {
  ClassMap classes;
  std::vector<double> thresholds;
  ApMode mode = ApMode::all_points;
  std::vector<std::vector<APResult>> per_threshold;  // [threshold][class]
  std::vector<double> map;                           // [threshold]

  const APResult& result(std::size_t threshold_index, int class_id) const {
    return per_threshold.at(threshold_index).at(static_cast<std::size_t>(class_id));
  }
};

inline const std::vector<double>& default_iou_thresholds() {
  static const std::vector<double> kThresholds{0.3, 0.5, 0.7};
  return kThresholds;
}

/// Runs the match -> precision/recall -> AP pipeline per class per threshold
/// and aggregates mAP per threshold. Deterministic for fixed inputs.
EvalReport evaluate(std::span<const Detection> detections,
                    std::span<const GroundTruthObject> ground_truths, const ClassMap& classes,
                    const std::vector<double>& thresholds = default_iou_thresholds(),
                    ApMode mode = ApMode::all_points);

/// Asserts the report's internal identities (counts and mAP-vs-mean within
/// 1e-12); throws Error on violation.
void check_report_invariants(const EvalReport& report);

}  // namespace detkit
