#pragma once

#include <string>
#include <vector>

#include "detkit/eval.hpp"

namespace detkit::io {

/// A report labeled with the detector it scores (used by compare).
struct NamedReport {
  std::string name;
  EvalReport report;
};

/// Human-readable layout: one AP row per class across IOU thresholds, the
/// tp/fp/fn counts, then the per-threshold mAP row. Not-applicable cells
/// (no GT and no detections) print as "n/a".
std::string format_report_text(const EvalReport& report);

/// Machine-readable JSON. Field names: class, iou_threshold, ap, tp, fp, fn,
/// total_gt, applicable in "results"; iou_threshold, map in "map".
std::string format_report_json(const EvalReport& report);

/// Side-by-side layout for several detectors over the same ground truth: one
/// AP table per class with a row per detector, then the mAP table.
std::string format_compare_text(const std::vector<NamedReport>& reports);

std::string format_compare_json(const std::vector<NamedReport>& reports);

void write_text_file(const std::string& content, const std::string& path);

}  // namespace detkit::io
