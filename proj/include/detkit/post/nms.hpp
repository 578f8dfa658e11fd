#pragma once

#include <vector>

#include "detkit/types.hpp"

namespace detkit::post {

/// Greedy per-class non-max suppression over one image's detections:
/// repeatedly keep the highest-confidence remaining detection and discard
/// same-class detections whose IOU against it exceeds the threshold (strict,
/// so threshold 1.0 only removes exact duplicates). Output sorted by
/// descending confidence, ties in input order.
std::vector<Detection> nms(const std::vector<Detection>& detections, double iou_threshold);

}  // namespace detkit::post
