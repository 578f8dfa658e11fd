#include "detkit/post/nms.hpp"

#include <algorithm>
#include <numeric>

#include "detkit/error.hpp"

namespace detkit::post {

std::vector<Detection> nms(const std::vector<Detection>& detections, double iou_threshold) {
  if (!(iou_threshold > 0.0) || !(iou_threshold <= 1.0)) {
    throw ArgumentError("nms iou threshold must lie in (0, 1], got " +
                        std::to_string(iou_threshold));
  }

  std::vector<std::size_t> order(detections.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return detections[a].confidence > detections[b].confidence;
  });

  std::vector<bool> suppressed(detections.size(), false);
  std::vector<Detection> kept;
  for (std::size_t i = 0; i < order.size(); ++i) {
    const std::size_t di = order[i];
    if (suppressed[di]) continue;
    const Detection& keep = detections[di];
    kept.push_back(keep);
    for (std::size_t j = i + 1; j < order.size(); ++j) {
      const std::size_t dj = order[j];
      if (suppressed[dj] || detections[dj].class_id != keep.class_id) continue;
      if (iou(keep.box, detections[dj].box) > iou_threshold) suppressed[dj] = true;
    }
  }
  return kept;
}

}  // namespace detkit::post
