#pragma once

#include <string>
#include <vector>

#include "detkit/nn/network.hpp"
#include "detkit/post/letterbox.hpp"
#include "detkit/types.hpp"

namespace detkit::post {

constexpr double kDefaultScoreThreshold = 0.25;
constexpr double kDefaultNmsThreshold = 0.45;

/// Decodes one raw yolo head into scored boxes in network-input pixel
/// coordinates. For cell (col, row) and anchor (pw, ph):
///   center = ((col + sigmoid(tx)) / gridW, (row + sigmoid(ty)) / gridH)
///   size   = (pw * exp(tw) / netW,  ph * exp(th) / netH)      (normalized)
/// scaled back to net pixels before boxing. Per-class score is
/// sigmoid(objectness) * sigmoid(class logit); one Detection is emitted per
/// (box, class) whose score reaches `score_threshold`.
std::vector<Detection> decode_head(const nn::HeadOutput& head, int net_w, int net_h,
                                   double score_threshold, const std::string& image_id = "");

/// Maps network-coordinate detections back to source-image pixels, clamps to
/// the image bounds and discards boxes that collapse to zero area.
std::vector<Detection> to_image_coordinates(const std::vector<Detection>& dets,
                                            const LetterboxTransform& transform);

/// Full post-processing: decode every head, un-letterbox, then per-class NMS.
/// Output sorted by descending confidence.
std::vector<Detection> postprocess(const std::vector<nn::HeadOutput>& heads, int net_w, int net_h,
                                   const LetterboxTransform& transform, double score_threshold,
                                   double nms_threshold, const std::string& image_id);

}  // namespace detkit::post
