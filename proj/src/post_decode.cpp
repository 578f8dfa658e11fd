#include "detkit/post/decode.hpp"

#include <algorithm>
#include <cmath>

#include "detkit/post/nms.hpp"

namespace detkit::post {

namespace {

double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

// exp(th) can overflow for junk logits; cap the box extent instead of letting
// infinities reach the box constructor.
double finite_or_huge(double v) { return std::isfinite(v) ? v : 1e12; }

}  // namespace

std::vector<Detection> decode_head(const nn::HeadOutput& head, int net_w, int net_h,
                                   double score_threshold, const std::string& image_id) {
  const Tensor& raw = head.raw;
  if (raw.batch != 1) throw ShapeError("decode_head expects a batch-1 head tensor");
  const int per_anchor = head.classes + 5;
  const int expected = static_cast<int>(head.anchors.size()) * per_anchor;
  if (raw.channels != expected) {
    throw ShapeError("decode_head: head has " + std::to_string(raw.channels) +
                     " channels, expected " + std::to_string(expected) +
                     " (= anchors * (classes + 5))");
  }

  std::vector<Detection> out;
  for (std::size_t a = 0; a < head.anchors.size(); ++a) {
    const int base = static_cast<int>(a) * per_anchor;
    const auto [anchor_w, anchor_h] = head.anchors[a];
    for (int row = 0; row < head.grid_h; ++row) {
      for (int col = 0; col < head.grid_w; ++col) {
        const double objectness = sigmoid(raw.at(0, base + 4, row, col));
        if (objectness < score_threshold) continue;  // no class can reach it

        const double cx = (col + sigmoid(raw.at(0, base + 0, row, col))) / head.grid_w;
        const double cy = (row + sigmoid(raw.at(0, base + 1, row, col))) / head.grid_h;
        const double w =
            finite_or_huge(anchor_w * std::exp(static_cast<double>(raw.at(0, base + 2, row, col)))) /
            net_w;
        const double h =
            finite_or_huge(anchor_h * std::exp(static_cast<double>(raw.at(0, base + 3, row, col)))) /
            net_h;

        for (int c = 0; c < head.classes; ++c) {
          const double score = objectness * sigmoid(raw.at(0, base + 5 + c, row, col));
          if (score < score_threshold) continue;
          Detection det;
          det.image_id = image_id;
          det.class_id = c;
          det.confidence = score;
          det.box = box_from_center_size(
              CenterSize{cx * net_w, cy * net_h, w * net_w, h * net_h});
          out.push_back(std::move(det));
        }
      }
    }
  }
  return out;
}

std::vector<Detection> to_image_coordinates(const std::vector<Detection>& dets,
                                            const LetterboxTransform& transform) {
  std::vector<Detection> out;
  out.reserve(dets.size());
  for (const Detection& d : dets) {
    Detection mapped = d;
    mapped.box = clamp_to_image(transform.unmap_box(d.box), transform.src_w, transform.src_h);
    if (mapped.box.degenerate()) continue;
    out.push_back(std::move(mapped));
  }
  return out;
}

std::vector<Detection> postprocess(const std::vector<nn::HeadOutput>& heads, int net_w, int net_h,
                                   const LetterboxTransform& transform, double score_threshold,
                                   double nms_threshold, const std::string& image_id) {
  std::vector<Detection> all;
  for (const nn::HeadOutput& head : heads) {
    std::vector<Detection> dets = decode_head(head, net_w, net_h, score_threshold, image_id);
    all.insert(all.end(), std::make_move_iterator(dets.begin()),
               std::make_move_iterator(dets.end()));
  }
  return nms(to_image_coordinates(all, transform), nms_threshold);
}

}  // namespace detkit::post
