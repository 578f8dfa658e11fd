#pragma once

#include "detkit/box.hpp"
#include "detkit/tensor.hpp"

namespace detkit::post {

/// Aspect-preserving map between source-image and network-input coordinates:
/// scale = min(netW/imgW, netH/imgH) with the scaled content centered and the
/// remainder padded. map/unmap round-trip any point within 1e-6.
struct LetterboxTransform {
  int src_w = 0;
  int src_h = 0;
  int net_w = 0;
  int net_h = 0;
  double scale = 1.0;
  int content_w = 0;
  int content_h = 0;
  int pad_x = 0;
  int pad_y = 0;

  double map_x(double x) const { return x * scale + pad_x; }
  double map_y(double y) const { return y * scale + pad_y; }
  double unmap_x(double x) const { return (x - pad_x) / scale; }
  double unmap_y(double y) const { return (y - pad_y) / scale; }

  BoundingBox map_box(const BoundingBox& b) const {
    return BoundingBox(map_x(b.x_min()), map_y(b.y_min()), map_x(b.x_max()), map_y(b.y_max()));
  }
  BoundingBox unmap_box(const BoundingBox& b) const {
    return BoundingBox(unmap_x(b.x_min()), unmap_y(b.y_min()), unmap_x(b.x_max()),
                       unmap_y(b.y_max()));
  }
};

LetterboxTransform make_letterbox(int img_w, int img_h, int net_w, int net_h);

/// Resamples a CHW float image (values in [0,1]) onto the letterbox canvas:
/// bilinear within the content region, gray 0.5 padding elsewhere. The input
/// tensor must be batch-1.
Tensor letterbox_image(const Tensor& image, const LetterboxTransform& transform);

}  // namespace detkit::post
