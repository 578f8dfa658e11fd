#pragma once

#include <algorithm>
#include <cmath>
#include <optional>

#include "detkit/error.hpp"

namespace detkit {

/// Axis-aligned rectangle in continuous pixel coordinates (origin top-left,
/// x rightward, y downward). Construction canonicalizes flipped corners so
/// x_min <= x_max and y_min <= y_max always hold; non-finite coordinates are
/// rejected. Area is purely geometric (no +1 pixel-inclusive convention).
class BoundingBox {
 public:
  BoundingBox() = default;

  BoundingBox(double x0, double y0, double x1, double y1) {
    if (!std::isfinite(x0) || !std::isfinite(y0) || !std::isfinite(x1) || !std::isfinite(y1)) {
      throw DataError("bounding box coordinates must be finite");
    }
    x_min_ = std::min(x0, x1);
    x_max_ = std::max(x0, x1);
    y_min_ = std::min(y0, y1);
    y_max_ = std::max(y0, y1);
  }

  double x_min() const { return x_min_; }
  double y_min() const { return y_min_; }
  double x_max() const { return x_max_; }
  double y_max() const { return y_max_; }

  double width() const { return x_max_ - x_min_; }
  double height() const { return y_max_ - y_min_; }
  bool degenerate() const { return width() == 0.0 || height() == 0.0; }

  bool operator==(const BoundingBox&) const = default;

 private:
  double x_min_ = 0.0;
  double y_min_ = 0.0;
  double x_max_ = 0.0;
  double y_max_ = 0.0;
};

inline double area(const BoundingBox& b) { return b.width() * b.height(); }

/// Overlap rectangle of two boxes, or absent when they do not properly overlap
/// (touching edges count as no overlap).
inline std::optional<BoundingBox> intersection(const BoundingBox& a, const BoundingBox& b) {
  const double x0 = std::max(a.x_min(), b.x_min());
  const double y0 = std::max(a.y_min(), b.y_min());
  const double x1 = std::min(a.x_max(), b.x_max());
  const double y1 = std::min(a.y_max(), b.y_max());
  if (x0 >= x1 || y0 >= y1) return std::nullopt;
  return BoundingBox(x0, y0, x1, y1);
}

/// Intersection area over union area, in [0, 1]. Defined as 0 when the union
/// has zero area (both boxes degenerate) so downstream metrics never see NaN.
inline double iou(const BoundingBox& a, const BoundingBox& b) {
  const auto inter = intersection(a, b);
  const double inter_area = inter ? area(*inter) : 0.0;
  const double union_area = area(a) + area(b) - inter_area;
  if (union_area <= 0.0) return 0.0;
  return inter_area / union_area;
}

/// Center/size form of a box. `normalized` variants divide by image dims.
struct CenterSize {
  double cx = 0.0;
  double cy = 0.0;
  double w = 0.0;
  double h = 0.0;
};

inline BoundingBox box_from_center_size(const CenterSize& c) {
  if (!(c.w >= 0.0) || !(c.h >= 0.0)) {
    throw DataError("box width/height must be non-negative");
  }
  return BoundingBox(c.cx - c.w / 2.0, c.cy - c.h / 2.0, c.cx + c.w / 2.0, c.cy + c.h / 2.0);
}

inline CenterSize center_size(const BoundingBox& b) {
  return CenterSize{(b.x_min() + b.x_max()) / 2.0, (b.y_min() + b.y_max()) / 2.0, b.width(),
                    b.height()};
}

inline BoundingBox box_from_normalized(const CenterSize& c, double img_w, double img_h) {
  if (!(img_w > 0.0) || !(img_h > 0.0)) {
    throw ArgumentError("image dimensions must be positive");
  }
  return box_from_center_size(CenterSize{c.cx * img_w, c.cy * img_h, c.w * img_w, c.h * img_h});
}

inline CenterSize normalized_center_size(const BoundingBox& b, double img_w, double img_h) {
  if (!(img_w > 0.0) || !(img_h > 0.0)) {
    throw ArgumentError("image dimensions must be positive");
  }
  const CenterSize c = center_size(b);
  return CenterSize{c.cx / img_w, c.cy / img_h, c.w / img_w, c.h / img_h};
}

/// Clips a box to the rectangle [0, w] x [0, h].
inline BoundingBox clamp_to_image(const BoundingBox& b, double img_w, double img_h) {
  return BoundingBox(std::clamp(b.x_min(), 0.0, img_w), std::clamp(b.y_min(), 0.0, img_h),
                     std::clamp(b.x_max(), 0.0, img_w), std::clamp(b.y_max(), 0.0, img_h));
}

}  // namespace detkit
