#include "detkit/post/letterbox.hpp"

#include <algorithm>
#include <cmath>

namespace detkit::post {

LetterboxTransform make_letterbox(int img_w, int img_h, int net_w, int net_h) {
  if (img_w <= 0 || img_h <= 0 || net_w <= 0 || net_h <= 0) {
    throw ArgumentError("letterbox dims must be positive");
  }
  LetterboxTransform t;
  t.src_w = img_w;
  t.src_h = img_h;
  t.net_w = net_w;
  t.net_h = net_h;
  t.scale = std::min(static_cast<double>(net_w) / img_w, static_cast<double>(net_h) / img_h);
  t.content_w = static_cast<int>(std::lround(img_w * t.scale));
  t.content_h = static_cast<int>(std::lround(img_h * t.scale));
  t.pad_x = (net_w - t.content_w) / 2;
  t.pad_y = (net_h - t.content_h) / 2;
  return t;
}

Tensor letterbox_image(const Tensor& image, const LetterboxTransform& t) {
  if (image.batch != 1) throw ShapeError("letterbox_image expects a batch-1 tensor");
  if (image.width != t.src_w || image.height != t.src_h) {
    throw ShapeError("letterbox_image: image dims do not match the transform");
  }

  Tensor out(1, image.channels, t.net_h, t.net_w);
  std::fill(out.data.begin(), out.data.end(), 0.5f);

  for (int c = 0; c < image.channels; ++c) {
    const float* src = image.data.data() + image.index(0, c, 0, 0);
    for (int oy = 0; oy < t.content_h; ++oy) {
      // Sample at output-pixel centers mapped back into the source.
      const double sy = (oy + 0.5) / t.scale - 0.5;
      const int y0 = static_cast<int>(std::floor(sy));
      const double fy = sy - y0;
      const int yl = std::clamp(y0, 0, t.src_h - 1);
      const int yh = std::clamp(y0 + 1, 0, t.src_h - 1);
      float* dst_row = out.data.data() + out.index(0, c, t.pad_y + oy, t.pad_x);
      for (int ox = 0; ox < t.content_w; ++ox) {
        const double sx = (ox + 0.5) / t.scale - 0.5;
        const int x0 = static_cast<int>(std::floor(sx));
        const double fx = sx - x0;
        const int xl = std::clamp(x0, 0, t.src_w - 1);
        const int xh = std::clamp(x0 + 1, 0, t.src_w - 1);
        const double top = src[static_cast<std::size_t>(yl) * t.src_w + xl] * (1.0 - fx) +
                           src[static_cast<std::size_t>(yl) * t.src_w + xh] * fx;
        const double bottom = src[static_cast<std::size_t>(yh) * t.src_w + xl] * (1.0 - fx) +
                              src[static_cast<std::size_t>(yh) * t.src_w + xh] * fx;
        dst_row[ox] = static_cast<float>(top * (1.0 - fy) + bottom * fy);
      }
    }
  }
  return out;
}

}  // namespace detkit::post
