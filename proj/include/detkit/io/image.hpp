#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "detkit/tensor.hpp"

namespace detkit::io {

/// 8-bit interleaved RGB raster, the working representation for decoding and
/// rendering. Inference converts to a normalized float tensor separately so
/// renders never round-trip through float.
struct ImageU8 {
  int width = 0;
  int height = 0;
  std::vector<std::uint8_t> rgb;  // width*height*3, row-major

  ImageU8() = default;
  ImageU8(int w, int h)
      : width(w), height(h), rgb(static_cast<std::size_t>(w) * static_cast<std::size_t>(h) * 3) {}

  std::size_t offset(int x, int y) const {
    return (static_cast<std::size_t>(y) * static_cast<std::size_t>(width) +
            static_cast<std::size_t>(x)) *
           3;
  }

  void set_pixel(int x, int y, std::uint8_t r, std::uint8_t g, std::uint8_t b) {
    const std::size_t o = offset(x, y);
    rgb[o] = r;
    rgb[o + 1] = g;
    rgb[o + 2] = b;
  }

  std::array<std::uint8_t, 3> pixel(int x, int y) const {
    const std::size_t o = offset(x, y);
    return {rgb[o], rgb[o + 1], rgb[o + 2]};
  }
};

/// Decodes a PNG or JPEG file (sniffed by magic bytes) into 8-bit RGB.
ImageU8 read_image(const std::string& path);

/// Reads only the pixel dimensions from a PNG or JPEG header.
std::pair<int, int> read_image_size(const std::string& path);

/// Writes an 8-bit RGB PNG. The encoder is self-contained (unfiltered rows,
/// fixed zlib level), so output bytes are deterministic for fixed pixels.
void write_png(const ImageU8& image, const std::string& path);

std::vector<std::uint8_t> encode_png(const ImageU8& image);

/// Normalized float CHW tensor in [0, 1], batch 1, RGB channel order.
Tensor to_tensor(const ImageU8& image);

/// Inverse of to_tensor with clamping; used by tests and debugging tools.
ImageU8 to_image(const Tensor& tensor);

}  // namespace detkit::io
