#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "detkit/error.hpp"

namespace detkit {

/// Dense rank-4 float32 array in (batch, channel, height, width) order with a
/// contiguous payload. Value-semantic; all layer ops produce fresh tensors.
struct Tensor {
  int batch = 0;
  int channels = 0;
  int height = 0;
  int width = 0;
  std::vector<float> data;

  Tensor() = default;

  Tensor(int n, int c, int h, int w)
      : batch(n), channels(c), height(h), width(w),
        data(static_cast<std::size_t>(n) * static_cast<std::size_t>(c) *
             static_cast<std::size_t>(h) * static_cast<std::size_t>(w)) {
    if (n < 0 || c < 0 || h < 0 || w < 0) throw ShapeError("tensor dims must be non-negative");
  }

  std::size_t size() const { return data.size(); }

  std::size_t index(int n, int c, int y, int x) const {
    return ((static_cast<std::size_t>(n) * static_cast<std::size_t>(channels) +
             static_cast<std::size_t>(c)) *
                static_cast<std::size_t>(height) +
            static_cast<std::size_t>(y)) *
               static_cast<std::size_t>(width) +
           static_cast<std::size_t>(x);
  }

  float& at(int n, int c, int y, int x) { return data[index(n, c, y, x)]; }
  float at(int n, int c, int y, int x) const { return data[index(n, c, y, x)]; }

  bool same_shape(const Tensor& other) const {
    return batch == other.batch && channels == other.channels && height == other.height &&
           width == other.width;
  }

  std::string shape_string() const {
    return std::to_string(batch) + "x" + std::to_string(channels) + "x" + std::to_string(height) +
           "x" + std::to_string(width);
  }
};

}  // namespace detkit
