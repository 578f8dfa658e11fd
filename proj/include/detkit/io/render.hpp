#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "detkit/io/image.hpp"
#include "detkit/types.hpp"

namespace detkit::io {

/// Fixed per-class palette; cycles for class ids beyond the table.
std::array<std::uint8_t, 3> class_color(int class_id);

/// 1-pixel rectangle outline, clipped to the image.
void draw_box_outline(ImageU8& image, const BoundingBox& box,
                      const std::array<std::uint8_t, 3>& color);

/// 5x7 bitmap text (rendered uppercase), clipped to the image.
void draw_text(ImageU8& image, int x, int y, const std::string& text,
               const std::array<std::uint8_t, 3>& color);

/// Pixel width of a rendered string.
int text_width(const std::string& text);

/// Copies the image and draws every detection: class-colored outline plus a
/// "name: confidence" label (2 decimal places) on a filled bar. Deterministic
/// pixels for fixed inputs; zero detections yield an identical copy.
ImageU8 render_annotated(const ImageU8& image, const std::vector<Detection>& detections,
                         const ClassMap& classes);

}  // namespace detkit::io
