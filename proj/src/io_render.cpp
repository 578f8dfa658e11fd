#include "detkit/io/render.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>

namespace detkit::io {

namespace {

constexpr int kGlyphW = 5;
constexpr int kGlyphH = 7;
constexpr int kGlyphSpacing = 1;
constexpr int kLabelPad = 1;

struct Glyph {
  char ch;
  std::array<std::uint8_t, 7> rows;  // low 5 bits per row, bit 4 = leftmost
};

constexpr Glyph kFont[] = {
    {' ', {0x00, 0x00, 0x00, 0x00, 0x00, 0x00, 0x00}},
    {'A', {0x0E, 0x11, 0x11, 0x1F, 0x11, 0x11, 0x11}},
    {'B', {0x1E, 0x11, 0x11, 0x1E, 0x11, 0x11, 0x1E}},
    {'C', {0x0E, 0x11, 0x10, 0x10, 0x10, 0x11, 0x0E}},
    {'D', {0x1E, 0x11, 0x11, 0x11, 0x11, 0x11, 0x1E}},
    {'E', {0x1F, 0x10, 0x10, 0x1E, 0x10, 0x10, 0x1F}},
    {'F', {0x1F, 0x10, 0x10, 0x1E, 0x10, 0x10, 0x10}},
    {'G', {0x0E, 0x11, 0x10, 0x17, 0x11, 0x11, 0x0F}},
    {'H', {0x11, 0x11, 0x11, 0x1F, 0x11, 0x11, 0x11}},
    {'I', {0x0E, 0x04, 0x04, 0x04, 0x04, 0x04, 0x0E}},
    {'J', {0x07, 0x02, 0x02, 0x02, 0x02, 0x12, 0x0C}},
    {'K', {0x11, 0x12, 0x14, 0x18, 0x14, 0x12, 0x11}},
    {'L', {0x10, 0x10, 0x10, 0x10, 0x10, 0x10, 0x1F}},
    {'M', {0x11, 0x1B, 0x15, 0x15, 0x11, 0x11, 0x11}},
    {'N', {0x11, 0x19, 0x15, 0x13, 0x11, 0x11, 0x11}},
    {'O', {0x0E, 0x11, 0x11, 0x11, 0x11, 0x11, 0x0E}},
    {'P', {0x1E, 0x11, 0x11, 0x1E, 0x10, 0x10, 0x10}},
    {'Q', {0x0E, 0x11, 0x11, 0x11, 0x15, 0x12, 0x0D}},
    {'R', {0x1E, 0x11, 0x11, 0x1E, 0x14, 0x12, 0x11}},
    {'S', {0x0F, 0x10, 0x10, 0x0E, 0x01, 0x01, 0x1E}},
    {'T', {0x1F, 0x04, 0x04, 0x04, 0x04, 0x04, 0x04}},
    {'U', {0x11, 0x11, 0x11, 0x11, 0x11, 0x11, 0x0E}},
    {'V', {0x11, 0x11, 0x11, 0x11, 0x0A, 0x0A, 0x04}},
    {'W', {0x11, 0x11, 0x11, 0x15, 0x15, 0x1B, 0x11}},
    {'X', {0x11, 0x0A, 0x04, 0x04, 0x04, 0x0A, 0x11}},
    {'Y', {0x11, 0x11, 0x0A, 0x04, 0x04, 0x04, 0x04}},
    {'Z', {0x1F, 0x01, 0x02, 0x04, 0x08, 0x10, 0x1F}},
    {'0', {0x0E, 0x11, 0x13, 0x15, 0x19, 0x11, 0x0E}},
    {'1', {0x04, 0x0C, 0x04, 0x04, 0x04, 0x04, 0x0E}},
    {'2', {0x0E, 0x11, 0x01, 0x06, 0x08, 0x10, 0x1F}},
    {'3', {0x1F, 0x02, 0x04, 0x02, 0x01, 0x11, 0x0E}},
    {'4', {0x02, 0x06, 0x0A, 0x12, 0x1F, 0x02, 0x02}},
    {'5', {0x1F, 0x10, 0x1E, 0x01, 0x01, 0x11, 0x0E}},
    {'6', {0x06, 0x08, 0x10, 0x1E, 0x11, 0x11, 0x0E}},
    {'7', {0x1F, 0x01, 0x02, 0x04, 0x08, 0x08, 0x08}},
    {'8', {0x0E, 0x11, 0x11, 0x0E, 0x11, 0x11, 0x0E}},
    {'9', {0x0E, 0x11, 0x11, 0x0F, 0x01, 0x02, 0x0C}},
    {'.', {0x00, 0x00, 0x00, 0x00, 0x00, 0x0C, 0x0C}},
    {':', {0x00, 0x0C, 0x0C, 0x00, 0x0C, 0x0C, 0x00}},
    {'-', {0x00, 0x00, 0x00, 0x1F, 0x00, 0x00, 0x00}},
    {'_', {0x00, 0x00, 0x00, 0x00, 0x00, 0x00, 0x1F}},
    {'%', {0x19, 0x1A, 0x02, 0x04, 0x08, 0x0B, 0x13}},
    {'/', {0x01, 0x01, 0x02, 0x04, 0x08, 0x10, 0x10}},
};

const Glyph& glyph_for(char c) {
  const char upper = static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
  for (const Glyph& g : kFont) {
    if (g.ch == upper) return g;
  }
  static constexpr Glyph unknown{'?', {0x1F, 0x11, 0x11, 0x11, 0x11, 0x11, 0x1F}};
  return unknown;
}

void fill_rect(ImageU8& image, int x0, int y0, int x1, int y1,
               const std::array<std::uint8_t, 3>& color) {
  const int cx0 = std::max(0, x0);
  const int cy0 = std::max(0, y0);
  const int cx1 = std::min(image.width - 1, x1);
  const int cy1 = std::min(image.height - 1, y1);
  for (int y = cy0; y <= cy1; ++y) {
    for (int x = cx0; x <= cx1; ++x) image.set_pixel(x, y, color[0], color[1], color[2]);
  }
}

}  // namespace

std::array<std::uint8_t, 3> class_color(int class_id) {
  static const std::array<std::array<std::uint8_t, 3>, 8> palette = {{
      {60, 200, 120},   // green
      {230, 70, 60},    // red
      {70, 130, 220},   // blue
      {240, 180, 40},   // amber
      {160, 80, 200},   // purple
      {60, 200, 210},   // cyan
      {240, 120, 30},   // orange
      {200, 200, 200},  // gray
  }};
  const int idx = class_id >= 0 ? class_id % static_cast<int>(palette.size()) : 0;
  return palette[static_cast<std::size_t>(idx)];
}

void draw_box_outline(ImageU8& image, const BoundingBox& box,
                      const std::array<std::uint8_t, 3>& color) {
  const int x0 = static_cast<int>(std::lround(box.x_min()));
  const int y0 = static_cast<int>(std::lround(box.y_min()));
  const int x1 = static_cast<int>(std::lround(box.x_max())) - 1;
  const int y1 = static_cast<int>(std::lround(box.y_max())) - 1;
  if (x1 < x0 || y1 < y0) return;
  fill_rect(image, x0, y0, x1, y0, color);
  fill_rect(image, x0, y1, x1, y1, color);
  fill_rect(image, x0, y0, x0, y1, color);
  fill_rect(image, x1, y0, x1, y1, color);
}

int text_width(const std::string& text) {
  if (text.empty()) return 0;
  return static_cast<int>(text.size()) * (kGlyphW + kGlyphSpacing) - kGlyphSpacing;
}

void draw_text(ImageU8& image, int x, int y, const std::string& text,
               const std::array<std::uint8_t, 3>& color) {
  int pen_x = x;
  for (char c : text) {
    const Glyph& g = glyph_for(c);
    for (int row = 0; row < kGlyphH; ++row) {
      const int py = y + row;
      if (py < 0 || py >= image.height) continue;
      for (int col = 0; col < kGlyphW; ++col) {
        if (!(g.rows[static_cast<std::size_t>(row)] & (1 << (kGlyphW - 1 - col)))) continue;
        const int px = pen_x + col;
        if (px < 0 || px >= image.width) continue;
        image.set_pixel(px, py, color[0], color[1], color[2]);
      }
    }
    pen_x += kGlyphW + kGlyphSpacing;
  }
}

ImageU8 render_annotated(const ImageU8& image, const std::vector<Detection>& detections,
                         const ClassMap& classes) {
  ImageU8 out = image;
  const std::array<std::uint8_t, 3> text_color = {255, 255, 255};
  for (const Detection& det : detections) {
    const auto color = class_color(det.class_id);
    draw_box_outline(out, det.box, color);

    char score[16];
    std::snprintf(score, sizeof(score), "%.2f", det.confidence);
    const std::string name =
        classes.contains(det.class_id) ? classes.name(det.class_id)
                                       : "class-" + std::to_string(det.class_id);
    const std::string label = name + ": " + score;

    const int bar_h = kGlyphH + 2 * kLabelPad;
    const int bar_w = text_width(label) + 2 * kLabelPad;
    const int x0 = static_cast<int>(std::lround(det.box.x_min()));
    int bar_y = static_cast<int>(std::lround(det.box.y_min())) - bar_h;
    if (bar_y < 0) bar_y = static_cast<int>(std::lround(det.box.y_min()));
    fill_rect(out, x0, bar_y, x0 + bar_w - 1, bar_y + bar_h - 1, color);
    draw_text(out, x0 + kLabelPad, bar_y + kLabelPad, label, text_color);
  }
  return out;
}

}  // namespace detkit::io
