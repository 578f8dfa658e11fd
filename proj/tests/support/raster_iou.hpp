#pragma once

// Brute-force IOU oracle for integer-coordinate boxes inside [0, limit]^2:
// counts unit grid cells covered by each box and by both. Intentionally
// independent of the library geometry code.

namespace testsupport {

struct IntBox {
  int x0, y0, x1, y1;  // canonical: x0 <= x1, y0 <= y1
};

inline bool cell_inside(const IntBox& b, int cx, int cy) {
  return cx >= b.x0 && cx + 1 <= b.x1 && cy >= b.y0 && cy + 1 <= b.y1;
}

inline double raster_iou(const IntBox& a, const IntBox& b, int limit) {
  long long cells_a = 0;
  long long cells_b = 0;
  long long cells_both = 0;
  for (int y = 0; y < limit; ++y) {
    for (int x = 0; x < limit; ++x) {
      const bool in_a = cell_inside(a, x, y);
      const bool in_b = cell_inside(b, x, y);
      cells_a += in_a;
      cells_b += in_b;
      cells_both += in_a && in_b;
    }
  }
  const long long union_cells = cells_a + cells_b - cells_both;
  if (union_cells == 0) return 0.0;
  return static_cast<double>(cells_both) / static_cast<double>(union_cells);
}

}  // namespace testsupport
