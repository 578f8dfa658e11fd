#pragma once

// Literal replay of the greedy NMS rule for equivalence testing, with its own
// overlap computation and explicit sorting.

#include <algorithm>
#include <tuple>
#include <vector>

namespace refnms {

struct Entry {
  int cls = 0;
  double conf = 0;
  double x0 = 0, y0 = 0, x1 = 0, y1 = 0;
};

inline double overlap_ratio(const Entry& a, const Entry& b) {
  const double ix0 = std::max(a.x0, b.x0);
  const double iy0 = std::max(a.y0, b.y0);
  const double ix1 = std::min(a.x1, b.x1);
  const double iy1 = std::min(a.y1, b.y1);
  const double iw = ix1 - ix0;
  const double ih = iy1 - iy0;
  const double inter = (iw > 0 && ih > 0) ? iw * ih : 0.0;
  const double uni = (a.x1 - a.x0) * (a.y1 - a.y0) + (b.x1 - b.x0) * (b.y1 - b.y0) - inter;
  return uni > 0 ? inter / uni : 0.0;
}

/// Returns the indices (into the input) of surviving detections, in the order
/// they were kept (descending confidence).
inline std::vector<std::size_t> reference_nms(const std::vector<Entry>& dets, double threshold) {
  std::vector<std::size_t> order(dets.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return std::make_tuple(-dets[a].conf, a) < std::make_tuple(-dets[b].conf, b);
  });

  std::vector<char> alive(dets.size(), 1);
  std::vector<std::size_t> kept;
  for (std::size_t rank = 0; rank < order.size(); ++rank) {
    const std::size_t i = order[rank];
    if (!alive[i]) continue;
    kept.push_back(i);
    for (std::size_t r2 = rank + 1; r2 < order.size(); ++r2) {
      const std::size_t j = order[r2];
      if (!alive[j] || dets[j].cls != dets[i].cls) continue;
      if (overlap_ratio(dets[i], dets[j]) > threshold) alive[j] = 0;
    }
  }
  return kept;
}

}  // namespace refnms
