#pragma once

// Straight-line reference implementation of the detection scoring pipeline,
// written independently of the library: its own box overlap, its own explicit
// sort, its own O(n^2) precision-envelope scan. Used as the equivalence
// oracle for randomized evaluation tests.

#include <algorithm>
#include <cstddef>
#include <map>
#include <string>
#include <tuple>
#include <vector>

namespace refeval {

struct Box {
  double x0 = 0, y0 = 0, x1 = 0, y1 = 0;
};

struct Det {
  std::string image;
  int cls = 0;
  double conf = 0;
  Box box;
};

struct Gt {
  std::string image;
  int cls = 0;
  Box box;
};

inline double interval_overlap(double a0, double a1, double b0, double b1) {
  const double lo = a0 > b0 ? a0 : b0;
  const double hi = a1 < b1 ? a1 : b1;
  return hi > lo ? hi - lo : 0.0;
}

inline double overlap_ratio(const Box& a, const Box& b) {
  const double inter =
      interval_overlap(a.x0, a.x1, b.x0, b.x1) * interval_overlap(a.y0, a.y1, b.y0, b.y1);
  const double area_a = (a.x1 - a.x0) * (a.y1 - a.y0);
  const double area_b = (b.x1 - b.x0) * (b.y1 - b.y0);
  const double uni = area_a + area_b - inter;
  return uni > 0.0 ? inter / uni : 0.0;
}

struct ClassOutcome {
  double ap = 0.0;
  std::size_t tp = 0;
  std::size_t fp = 0;
  std::size_t fn = 0;
  std::size_t total_gt = 0;
};

/// Scores one class at one threshold. `dets`/`gts` are the class's records in
/// original input order.
inline ClassOutcome score_class(std::vector<Det> dets, const std::vector<Gt>& gts,
                                double threshold, bool eleven_point) {
  ClassOutcome outcome;
  outcome.total_gt = gts.size();

  // Explicit ranking: confidence descending, original position ascending.
  std::vector<std::size_t> order(dets.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return std::make_tuple(-dets[a].conf, a) < std::make_tuple(-dets[b].conf, b);
  });

  std::map<std::string, std::vector<std::size_t>> gt_of_image;
  for (std::size_t g = 0; g < gts.size(); ++g) gt_of_image[gts[g].image].push_back(g);
  std::vector<char> taken(gts.size(), 0);

  std::vector<char> verdict;  // 1 = tp
  verdict.reserve(dets.size());
  for (std::size_t rank = 0; rank < order.size(); ++rank) {
    const Det& det = dets[order[rank]];
    double best = 0.0;
    std::size_t best_g = gts.size();
    auto it = gt_of_image.find(det.image);
    if (it != gt_of_image.end()) {
      for (std::size_t g : it->second) {
        if (taken[g]) continue;
        const double o = overlap_ratio(det.box, gts[g].box);
        if (o > best) {
          best = o;
          best_g = g;
        }
      }
    }
    if (best_g < gts.size() && best >= threshold) {
      taken[best_g] = 1;
      verdict.push_back(1);
    } else {
      verdict.push_back(0);
    }
  }

  std::vector<double> precision;
  std::vector<double> recall;
  std::size_t tp = 0;
  for (std::size_t k = 0; k < verdict.size(); ++k) {
    tp += verdict[k];
    precision.push_back(static_cast<double>(tp) / static_cast<double>(k + 1));
    recall.push_back(gts.empty() ? 0.0 : static_cast<double>(tp) / static_cast<double>(gts.size()));
  }
  outcome.tp = tp;
  outcome.fp = verdict.size() - tp;
  std::size_t matched = 0;
  for (char t : taken) matched += t;
  outcome.fn = gts.size() - matched;

  // Quadratic envelope scan: p_env(r) = max precision over points at recall >= r.
  auto envelope_at = [&](double r) {
    double best = 0.0;
    for (std::size_t j = 0; j < precision.size(); ++j) {
      if (recall[j] + 1e-12 >= r && precision[j] > best) best = precision[j];
    }
    return best;
  };

  if (eleven_point) {
    double sum = 0.0;
    for (int s = 0; s <= 10; ++s) sum += envelope_at(s / 10.0);
    outcome.ap = sum / 11.0;
  } else {
    double ap = 0.0;
    double prev = 0.0;
    for (std::size_t k = 0; k < recall.size(); ++k) {
      if (recall[k] > prev) {
        ap += (recall[k] - prev) * envelope_at(recall[k]);
        prev = recall[k];
      }
    }
    outcome.ap = ap;
  }
  return outcome;
}

struct Summary {
  // [threshold][class]; classes with neither GT nor detections carry ap < 0.
  std::vector<std::vector<ClassOutcome>> grid;
  std::vector<double> map;
};

inline Summary score_dataset(const std::vector<Det>& dets, const std::vector<Gt>& gts,
                             int num_classes, const std::vector<double>& thresholds,
                             bool eleven_point) {
  Summary summary;
  summary.grid.resize(thresholds.size());
  for (std::size_t ti = 0; ti < thresholds.size(); ++ti) {
    double sum = 0.0;
    int counted = 0;
    for (int c = 0; c < num_classes; ++c) {
      std::vector<Det> class_dets;
      std::vector<Gt> class_gts;
      for (const Det& d : dets) {
        if (d.cls == c) class_dets.push_back(d);
      }
      for (const Gt& g : gts) {
        if (g.cls == c) class_gts.push_back(g);
      }
      ClassOutcome outcome;
      if (class_dets.empty() && class_gts.empty()) {
        outcome.ap = -1.0;  // not applicable
      } else {
        outcome = score_class(class_dets, class_gts, thresholds[ti], eleven_point);
        sum += outcome.ap;
        ++counted;
      }
      summary.grid[ti].push_back(outcome);
    }
    summary.map.push_back(counted == 0 ? 0.0 : sum / counted);
  }
  return summary;
}

}  // namespace refeval
