#include "detkit/io/report.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "detkit/error.hpp"

namespace detkit::io {

namespace {

std::string fixed4(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.4f", v);
  return buf;
}

std::string ap_cell(const APResult& r) { return r.applicable ? fixed4(r.ap) : "n/a"; }

std::string pad_left(const std::string& s, std::size_t width) {
  return s.size() >= width ? s : std::string(width - s.size(), ' ') + s;
}

std::string pad_right(const std::string& s, std::size_t width) {
  return s.size() >= width ? s : s + std::string(width - s.size(), ' ');
}

std::size_t name_column_width(const std::vector<std::string>& names) {
  std::size_t w = 8;
  for (const std::string& n : names) w = std::max(w, n.size());
  return w + 2;
}

std::string threshold_label(const char* prefix, double t) {
  // 0.3 -> "AP@0.3IOU", 0.45 -> "AP@0.45IOU"
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%g", t);
  return std::string(prefix) + "@" + buf + "IOU";
}

nlohmann::json report_to_json(const EvalReport& report) {
  nlohmann::json j;
  j["mode"] = to_string(report.mode);
  j["classes"] = report.classes.names();
  j["iou_thresholds"] = report.thresholds;
  nlohmann::json results = nlohmann::json::array();
  for (std::size_t ti = 0; ti < report.thresholds.size(); ++ti) {
    for (const APResult& r : report.per_threshold[ti]) {
      nlohmann::json row;
      row["class"] = report.classes.name(r.class_id);
      row["iou_threshold"] = r.iou_threshold;
      row["ap"] = r.ap;
      row["applicable"] = r.applicable;
      row["tp"] = r.tp;
      row["fp"] = r.fp;
      row["fn"] = r.fn;
      row["total_gt"] = r.total_gt;
      results.push_back(std::move(row));
    }
  }
  j["results"] = std::move(results);
  nlohmann::json maps = nlohmann::json::array();
  for (std::size_t ti = 0; ti < report.thresholds.size(); ++ti) {
    maps.push_back({{"iou_threshold", report.thresholds[ti]}, {"map", report.map[ti]}});
  }
  j["map"] = std::move(maps);
  return j;
}

}  // namespace

std::string format_report_text(const EvalReport& report) {
  std::ostringstream out;
  const std::size_t name_w = name_column_width(report.classes.names());
  const std::size_t cell_w = 12;

  out << "Average Precision (AP) per class\n\n";
  out << pad_right("CLASS", name_w) << pad_left("GT", 8);
  for (double t : report.thresholds) out << pad_left(threshold_label("AP", t), cell_w);
  out << "\n";
  for (int c = 0; c < report.classes.size(); ++c) {
    out << pad_right(report.classes.name(c), name_w)
        << pad_left(std::to_string(report.result(0, c).total_gt), 8);
    for (std::size_t ti = 0; ti < report.thresholds.size(); ++ti) {
      out << pad_left(ap_cell(report.result(ti, c)), cell_w);
    }
    out << "\n";
  }

  out << "\nCounts tp/fp/fn per class\n\n";
  out << pad_right("CLASS", name_w);
  for (double t : report.thresholds) out << pad_left(threshold_label("", t).substr(1), 18);
  out << "\n";
  for (int c = 0; c < report.classes.size(); ++c) {
    out << pad_right(report.classes.name(c), name_w);
    for (std::size_t ti = 0; ti < report.thresholds.size(); ++ti) {
      const APResult& r = report.result(ti, c);
      const std::string cell = r.applicable
                                   ? std::to_string(r.tp) + "/" + std::to_string(r.fp) + "/" +
                                         std::to_string(r.fn)
                                   : std::string("n/a");
      out << pad_left(cell, 18);
    }
    out << "\n";
  }

  out << "\nMean Average Precision (mAP)\n\n";
  for (double t : report.thresholds) out << pad_left(threshold_label("mAP", t), 14);
  out << "\n";
  for (std::size_t ti = 0; ti < report.thresholds.size(); ++ti) {
    out << pad_left(fixed4(report.map[ti]), 14);
  }
  out << "\n";
  return out.str();
}

std::string format_report_json(const EvalReport& report) {
  return report_to_json(report).dump(2) + "\n";
}

std::string format_compare_text(const std::vector<NamedReport>& reports) {
  if (reports.empty()) throw ArgumentError("compare needs at least one report");
  const EvalReport& first = reports.front().report;

  std::vector<std::string> names;
  names.reserve(reports.size());
  for (const NamedReport& r : reports) names.push_back(r.name);
  const std::size_t name_w = name_column_width(names);
  const std::size_t cell_w = 12;

  std::ostringstream out;
  for (int c = 0; c < first.classes.size(); ++c) {
    out << "Average Precision (AP), " << first.classes.name(c) << "\n\n";
    out << pad_right("DETECTOR", name_w);
    for (double t : first.thresholds) out << pad_left(threshold_label("AP", t), cell_w);
    out << "\n";
    for (const NamedReport& nr : reports) {
      out << pad_right(nr.name, name_w);
      for (std::size_t ti = 0; ti < first.thresholds.size(); ++ti) {
        out << pad_left(ap_cell(nr.report.result(ti, c)), cell_w);
      }
      out << "\n";
    }
    out << "\n";
  }

  out << "Mean Average Precision (mAP)\n\n";
  out << pad_right("DETECTOR", name_w);
  for (double t : first.thresholds) out << pad_left(threshold_label("mAP", t), 14);
  out << "\n";
  for (const NamedReport& nr : reports) {
    out << pad_right(nr.name, name_w);
    for (std::size_t ti = 0; ti < first.thresholds.size(); ++ti) {
      out << pad_left(fixed4(nr.report.map[ti]), 14);
    }
    out << "\n";
  }
  return out.str();
}

std::string format_compare_json(const std::vector<NamedReport>& reports) {
  nlohmann::json j;
  j["detectors"] = nlohmann::json::array();
  for (const NamedReport& nr : reports) {
    nlohmann::json entry = report_to_json(nr.report);
    entry["name"] = nr.name;
    j["detectors"].push_back(std::move(entry));
  }
  return j.dump(2) + "\n";
}

void write_text_file(const std::string& content, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot open for writing: " + path);
  out << content;
  if (!out) throw DataError("write failed: " + path);
}

}  // namespace detkit::io
