#include "detkit/io/dataset.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include "detkit/error.hpp"
#include "detkit/io/image.hpp"

namespace fs = std::filesystem;

namespace detkit::io {

namespace {

std::string trim(const std::string& s) {
  std::size_t b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  std::size_t e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

std::vector<std::string> split_ws(const std::string& line) {
  std::vector<std::string> out;
  std::istringstream in(line);
  std::string token;
  while (in >> token) out.push_back(token);
  return out;
}

double parse_double_token(const std::string& token, const std::string& path, int line) {
  char* end = nullptr;
  const double v = std::strtod(token.c_str(), &end);
  if (end != token.c_str() + token.size() || token.empty()) {
    throw DataError(at_line(path, line, "expected a number, got '" + token + "'"));
  }
  return v;
}

long parse_int_token(const std::string& token, const std::string& path, int line) {
  long v = 0;
  auto [ptr, ec] = std::from_chars(token.data(), token.data() + token.size(), v);
  if (ec != std::errc() || ptr != token.data() + token.size()) {
    throw DataError(at_line(path, line, "expected an integer, got '" + token + "'"));
  }
  return v;
}

bool is_image_file(const fs::path& p) {
  std::string ext = p.extension().string();
  std::transform(ext.begin(), ext.end(), ext.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return ext == ".png" || ext == ".jpg" || ext == ".jpeg";
}

std::string format_shortest(double v) {
  std::array<char, 32> buf{};
  auto [ptr, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), v);
  return std::string(buf.data(), ptr);
}

void add_entry(DatasetManifest& manifest, std::set<std::string>& seen, const fs::path& image,
               const fs::path& annotation, const std::string& context) {
  if (!fs::exists(image)) throw DataError(context + ": image does not exist: " + image.string());
  if (!fs::exists(annotation)) {
    throw DataError(context + ": annotation does not exist: " + annotation.string());
  }
  ManifestEntry entry;
  entry.image_id = image.stem().string();
  entry.image_path = image;
  entry.annotation_path = annotation;
  if (!seen.insert(entry.image_id).second) {
    throw DataError(context + ": duplicate image id '" + entry.image_id + "'");
  }
  manifest.entries.push_back(std::move(entry));
}

}  // namespace

DatasetManifest load_manifest(const fs::path& path) {
  DatasetManifest manifest;
  std::set<std::string> seen;

  if (fs::is_directory(path)) {
    std::vector<fs::path> images;
    for (const auto& entry : fs::directory_iterator(path)) {
      if (entry.is_regular_file() && is_image_file(entry.path())) images.push_back(entry.path());
    }
    std::sort(images.begin(), images.end());
    for (const fs::path& image : images) {
      fs::path annotation = image;
      annotation.replace_extension(".txt");
      add_entry(manifest, seen, image, annotation, path.string());
    }
    if (manifest.entries.empty()) {
      throw DataError("no PNG/JPEG images found in directory: " + path.string());
    }
    return manifest;
  }

  std::ifstream in(path);
  if (!in) throw DataError("cannot open manifest: " + path.string());
  const fs::path base = path.parent_path();
  std::string raw;
  int line_no = 0;
  while (std::getline(in, raw)) {
    ++line_no;
    const std::string line = trim(raw);
    if (line.empty() || line[0] == '#') continue;
    const std::vector<std::string> tokens = split_ws(line);
    if (tokens.size() > 2) {
      throw DataError(at_line(path.string(), line_no,
                              "expected '<image> [annotation]', got " +
                                  std::to_string(tokens.size()) + " fields"));
    }
    fs::path image = base / tokens[0];
    fs::path annotation;
    if (tokens.size() == 2) {
      annotation = base / tokens[1];
    } else {
      annotation = image;
      annotation.replace_extension(".txt");
    }
    add_entry(manifest, seen, image, annotation, at_line(path.string(), line_no, "manifest"));
  }
  if (manifest.entries.empty()) throw DataError("manifest lists no images: " + path.string());
  return manifest;
}

std::vector<GroundTruthObject> load_ground_truth(const DatasetManifest& manifest,
                                                 const ClassMap& classes) {
  std::vector<GroundTruthObject> out;
  for (const ManifestEntry& entry : manifest.entries) {
    const auto [img_w, img_h] = read_image_size(entry.image_path.string());
    std::ifstream in(entry.annotation_path);
    if (!in) throw DataError("cannot open annotation: " + entry.annotation_path.string());
    const std::string path = entry.annotation_path.string();
    std::string raw;
    int line_no = 0;
    while (std::getline(in, raw)) {
      ++line_no;
      const std::string line = trim(raw);
      if (line.empty() || line[0] == '#') continue;
      const std::vector<std::string> tokens = split_ws(line);
      if (tokens.size() != 5) {
        throw DataError(at_line(path, line_no,
                                "expected 'class_id cx cy w h', got " +
                                    std::to_string(tokens.size()) + " fields"));
      }
      const long class_id = parse_int_token(tokens[0], path, line_no);
      if (!classes.contains(static_cast<int>(class_id))) {
        throw DataError(at_line(path, line_no,
                                "class id " + std::to_string(class_id) +
                                    " is outside the class map (size " +
                                    std::to_string(classes.size()) + ")"));
      }
      CenterSize c;
      c.cx = parse_double_token(tokens[1], path, line_no);
      c.cy = parse_double_token(tokens[2], path, line_no);
      c.w = parse_double_token(tokens[3], path, line_no);
      c.h = parse_double_token(tokens[4], path, line_no);
      for (double v : {c.cx, c.cy, c.w, c.h}) {
        if (!(v >= 0.0) || !(v <= 1.0)) {
          throw DataError(at_line(path, line_no, "normalized value out of [0,1]: " +
                                  format_shortest(v)));
        }
      }
      GroundTruthObject gt;
      gt.image_id = entry.image_id;
      gt.class_id = static_cast<int>(class_id);
      gt.box = clamp_to_image(box_from_normalized(c, img_w, img_h), img_w, img_h);
      out.push_back(std::move(gt));
    }
  }
  return out;
}

std::vector<Detection> load_detections(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open detections file: " + path);
  std::vector<Detection> out;
  std::string raw;
  int line_no = 0;
  while (std::getline(in, raw)) {
    ++line_no;
    const std::string line = trim(raw);
    if (line.empty() || line[0] == '#') continue;
    const std::vector<std::string> tokens = split_ws(line);
    if (tokens.size() != 7) {
      throw DataError(at_line(path, line_no,
                              "expected 'image_id class_id confidence x_min y_min x_max y_max', "
                              "got " + std::to_string(tokens.size()) + " fields"));
    }
    Detection det;
    det.image_id = tokens[0];
    det.class_id = static_cast<int>(parse_int_token(tokens[1], path, line_no));
    det.confidence = parse_double_token(tokens[2], path, line_no);
    if (!(det.confidence >= 0.0) || !(det.confidence <= 1.0)) {
      throw DataError(at_line(path, line_no,
                              "confidence " + tokens[2] + " is outside [0,1]"));
    }
    const double x0 = parse_double_token(tokens[3], path, line_no);
    const double y0 = parse_double_token(tokens[4], path, line_no);
    const double x1 = parse_double_token(tokens[5], path, line_no);
    const double y1 = parse_double_token(tokens[6], path, line_no);
    try {
      det.box = BoundingBox(x0, y0, x1, y1);
    } catch (const DataError& e) {
      throw DataError(at_line(path, line_no, e.what()));
    }
    out.push_back(std::move(det));
  }
  return out;
}

std::string format_detections(const std::vector<Detection>& detections) {
  std::ostringstream out;
  for (const Detection& d : detections) {
    out << d.image_id << " " << d.class_id << " " << format_shortest(d.confidence) << " "
        << format_shortest(d.box.x_min()) << " " << format_shortest(d.box.y_min()) << " "
        << format_shortest(d.box.x_max()) << " " << format_shortest(d.box.y_max()) << "\n";
  }
  return out.str();
}

void write_detections(const std::vector<Detection>& detections, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot open for writing: " + path);
  out << format_detections(detections);
  if (!out) throw DataError("write failed: " + path);
}

ClassMap load_class_names(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open names file: " + path);
  std::vector<std::string> names;
  std::string raw;
  while (std::getline(in, raw)) {
    const std::string line = trim(raw);
    if (line.empty() || line[0] == '#') continue;
    names.push_back(line);
  }
  if (names.empty()) throw DataError("names file lists no classes: " + path);
  return ClassMap(std::move(names));
}

}  // namespace detkit::io
