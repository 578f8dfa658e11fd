#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "detkit/types.hpp"

namespace detkit::io {

/// One image/annotation pair. The image id is the image file stem and must be
/// unique across the manifest.
struct ManifestEntry {
  std::string image_id;
  std::filesystem::path image_path;
  std::filesystem::path annotation_path;
};

struct DatasetManifest {
  std::vector<ManifestEntry> entries;
};

/// Builds a manifest from either a directory (every PNG/JPEG paired with the
/// same-stem .txt, sorted by name) or an explicit listing file with lines
/// `<image-path> [annotation-path]` resolved relative to the listing. Every
/// referenced file must exist.
DatasetManifest load_manifest(const std::filesystem::path& path);

/// Loads YOLO-style annotations: one `.txt` per image with lines
/// `class_id cx cy w h`, all normalized to [0,1]; boxes are converted to
/// pixel-corner form using the actual image dims and clipped to the image.
std::vector<GroundTruthObject> load_ground_truth(const DatasetManifest& manifest,
                                                 const ClassMap& classes);

/// Line-delimited detection interchange:
/// `image_id class_id confidence x_min y_min x_max y_max`.
/// Confidence outside [0,1] is rejected (not clamped) with the line number.
std::vector<Detection> load_detections(const std::string& path);

void write_detections(const std::vector<Detection>& detections, const std::string& path);

std::string format_detections(const std::vector<Detection>& detections);

/// Class names, one per line; '#' comments and blank lines ignored.
ClassMap load_class_names(const std::string& path);

}  // namespace detkit::io
