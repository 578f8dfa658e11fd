#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "detkit/box.hpp"
#include "detkit/error.hpp"

namespace detkit {

/// A scored, class-labeled box produced by a detector.
struct Detection {
  std::string image_id;
  int class_id = 0;
  double confidence = 0.0;
  BoundingBox box;
};

/// A human-annotated class-labeled box.
struct GroundTruthObject {
  std::string image_id;
  int class_id = 0;
  BoundingBox box;
};

/// Ordered class names with a contiguous index <-> name bijection.
class ClassMap {
 public:
  ClassMap() = default;

  explicit ClassMap(std::vector<std::string> names) : names_(std::move(names)) {
    for (std::size_t i = 0; i < names_.size(); ++i) {
      if (names_[i].empty()) throw ArgumentError("class names must be non-empty");
      for (std::size_t j = i + 1; j < names_.size(); ++j) {
        if (names_[i] == names_[j]) throw ArgumentError("duplicate class name: " + names_[i]);
      }
    }
  }

  /// The two-class apple-grading convention used throughout the docs.
  static ClassMap default_apples() {
    return ClassMap({"healthy-apple", "apple-with-defect"});
  }

  /// Placeholder names class-0..class-(n-1) for models without a names file.
  static ClassMap numbered(int count) {
    std::vector<std::string> names;
    names.reserve(static_cast<std::size_t>(count));
    for (int i = 0; i < count; ++i) names.push_back("class-" + std::to_string(i));
    return ClassMap(std::move(names));
  }

  int size() const { return static_cast<int>(names_.size()); }
  bool contains(int class_id) const { return class_id >= 0 && class_id < size(); }

  const std::string& name(int class_id) const {
    if (!contains(class_id)) throw ArgumentError("class id out of range: " + std::to_string(class_id));
    return names_[static_cast<std::size_t>(class_id)];
  }

  const std::vector<std::string>& names() const { return names_; }

 private:
  std::vector<std::string> names_;
};

}  // namespace detkit
