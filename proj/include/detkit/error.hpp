#pragma once

#include <stdexcept>
#include <string>

namespace detkit {

/// Failure taxonomy. The CLI maps these onto exit codes:
/// ArgumentError -> 1, DataError -> 2, ModelError (and subclasses) -> 3.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Caller passed an out-of-range or malformed argument (bad threshold, unknown mode).
class ArgumentError : public Error {
 public:
  using Error::Error;
};

/// Input data files (annotations, detections, images) are malformed.
class DataError : public Error {
 public:
  using Error::Error;
};

/// Model files (cfg, weights) are malformed or inference failed.
class ModelError : public Error {
 public:
  using Error::Error;
};

/// Tensor or layer shapes are inconsistent.
class ShapeError : public ModelError {
 public:
  using ModelError::ModelError;
};

/// cfg text could not be parsed; carries the offending line number.
class ParseError : public ModelError {
 public:
  ParseError(const std::string& file, int line, const std::string& what)
      : ModelError(file + ":" + std::to_string(line) + ": " + what), line_(line) {}
  int line() const { return line_; }

 private:
  int line_;
};

/// Formats "path:line: message" for data-file diagnostics.
inline std::string at_line(const std::string& path, int line, const std::string& what) {
  return path + ":" + std::to_string(line) + ": " + what;
}

}  // namespace detkit
