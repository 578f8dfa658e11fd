#pragma once

#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "detkit/error.hpp"

namespace detkit::darknet {

enum class LayerKind { net, convolutional, shortcut, route, upsample, yolo, maxpool };

const char* to_string(LayerKind kind);

enum class Activation { linear, leaky };

/// One parsed cfg section with resolved parameters and a propagated output
/// shape. Fields that do not apply to a kind are left at their defaults.
struct LayerSpec {
  LayerKind kind = LayerKind::net;
  int cfg_line = 0;  // line of the [section] header in the source text

  // convolutional / maxpool
  int filters = 1;
  int size = 1;
  int stride = 1;
  int padding = 0;       // resolved pixel padding (pad=1 means size/2)
  bool pad_flag = false; // whether padding came from the pad shorthand
  bool batch_normalize = false;
  Activation activation = Activation::linear;

  // route / shortcut; already canonicalized to absolute layer indices
  std::vector<int> input_layers;

  // yolo
  std::vector<int> mask;
  int classes = 0;
  int num_anchors = 0;

  // keys we accept but do not act on (e.g. yolo training thresholds), plus
  // unknown keys preserved verbatim; kept for faithful re-printing.
  std::vector<std::pair<std::string, std::string>> passthrough;

  // propagated output shape
  int out_channels = 0;
  int out_height = 0;
  int out_width = 0;

  bool operator==(const LayerSpec&) const = default;
};

/// A validated layer graph: the [net] input dims plus every layer in file
/// order with shapes propagated and references resolved.
struct NetworkConfig {
  int width = 0;
  int height = 0;
  int channels = 0;
  std::vector<LayerSpec> layers;                     // excludes the [net] header
  std::vector<std::pair<double, double>> anchors;    // (w, h) in net input pixels
  int classes = 0;                                   // 0 when no yolo layer exists
  std::vector<std::pair<std::string, std::string>> net_passthrough;
  std::vector<std::string> warnings;                 // unknown-key notes

  std::vector<int> yolo_layers() const;
  bool operator==(const NetworkConfig& other) const;
};

/// Parses Darknet cfg text: `[section]` headers, `key=value` lines, `#`
/// comments. Defaults follow the Darknet convention (stride=1, pad=1 means
/// size/2 padding). Unknown keys are preserved and reported in
/// NetworkConfig::warnings; unknown sections and unresolvable references are
/// hard errors carrying the line number.
NetworkConfig parse_config(const std::string& text, const std::string& source_name = "<config>");

NetworkConfig parse_config_file(const std::string& path);

/// Canonical cfg text for a parsed network. parse(print(parse(text))) is a
/// fixpoint: section order, resolved values and passthrough keys all survive.
std::string print_config(const NetworkConfig& config);

/// Resolves a route/shortcut reference: negative values are relative offsets
/// from `layer_index`, non-negative are absolute. Forward or self references
/// are rejected.
int resolve_reference(int raw, int layer_index);

/// Validates the topology needed to run detection: at least one yolo layer,
/// agreeing class counts, in-range mask indices, and head conv filters equal
/// to mask_size * (classes + 5). Throws ModelError when violated.
void validate_detection_topology(const NetworkConfig& config);

/// Total number of weight-file payload floats the config's convolutional
/// layers consume.
std::size_t expected_weight_floats(const NetworkConfig& config);

}  // namespace detkit::darknet
