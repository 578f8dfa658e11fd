#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "detkit/darknet/config.hpp"

namespace detkit::darknet {

/// Parameter block of one convolutional layer as laid out in a .weights file.
/// With batch_normalize the per-channel vectors are (beta, gamma, mean,
/// variance); otherwise only `biases` is populated. Kernels are stored
/// [out_c][in_c][kh][kw].
struct ConvWeights {
  int layer_index = 0;
  int in_channels = 0;
  bool batch_normalize = false;
  std::vector<float> biases;    // plain bias, or batch-norm beta
  std::vector<float> scales;    // batch-norm gamma
  std::vector<float> mean;      // batch-norm running mean
  std::vector<float> variance;  // batch-norm running variance (>= 0)
  std::vector<float> kernel;
};

struct WeightStore {
  int32_t major = 0;
  int32_t minor = 0;
  int32_t revision = 0;
  uint64_t seen = 0;
  std::vector<ConvWeights> conv_layers;  // in layer order
  std::size_t payload_floats = 0;        // floats consumed after the header

  const ConvWeights& for_layer(int layer_index) const;
};

/// Loads a Darknet .weights byte stream against a parsed config. The stream is
/// little-endian: three int32 (major, minor, revision), a "seen" counter
/// (64-bit when major*10+minor >= 2, else 32-bit), then raw float32 payload.
/// Truncation, trailing bytes and unsupported versions raise ModelError naming
/// the layer where consumption diverged.
WeightStore load_weights(const std::vector<std::uint8_t>& bytes, const NetworkConfig& config,
                         const std::string& source_name = "<weights>");

WeightStore load_weights_file(const std::string& path, const NetworkConfig& config);

}  // namespace detkit::darknet
