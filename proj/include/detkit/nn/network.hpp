#pragma once

#include <vector>

#include "detkit/darknet/config.hpp"
#include "detkit/darknet/weights.hpp"
#include "detkit/nn/ops.hpp"
#include "detkit/tensor.hpp"

namespace detkit::nn {

/// Raw output of one yolo head: the pre-decode feature map plus the grid dims
/// and anchor mask needed to decode it.
struct HeadOutput {
  Tensor raw;                                     // 1 x mask*(classes+5) x gh x gw
  int layer_index = 0;
  int grid_h = 0;
  int grid_w = 0;
  std::vector<std::pair<double, double>> anchors; // the masked subset, in net pixels
  int classes = 0;
};

enum class BatchNormMode { folded, two_step };

/// An executable network: parsed layer graph plus loaded parameters, with
/// batch-norm folded into effective kernels by default. Immutable after
/// construction and shareable across concurrent forward() calls; every call
/// owns its own scratch buffers.
class CompiledNetwork {
 public:
  static CompiledNetwork compile(const darknet::NetworkConfig& config,
                                 const darknet::WeightStore& weights,
                                 BatchNormMode mode = BatchNormMode::folded);

  /// Runs the graph on a batch-1 input matching the [net] dims (or any dims
  /// compatible with the layer stack) and returns one raw tensor per yolo
  /// layer, in layer order. Any non-finite layer output raises ModelError
  /// naming the layer.
  std::vector<HeadOutput> forward(const Tensor& input, ConvPath path = ConvPath::gemm) const;

  const darknet::NetworkConfig& config() const { return config_; }

 private:
  struct ConvParams {
    Tensor kernel;
    std::vector<float> bias;
    // two_step mode keeps the raw statistics instead of folding them
    bool batch_normalize = false;
    std::vector<float> beta, gamma, mean, variance;
  };

  darknet::NetworkConfig config_;
  std::vector<ConvParams> conv_params_;  // indexed by conv order
  std::vector<int> conv_index_of_layer_; // layer index -> conv order, -1 otherwise
  std::vector<int> last_use_;            // layer index -> last layer that reads it
  BatchNormMode mode_ = BatchNormMode::folded;
};

/// Fills every convolutional block with Xavier-uniform values, for shape and
/// timing runs when no trained weight file is available.
darknet::WeightStore random_weights(const darknet::NetworkConfig& config, unsigned seed);

}  // namespace detkit::nn
