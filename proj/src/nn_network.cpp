#include "detkit/nn/network.hpp"

#include <cmath>
#include <optional>
#include <random>

namespace detkit::nn {

using darknet::LayerKind;
using darknet::LayerSpec;

namespace {

Activation to_op_activation(darknet::Activation a) {
  return a == darknet::Activation::leaky ? Activation::leaky : Activation::linear;
}

}  // namespace

CompiledNetwork CompiledNetwork::compile(const darknet::NetworkConfig& config,
                                         const darknet::WeightStore& weights,
                                         BatchNormMode mode) {
  CompiledNetwork net;
  net.config_ = config;
  net.mode_ = mode;
  net.conv_index_of_layer_.assign(config.layers.size(), -1);

  int in_c = config.channels;
  for (std::size_t i = 0; i < config.layers.size(); ++i) {
    const LayerSpec& layer = config.layers[i];
    if (layer.kind == LayerKind::convolutional) {
      const darknet::ConvWeights& w = weights.for_layer(static_cast<int>(i));
      if (w.in_channels != in_c) {
        throw ShapeError("layer " + std::to_string(i) + ": weights were loaded for " +
                         std::to_string(w.in_channels) + " input channels, graph provides " +
                         std::to_string(in_c));
      }
      ConvParams params;
      params.kernel = Tensor(layer.filters, in_c, layer.size, layer.size);
      params.kernel.data = w.kernel;

      if (layer.batch_normalize && mode == BatchNormMode::folded) {
        auto [folded_kernel, folded_bias] =
            fold_batchnorm(params.kernel, w.biases, w.scales, w.mean, w.variance);
        params.kernel = std::move(folded_kernel);
        params.bias = std::move(folded_bias);
      } else if (layer.batch_normalize) {
        params.batch_normalize = true;
        params.beta = w.biases;
        params.gamma = w.scales;
        params.mean = w.mean;
        params.variance = w.variance;
        params.bias.assign(static_cast<std::size_t>(layer.filters), 0.0f);
      } else {
        params.bias = w.biases;
      }
      net.conv_index_of_layer_[i] = static_cast<int>(net.conv_params_.size());
      net.conv_params_.push_back(std::move(params));
    }
    in_c = layer.out_channels;
  }

  // Retention plan: a layer's output is freed right after the last layer that
  // reads it (the next layer in sequence, any route/shortcut consumer, or the
  // end of the pass for yolo heads).
  net.last_use_.assign(config.layers.size(), -1);
  const int end = static_cast<int>(config.layers.size());
  for (std::size_t i = 0; i < config.layers.size(); ++i) {
    const LayerSpec& layer = config.layers[i];
    if (layer.kind != LayerKind::route && i > 0) {
      // Sequential input: layer i reads layer i-1. Routes read only their
      // referenced layers.
      net.last_use_[i - 1] = std::max(net.last_use_[i - 1], static_cast<int>(i));
    }
    for (int ref : layer.input_layers) {
      net.last_use_[static_cast<std::size_t>(ref)] =
          std::max(net.last_use_[static_cast<std::size_t>(ref)], static_cast<int>(i));
    }
    if (layer.kind == LayerKind::yolo) net.last_use_[i] = end;
  }
  return net;
}

std::vector<HeadOutput> CompiledNetwork::forward(const Tensor& input, ConvPath path) const {
  if (input.channels != config_.channels) {
    throw ShapeError("network expects " + std::to_string(config_.channels) +
                     " input channels, got " + std::to_string(input.channels));
  }
  if (!all_finite(input)) throw ModelError("network input contains non-finite values");

  std::vector<std::optional<Tensor>> outputs(config_.layers.size());
  std::vector<HeadOutput> heads;

  const Tensor* previous = &input;
  for (std::size_t i = 0; i < config_.layers.size(); ++i) {
    const LayerSpec& layer = config_.layers[i];
    Tensor out;
    switch (layer.kind) {
      case LayerKind::convolutional: {
        const ConvParams& p = conv_params_[static_cast<std::size_t>(conv_index_of_layer_[i])];
        if (p.batch_normalize) {
          out = conv2d(*previous, p.kernel, p.bias, layer.stride, layer.padding,
                       Activation::linear, path);
          batchnorm_inplace(out, p.beta, p.gamma, p.mean, p.variance);
          if (to_op_activation(layer.activation) == Activation::leaky) {
            for (float& v : out.data) v = apply_activation(v, Activation::leaky);
          }
        } else {
          out = conv2d(*previous, p.kernel, p.bias, layer.stride, layer.padding,
                       to_op_activation(layer.activation), path);
        }
        break;
      }
      case LayerKind::maxpool:
        out = maxpool(*previous, layer.size, layer.stride, layer.padding);
        break;
      case LayerKind::shortcut: {
        const Tensor& other = *outputs[static_cast<std::size_t>(layer.input_layers[0])];
        out = shortcut_add(*previous, other, to_op_activation(layer.activation));
        break;
      }
      case LayerKind::route: {
        std::vector<const Tensor*> inputs;
        inputs.reserve(layer.input_layers.size());
        for (int ref : layer.input_layers) {
          inputs.push_back(&*outputs[static_cast<std::size_t>(ref)]);
        }
        out = route_concat(inputs);
        break;
      }
      case LayerKind::upsample:
        out = upsample_nearest(*previous, layer.stride);
        break;
      case LayerKind::yolo: {
        out = *previous;  // pass-through; the raw map is the head output
        HeadOutput head;
        head.raw = out;
        head.layer_index = static_cast<int>(i);
        head.grid_h = out.height;
        head.grid_w = out.width;
        head.classes = layer.classes;
        for (int m : layer.mask) {
          head.anchors.push_back(config_.anchors[static_cast<std::size_t>(m)]);
        }
        heads.push_back(std::move(head));
        break;
      }
      case LayerKind::net:
        throw ModelError("unexpected [net] section in the layer list");
    }

    if (!all_finite(out)) {
      throw ModelError("layer " + std::to_string(i) + " [" +
                       darknet::to_string(layer.kind) + "] produced non-finite values");
    }

    outputs[i] = std::move(out);
    previous = &*outputs[i];

    // Drop cached outputs nobody later reads.
    for (std::size_t j = 0; j < i; ++j) {
      if (outputs[j] && last_use_[j] <= static_cast<int>(i)) outputs[j].reset();
    }
  }
  return heads;
}

darknet::WeightStore random_weights(const darknet::NetworkConfig& config, unsigned seed) {
  std::mt19937_64 rng(seed);
  darknet::WeightStore store;
  store.major = 0;
  store.minor = 2;
  store.revision = 0;
  store.seen = 0;

  int in_c = config.channels;
  for (std::size_t i = 0; i < config.layers.size(); ++i) {
    const LayerSpec& layer = config.layers[i];
    if (layer.kind == LayerKind::convolutional) {
      darknet::ConvWeights w;
      w.layer_index = static_cast<int>(i);
      w.in_channels = in_c;
      w.batch_normalize = layer.batch_normalize;
      const std::size_t n = static_cast<std::size_t>(layer.filters);
      const std::size_t fan_in = static_cast<std::size_t>(in_c) *
                                 static_cast<std::size_t>(layer.size) *
                                 static_cast<std::size_t>(layer.size);
      const float bound = std::sqrt(3.0f / static_cast<float>(fan_in));
      std::uniform_real_distribution<float> dist(-bound, bound);

      w.biases.assign(n, 0.0f);
      if (layer.batch_normalize) {
        w.scales.assign(n, 1.0f);
        w.mean.assign(n, 0.0f);
        w.variance.assign(n, 1.0f);
      }
      w.kernel.resize(n * fan_in);
      for (float& v : w.kernel) v = dist(rng);
      store.payload_floats += w.biases.size() + w.scales.size() + w.mean.size() +
                              w.variance.size() + w.kernel.size();
      store.conv_layers.push_back(std::move(w));
    }
    in_c = layer.out_channels;
  }
  return store;
}

}  // namespace detkit::nn
