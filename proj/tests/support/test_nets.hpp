#pragma once

// Builders for the tiny fixture networks the tests run: a planted two-scale
// detector whose outputs are exactly predictable, a weights serializer for
// round-tripping through the binary format, and synthetic scenes with
// rectangles aligned to the detector's grid.

#include <cstdint>
#include <cstring>
#include <random>
#include <string>
#include <vector>

#include "detkit/darknet/config.hpp"
#include "detkit/darknet/weights.hpp"
#include "detkit/io/image.hpp"
#include "detkit/types.hpp"

namespace testsupport {

/// Two-scale planted detector over 64x64 RGB input. Scale A (grid 8, stride 8)
/// fires on 8x8 red squares as class 0; scale B (grid 16, stride 4) fires on
/// 4x4 green squares as class 1. Box channels are zeroed so decoded boxes sit
/// exactly on grid-aligned squares of anchor size.
inline std::string planted_cfg_text() {
  return R"cfg([net]
width=64
height=64
channels=3

[convolutional]
filters=2
size=2
stride=2
activation=linear

[convolutional]
filters=2
size=2
stride=2
activation=linear

[convolutional]
filters=2
size=2
stride=2
activation=linear

[convolutional]
filters=21
size=1
stride=1
activation=linear

[yolo]
mask = 3,4,5
anchors = 4,4, 4,4, 4,4, 8,8, 8,8, 8,8
classes=2
num=6

[route]
layers = -3

[upsample]
stride=2

[route]
layers = -1, 1

[convolutional]
filters=21
size=1
stride=1
activation=linear

[yolo]
mask = 0,1,2
anchors = 4,4, 4,4, 4,4, 8,8, 8,8, 8,8
classes=2
num=6
)cfg";
}

constexpr float kPlantedGain = 20.0f;   // objectness logit swing
constexpr float kPlantedClassLogit = 8.0f;

inline detkit::darknet::WeightStore planted_weights(const detkit::darknet::NetworkConfig& cfg) {
  using detkit::darknet::ConvWeights;
  detkit::darknet::WeightStore store;
  store.major = 0;
  store.minor = 2;
  store.revision = 0;

  auto blank_conv = [&](int layer, int out_c, int in_c, int k) {
    ConvWeights w;
    w.layer_index = layer;
    w.in_channels = in_c;
    w.batch_normalize = false;
    w.biases.assign(static_cast<std::size_t>(out_c), 0.0f);
    w.kernel.assign(static_cast<std::size_t>(out_c) * in_c * k * k, 0.0f);
    return w;
  };
  auto kernel_at = [](ConvWeights& w, int out_c_total, int in_c, int k, int oc, int ic, int ky,
                      int kx) -> float& {
    (void)out_c_total;
    return w.kernel[((static_cast<std::size_t>(oc) * in_c + ic) * k + ky) * k + kx];
  };

  // Layers 0-2: per-channel 2x2 average pooling expressed as convolution;
  // filter 0 tracks red, filter 1 tracks green.
  {
    ConvWeights w = blank_conv(0, 2, 3, 2);
    for (int f = 0; f < 2; ++f) {
      for (int ky = 0; ky < 2; ++ky) {
        for (int kx = 0; kx < 2; ++kx) kernel_at(w, 2, 3, 2, f, f, ky, kx) = 0.25f;
      }
    }
    store.conv_layers.push_back(std::move(w));
  }
  for (int layer = 1; layer <= 2; ++layer) {
    ConvWeights w = blank_conv(layer, 2, 2, 2);
    for (int f = 0; f < 2; ++f) {
      for (int ky = 0; ky < 2; ++ky) {
        for (int kx = 0; kx < 2; ++kx) kernel_at(w, 2, 2, 2, f, f, ky, kx) = 0.25f;
      }
    }
    store.conv_layers.push_back(std::move(w));
  }

  // Layer 3: head A over [red_mean8, green_mean8]. Anchor slot 0 keys its
  // objectness on the red channel and claims class 0.
  {
    ConvWeights w = blank_conv(3, 21, 2, 1);
    kernel_at(w, 21, 2, 1, 4, 0, 0, 0) = kPlantedGain;  // objectness <- red
    w.biases[4] = -kPlantedGain / 2;
    w.biases[5] = kPlantedClassLogit;    // class 0 on
    w.biases[6] = -kPlantedClassLogit;   // class 1 off
    w.biases[11] = -kPlantedGain / 2;    // anchor slots 1 and 2 stay silent
    w.biases[18] = -kPlantedGain / 2;
    store.conv_layers.push_back(std::move(w));
  }

  // Layer 8: head B over [up_red8, up_green8, red_mean4, green_mean4].
  // Anchor slot 0 keys on the green 4x4 mean and claims class 1.
  {
    ConvWeights w = blank_conv(8, 21, 4, 1);
    kernel_at(w, 21, 4, 1, 4, 3, 0, 0) = kPlantedGain;  // objectness <- green_mean4
    w.biases[4] = -kPlantedGain / 2;
    w.biases[5] = -kPlantedClassLogit;
    w.biases[6] = kPlantedClassLogit;
    w.biases[11] = -kPlantedGain / 2;
    w.biases[18] = -kPlantedGain / 2;
    store.conv_layers.push_back(std::move(w));
  }

  for (const ConvWeights& w : store.conv_layers) {
    store.payload_floats += w.biases.size() + w.scales.size() + w.mean.size() +
                            w.variance.size() + w.kernel.size();
  }
  (void)cfg;
  return store;
}

/// Serializes a WeightStore into the Darknet binary layout (little-endian
/// header, then per-conv blocks).
inline std::vector<std::uint8_t> serialize_weights(const detkit::darknet::WeightStore& store) {
  std::vector<std::uint8_t> bytes;
  auto put = [&](const void* p, std::size_t n) {
    const auto* b = static_cast<const std::uint8_t*>(p);
    bytes.insert(bytes.end(), b, b + n);
  };
  put(&store.major, 4);
  put(&store.minor, 4);
  put(&store.revision, 4);
  if (store.major * 10 + store.minor >= 2) {
    put(&store.seen, 8);
  } else {
    const std::uint32_t seen32 = static_cast<std::uint32_t>(store.seen);
    put(&seen32, 4);
  }
  for (const auto& w : store.conv_layers) {
    put(w.biases.data(), w.biases.size() * 4);
    if (w.batch_normalize) {
      put(w.scales.data(), w.scales.size() * 4);
      put(w.mean.data(), w.mean.size() * 4);
      put(w.variance.data(), w.variance.size() * 4);
    }
    put(w.kernel.data(), w.kernel.size() * 4);
  }
  return bytes;
}

struct PlantedScene {
  detkit::io::ImageU8 image;
  std::vector<detkit::GroundTruthObject> ground_truth;
};

/// Black 64x64 canvas with red 8x8 squares on the stride-8 grid (class 0) and
/// green 4x4 squares on the stride-4 grid (class 1), never sharing a stride-8
/// block so the planted heads stay decoupled.
inline PlantedScene make_planted_scene(std::mt19937_64& rng, const std::string& image_id) {
  PlantedScene scene;
  scene.image = detkit::io::ImageU8(64, 64);

  std::uniform_int_distribution<int> cell8(0, 7);
  std::uniform_int_distribution<int> count(1, 3);
  std::vector<std::pair<int, int>> red_cells;
  const int reds = count(rng);
  while (static_cast<int>(red_cells.size()) < reds) {
    const std::pair<int, int> cell{cell8(rng), cell8(rng)};
    bool fresh = true;
    for (const auto& c : red_cells) fresh = fresh && c != cell;
    if (fresh) red_cells.push_back(cell);
  }
  for (const auto& [gx, gy] : red_cells) {
    for (int y = gy * 8; y < gy * 8 + 8; ++y) {
      for (int x = gx * 8; x < gx * 8 + 8; ++x) scene.image.set_pixel(x, y, 255, 0, 0);
    }
    detkit::GroundTruthObject gt;
    gt.image_id = image_id;
    gt.class_id = 0;
    gt.box = detkit::BoundingBox(gx * 8, gy * 8, gx * 8 + 8, gy * 8 + 8);
    scene.ground_truth.push_back(std::move(gt));
  }

  std::uniform_int_distribution<int> cell16(0, 15);
  std::vector<std::pair<int, int>> green_cells;
  const int greens = count(rng);
  int guard = 0;
  while (static_cast<int>(green_cells.size()) < greens && ++guard < 200) {
    const std::pair<int, int> cell{cell16(rng), cell16(rng)};
    const std::pair<int, int> parent{cell.first / 2, cell.second / 2};
    bool ok = true;
    for (const auto& c : red_cells) ok = ok && c != parent;
    for (const auto& c : green_cells) ok = ok && c != cell;
    if (ok) green_cells.push_back(cell);
  }
  for (const auto& [gx, gy] : green_cells) {
    for (int y = gy * 4; y < gy * 4 + 4; ++y) {
      for (int x = gx * 4; x < gx * 4 + 4; ++x) scene.image.set_pixel(x, y, 0, 255, 0);
    }
    detkit::GroundTruthObject gt;
    gt.image_id = image_id;
    gt.class_id = 1;
    gt.box = detkit::BoundingBox(gx * 4, gy * 4, gx * 4 + 4, gy * 4 + 4);
    scene.ground_truth.push_back(std::move(gt));
  }
  return scene;
}

/// Small random-valued network exercising every layer kind, used for the
/// straight-line forward oracle. Kept at 16x16 input so the oracle stays fast.
inline std::string oracle_cfg_text() {
  return R"cfg([net]
width=16
height=16
channels=3

[convolutional]
batch_normalize=1
filters=4
size=3
stride=1
pad=1
activation=leaky

[convolutional]
batch_normalize=1
filters=4
size=3
stride=1
pad=1
activation=linear

[shortcut]
from=-2
activation=leaky

[convolutional]
batch_normalize=1
filters=8
size=3
stride=2
pad=1
activation=leaky

[maxpool]
size=2
stride=1

[convolutional]
filters=21
size=1
stride=1
activation=linear

[yolo]
mask = 3,4,5
anchors = 2,3, 4,3, 3,5, 6,4, 5,7, 8,8
classes=2
num=6

[route]
layers = -3

[upsample]
stride=2

[route]
layers = -1, 2

[convolutional]
filters=21
size=1
stride=1
activation=linear

[yolo]
mask = 0,1,2
anchors = 2,3, 4,3, 3,5, 6,4, 5,7, 8,8
classes=2
num=6
)cfg";
}

inline detkit::Tensor random_tensor(int n, int c, int h, int w, std::mt19937_64& rng,
                                    float lo = -1.0f, float hi = 1.0f) {
  detkit::Tensor t(n, c, h, w);
  std::uniform_real_distribution<float> dist(lo, hi);
  for (float& v : t.data) v = dist(rng);
  return t;
}

}  // namespace testsupport
