#include "detkit/darknet/weights.hpp"

#include <cmath>
#include <cstring>
#include <fstream>

namespace detkit::darknet {

namespace {

/// Little-endian cursor over the weight byte stream.
class Reader {
 public:
  Reader(const std::vector<std::uint8_t>& bytes, const std::string& source)
      : bytes_(bytes), source_(source) {}

  int32_t read_i32(const char* what) {
    require(4, what);
    int32_t v = 0;
    std::memcpy(&v, bytes_.data() + pos_, 4);
    pos_ += 4;
    return v;
  }

  uint32_t read_u32(const char* what) {
    require(4, what);
    uint32_t v = 0;
    std::memcpy(&v, bytes_.data() + pos_, 4);
    pos_ += 4;
    return v;
  }

  uint64_t read_u64(const char* what) {
    require(8, what);
    uint64_t v = 0;
    std::memcpy(&v, bytes_.data() + pos_, 8);
    pos_ += 8;
    return v;
  }

  void read_floats(std::vector<float>& out, std::size_t count, const std::string& what) {
    require(count * 4, what.c_str());
    out.resize(count);
    std::memcpy(out.data(), bytes_.data() + pos_, count * 4);
    pos_ += count * 4;
  }

  std::size_t position() const { return pos_; }
  std::size_t remaining() const { return bytes_.size() - pos_; }

 private:
  void require(std::size_t n, const char* what) const {
    if (pos_ + n > bytes_.size()) {
      throw ModelError(source_ + ": truncated while reading " + std::string(what) +
                       " at byte offset " + std::to_string(pos_) + " (need " + std::to_string(n) +
                       " bytes, have " + std::to_string(bytes_.size() - pos_) + ")");
    }
  }

  const std::vector<std::uint8_t>& bytes_;
  const std::string& source_;
  std::size_t pos_ = 0;
};

}  // namespace

const ConvWeights& WeightStore::for_layer(int layer_index) const {
  for (const ConvWeights& w : conv_layers) {
    if (w.layer_index == layer_index) return w;
  }
  throw ModelError("no weights loaded for layer " + std::to_string(layer_index));
}

WeightStore load_weights(const std::vector<std::uint8_t>& bytes, const NetworkConfig& config,
                         const std::string& source_name) {
  Reader reader(bytes, source_name);

  WeightStore store;
  store.major = reader.read_i32("version major");
  store.minor = reader.read_i32("version minor");
  store.revision = reader.read_i32("version revision");
  if (store.major < 0 || store.minor < 0 || store.major >= 1000 || store.minor >= 1000) {
    throw ModelError(source_name + ": unsupported weights version " + std::to_string(store.major) +
                     "." + std::to_string(store.minor));
  }
  if (store.major * 10 + store.minor >= 2) {
    store.seen = reader.read_u64("seen counter");
  } else {
    store.seen = reader.read_u32("seen counter");
  }
  const std::size_t payload_start = reader.position();

  int in_c = config.channels;
  for (std::size_t i = 0; i < config.layers.size(); ++i) {
    const LayerSpec& layer = config.layers[i];
    if (layer.kind == LayerKind::convolutional) {
      const std::string where =
          "layer " + std::to_string(i) + " [convolutional]";
      ConvWeights w;
      w.layer_index = static_cast<int>(i);
      w.in_channels = in_c;
      w.batch_normalize = layer.batch_normalize;
      const std::size_t n = static_cast<std::size_t>(layer.filters);
      reader.read_floats(w.biases, n, where + " biases");
      if (layer.batch_normalize) {
        reader.read_floats(w.scales, n, where + " batch-norm scales");
        reader.read_floats(w.mean, n, where + " batch-norm means");
        reader.read_floats(w.variance, n, where + " batch-norm variances");
        for (std::size_t f = 0; f < n; ++f) {
          if (!(w.variance[f] >= 0.0f)) {
            throw ModelError(source_name + ": " + where + " has negative batch-norm variance");
          }
        }
      }
      const std::size_t kernel_floats = n * static_cast<std::size_t>(in_c) *
                                        static_cast<std::size_t>(layer.size) *
                                        static_cast<std::size_t>(layer.size);
      reader.read_floats(w.kernel, kernel_floats, where + " kernels");
      store.conv_layers.push_back(std::move(w));
    }
    in_c = layer.out_channels;
  }

  if (reader.remaining() != 0) {
    throw ModelError(source_name + ": " + std::to_string(reader.remaining()) +
                     " trailing bytes after the last convolutional block");
  }
  store.payload_floats = (reader.position() - payload_start) / 4;
  return store;
}

WeightStore load_weights_file(const std::string& path, const NetworkConfig& config) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ModelError("cannot open weights file: " + path);
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                                  std::istreambuf_iterator<char>());
  return load_weights(bytes, config, path);
}

}  // namespace detkit::darknet
