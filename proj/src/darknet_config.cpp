#include "detkit/darknet/config.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <charconv>
#include <cstdlib>
#include <fstream>
#include <sstream>

namespace detkit::darknet {

namespace {

struct RawSection {
  std::string name;
  int line = 0;
  std::vector<std::tuple<std::string, std::string, int>> entries;  // key, value, line
};

std::string trim(const std::string& s) {
  std::size_t b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  std::size_t e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

std::vector<RawSection> tokenize(const std::string& text, const std::string& source) {
  std::vector<RawSection> sections;
  std::istringstream in(text);
  std::string raw;
  int line_no = 0;
  while (std::getline(in, raw)) {
    ++line_no;
    const std::string line = trim(raw);
    if (line.empty() || line[0] == '#' || line[0] == ';') continue;
    if (line.front() == '[') {
      if (line.back() != ']') throw ParseError(source, line_no, "malformed section header");
      RawSection s;
      s.name = trim(line.substr(1, line.size() - 2));
      s.line = line_no;
      sections.push_back(std::move(s));
      continue;
    }
    const std::size_t eq = line.find('=');
    if (eq == std::string::npos) {
      throw ParseError(source, line_no, "expected key=value, got '" + line + "'");
    }
    if (sections.empty()) {
      throw ParseError(source, line_no, "key=value before any [section]");
    }
    sections.back().entries.emplace_back(trim(line.substr(0, eq)), trim(line.substr(eq + 1)),
                                         line_no);
  }
  return sections;
}

long parse_int(const std::string& value, const std::string& source, int line) {
  const std::string v = trim(value);
  long out = 0;
  auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || ptr != v.data() + v.size()) {
    throw ParseError(source, line, "expected an integer, got '" + value + "'");
  }
  return out;
}

double parse_double(const std::string& value, const std::string& source, int line) {
  const std::string v = trim(value);
  char* end = nullptr;
  const double out = std::strtod(v.c_str(), &end);
  if (end != v.c_str() + v.size() || v.empty()) {
    throw ParseError(source, line, "expected a number, got '" + value + "'");
  }
  return out;
}

std::vector<std::string> split_commas(const std::string& value) {
  std::vector<std::string> parts;
  std::string current;
  for (char c : value) {
    if (c == ',') {
      parts.push_back(trim(current));
      current.clear();
    } else {
      current += c;
    }
  }
  parts.push_back(trim(current));
  return parts;
}

/// Accessor over one section's key/value list. First occurrence wins, matching
/// the reference parser; consumption is tracked so leftovers can be reported.
class Options {
 public:
  Options(const RawSection& section, const std::string& source)
      : section_(section), source_(source), used_(section.entries.size(), false) {}

  std::optional<std::string> find(const std::string& key) {
    for (std::size_t i = 0; i < section_.entries.size(); ++i) {
      if (std::get<0>(section_.entries[i]) == key) {
        used_[i] = true;
        // Later duplicates of the same key are shadowed, not errors.
        for (std::size_t j = i + 1; j < section_.entries.size(); ++j) {
          if (std::get<0>(section_.entries[j]) == key) used_[j] = true;
        }
        entry_line_ = std::get<2>(section_.entries[i]);
        return std::get<1>(section_.entries[i]);
      }
    }
    return std::nullopt;
  }

  int find_int(const std::string& key, int fallback) {
    auto v = find(key);
    return v ? static_cast<int>(parse_int(*v, source_, entry_line_)) : fallback;
  }

  int line_of_last_find() const { return entry_line_; }

  /// Keys never consumed by the layer parser, in file order.
  std::vector<std::pair<std::string, std::string>> leftovers() const {
    std::vector<std::pair<std::string, std::string>> out;
    for (std::size_t i = 0; i < section_.entries.size(); ++i) {
      if (!used_[i]) {
        out.emplace_back(std::get<0>(section_.entries[i]), std::get<1>(section_.entries[i]));
      }
    }
    return out;
  }

  void warn_leftovers(const std::string& section_name, std::vector<std::string>& warnings) const {
    for (std::size_t i = 0; i < section_.entries.size(); ++i) {
      if (!used_[i]) {
        warnings.push_back(source_ + ":" + std::to_string(std::get<2>(section_.entries[i])) +
                           ": unknown key '" + std::get<0>(section_.entries[i]) + "' in [" +
                           section_name + "]");
      }
    }
  }

 private:
  const RawSection& section_;
  const std::string& source_;
  std::vector<bool> used_;
  int entry_line_ = 0;
};

Activation parse_activation(Options& opts, const std::string& source) {
  auto v = opts.find("activation");
  if (!v) return Activation::linear;
  if (*v == "linear") return Activation::linear;
  if (*v == "leaky") return Activation::leaky;
  throw ParseError(source, opts.line_of_last_find(), "unsupported activation '" + *v + "'");
}

int conv_out_dim(int in, int pad, int size, int stride) {
  return (in + 2 * pad - size) / stride + 1;
}

}  // namespace

const char* to_string(LayerKind kind) {
  switch (kind) {
    case LayerKind::net: return "net";
    case LayerKind::convolutional: return "convolutional";
    case LayerKind::shortcut: return "shortcut";
    case LayerKind::route: return "route";
    case LayerKind::upsample: return "upsample";
    case LayerKind::yolo: return "yolo";
    case LayerKind::maxpool: return "maxpool";
  }
  return "?";
}

int resolve_reference(int raw, int layer_index) {
  const int absolute = raw < 0 ? layer_index + raw : raw;
  if (absolute < 0 || absolute >= layer_index) {
    throw ModelError("layer reference " + std::to_string(raw) + " at layer " +
                     std::to_string(layer_index) + " does not point to an earlier layer");
  }
  return absolute;
}

std::vector<int> NetworkConfig::yolo_layers() const {
  std::vector<int> out;
  for (std::size_t i = 0; i < layers.size(); ++i) {
    if (layers[i].kind == LayerKind::yolo) out.push_back(static_cast<int>(i));
  }
  return out;
}

bool NetworkConfig::operator==(const NetworkConfig& other) const {
  // Warnings carry source line numbers and are excluded: two configs are equal
  // when their resolved structure is.
  if (width != other.width || height != other.height || channels != other.channels ||
      anchors != other.anchors || classes != other.classes ||
      net_passthrough != other.net_passthrough || layers.size() != other.layers.size()) {
    return false;
  }
  for (std::size_t i = 0; i < layers.size(); ++i) {
    const LayerSpec& a = layers[i];
    const LayerSpec& b = other.layers[i];
    const bool same = a.kind == b.kind && a.filters == b.filters && a.size == b.size &&
                      a.stride == b.stride && a.padding == b.padding &&
                      a.pad_flag == b.pad_flag && a.batch_normalize == b.batch_normalize &&
                      a.activation == b.activation && a.input_layers == b.input_layers &&
                      a.mask == b.mask && a.classes == b.classes &&
                      a.num_anchors == b.num_anchors && a.passthrough == b.passthrough &&
                      a.out_channels == b.out_channels && a.out_height == b.out_height &&
                      a.out_width == b.out_width;
    if (!same) return false;
  }
  return true;
}

NetworkConfig parse_config(const std::string& text, const std::string& source_name) {
  const std::vector<RawSection> sections = tokenize(text, source_name);
  if (sections.empty()) throw ParseError(source_name, 1, "config has no sections");
  if (sections[0].name != "net" && sections[0].name != "network") {
    throw ParseError(source_name, sections[0].line, "first section must be [net]");
  }

  NetworkConfig cfg;

  {
    Options net(sections[0], source_name);
    cfg.width = net.find_int("width", 0);
    cfg.height = net.find_int("height", 0);
    cfg.channels = net.find_int("channels", 0);
    if (cfg.width <= 0 || cfg.height <= 0 || cfg.channels <= 0) {
      throw ParseError(source_name, sections[0].line,
                       "[net] must declare positive width, height and channels");
    }
    cfg.net_passthrough = net.leftovers();
    net.warn_leftovers("net", cfg.warnings);
  }

  int cur_c = cfg.channels;
  int cur_h = cfg.height;
  int cur_w = cfg.width;

  auto dims_of = [&](int index) {
    const LayerSpec& l = cfg.layers[static_cast<std::size_t>(index)];
    return std::array<int, 3>{l.out_channels, l.out_height, l.out_width};
  };

  for (std::size_t si = 1; si < sections.size(); ++si) {
    const RawSection& section = sections[si];
    const int layer_index = static_cast<int>(cfg.layers.size());
    Options opts(section, source_name);

    LayerSpec spec;
    spec.cfg_line = section.line;

    if (section.name == "convolutional" || section.name == "conv") {
      spec.kind = LayerKind::convolutional;
      spec.filters = opts.find_int("filters", 1);
      spec.size = opts.find_int("size", 1);
      spec.stride = opts.find_int("stride", 1);
      spec.padding = opts.find_int("padding", 0);
      spec.pad_flag = opts.find_int("pad", 0) != 0;
      if (spec.pad_flag) spec.padding = spec.size / 2;
      spec.batch_normalize = opts.find_int("batch_normalize", 0) != 0;
      spec.activation = parse_activation(opts, source_name);
      if (spec.filters <= 0 || spec.size <= 0 || spec.stride <= 0 || spec.padding < 0) {
        throw ParseError(source_name, section.line, "invalid convolutional geometry");
      }
      if (cur_h + 2 * spec.padding < spec.size || cur_w + 2 * spec.padding < spec.size) {
        throw ParseError(source_name, section.line, "kernel larger than padded input");
      }
      spec.out_channels = spec.filters;
      spec.out_height = conv_out_dim(cur_h, spec.padding, spec.size, spec.stride);
      spec.out_width = conv_out_dim(cur_w, spec.padding, spec.size, spec.stride);
    } else if (section.name == "maxpool") {
      spec.kind = LayerKind::maxpool;
      spec.stride = opts.find_int("stride", 1);
      spec.size = opts.find_int("size", spec.stride);
      spec.padding = opts.find_int("padding", spec.size - 1);
      if (spec.size <= 0 || spec.stride <= 0 || spec.padding < 0) {
        throw ParseError(source_name, section.line, "invalid maxpool geometry");
      }
      spec.out_channels = cur_c;
      spec.out_height = (cur_h + spec.padding - spec.size) / spec.stride + 1;
      spec.out_width = (cur_w + spec.padding - spec.size) / spec.stride + 1;
    } else if (section.name == "shortcut") {
      spec.kind = LayerKind::shortcut;
      auto from = opts.find("from");
      if (!from) throw ParseError(source_name, section.line, "[shortcut] requires from=");
      int absolute = 0;
      try {
        absolute = resolve_reference(
            static_cast<int>(parse_int(*from, source_name, opts.line_of_last_find())),
            layer_index);
      } catch (const ModelError& e) {
        throw ParseError(source_name, section.line, e.what());
      }
      spec.input_layers = {absolute};
      spec.activation = parse_activation(opts, source_name);
      const auto other = dims_of(absolute);
      if (other != std::array<int, 3>{cur_c, cur_h, cur_w}) {
        throw ParseError(source_name, section.line,
                         "[shortcut] input shapes differ: " + std::to_string(cur_c) + "x" +
                             std::to_string(cur_h) + "x" + std::to_string(cur_w) + " vs " +
                             std::to_string(other[0]) + "x" + std::to_string(other[1]) + "x" +
                             std::to_string(other[2]));
      }
      spec.out_channels = cur_c;
      spec.out_height = cur_h;
      spec.out_width = cur_w;
    } else if (section.name == "route") {
      spec.kind = LayerKind::route;
      auto layers_value = opts.find("layers");
      if (!layers_value) throw ParseError(source_name, section.line, "[route] requires layers=");
      int channels = 0;
      int rh = -1;
      int rw = -1;
      for (const std::string& part : split_commas(*layers_value)) {
        int absolute = 0;
        try {
          absolute = resolve_reference(
              static_cast<int>(parse_int(part, source_name, opts.line_of_last_find())),
              layer_index);
        } catch (const ModelError& e) {
          throw ParseError(source_name, section.line, e.what());
        }
        spec.input_layers.push_back(absolute);
        const auto dims = dims_of(absolute);
        channels += dims[0];
        if (rh < 0) {
          rh = dims[1];
          rw = dims[2];
        } else if (rh != dims[1] || rw != dims[2]) {
          throw ParseError(source_name, section.line,
                           "[route] inputs have different spatial dims");
        }
      }
      spec.out_channels = channels;
      spec.out_height = rh;
      spec.out_width = rw;
    } else if (section.name == "upsample") {
      spec.kind = LayerKind::upsample;
      spec.stride = opts.find_int("stride", 2);
      if (spec.stride <= 0) throw ParseError(source_name, section.line, "invalid upsample stride");
      spec.out_channels = cur_c;
      spec.out_height = cur_h * spec.stride;
      spec.out_width = cur_w * spec.stride;
    } else if (section.name == "yolo") {
      spec.kind = LayerKind::yolo;
      auto mask_value = opts.find("mask");
      if (!mask_value) throw ParseError(source_name, section.line, "[yolo] requires mask=");
      for (const std::string& part : split_commas(*mask_value)) {
        spec.mask.push_back(
            static_cast<int>(parse_int(part, source_name, opts.line_of_last_find())));
      }
      auto anchors_value = opts.find("anchors");
      if (!anchors_value) throw ParseError(source_name, section.line, "[yolo] requires anchors=");
      std::vector<double> anchor_values;
      for (const std::string& part : split_commas(*anchors_value)) {
        anchor_values.push_back(parse_double(part, source_name, opts.line_of_last_find()));
      }
      if (anchor_values.size() % 2 != 0) {
        throw ParseError(source_name, section.line, "[yolo] anchors must be (w,h) pairs");
      }
      std::vector<std::pair<double, double>> anchors;
      for (std::size_t i = 0; i + 1 < anchor_values.size(); i += 2) {
        if (anchor_values[i] <= 0 || anchor_values[i + 1] <= 0) {
          throw ParseError(source_name, section.line, "[yolo] anchor dims must be positive");
        }
        anchors.emplace_back(anchor_values[i], anchor_values[i + 1]);
      }
      spec.classes = opts.find_int("classes", 0);
      spec.num_anchors = opts.find_int("num", static_cast<int>(anchors.size()));
      if (spec.classes <= 0) throw ParseError(source_name, section.line, "[yolo] requires classes=");
      if (spec.num_anchors != static_cast<int>(anchors.size())) {
        throw ParseError(source_name, section.line,
                         "[yolo] num does not match the anchor pair count");
      }
      for (int m : spec.mask) {
        if (m < 0 || m >= static_cast<int>(anchors.size())) {
          throw ParseError(source_name, section.line,
                           "[yolo] mask index " + std::to_string(m) + " out of range");
        }
      }
      if (cfg.anchors.empty()) {
        cfg.anchors = anchors;
        cfg.classes = spec.classes;
      } else {
        if (cfg.anchors != anchors) {
          throw ParseError(source_name, section.line, "[yolo] layers disagree on anchors");
        }
        if (cfg.classes != spec.classes) {
          throw ParseError(source_name, section.line, "[yolo] layers disagree on classes");
        }
      }
      const int expected_channels = static_cast<int>(spec.mask.size()) * (spec.classes + 5);
      if (cur_c != expected_channels) {
        throw ParseError(source_name, section.line,
                         "[yolo] input has " + std::to_string(cur_c) + " channels, expected " +
                             std::to_string(expected_channels) +
                             " (= mask * (classes + 5))");
      }
      spec.out_channels = cur_c;
      spec.out_height = cur_h;
      spec.out_width = cur_w;
    } else {
      throw ParseError(source_name, section.line, "unknown section [" + section.name + "]");
    }

    spec.passthrough = opts.leftovers();
    if (spec.kind == LayerKind::yolo) {
      // Training-time yolo keys ride along without warnings.
      static const std::array<const char*, 4> quiet = {"jitter", "ignore_thresh", "truth_thresh",
                                                       "random"};
      Options rewarn(section, source_name);
      rewarn.find("mask");
      rewarn.find("anchors");
      rewarn.find("classes");
      rewarn.find("num");
      for (const char* k : quiet) rewarn.find(k);
      rewarn.warn_leftovers(section.name, cfg.warnings);
    } else {
      opts.warn_leftovers(section.name, cfg.warnings);
    }

    cur_c = spec.out_channels;
    cur_h = spec.out_height;
    cur_w = spec.out_width;
    cfg.layers.push_back(std::move(spec));
  }

  return cfg;
}

NetworkConfig parse_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ModelError("cannot open config file: " + path);
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return parse_config(buffer.str(), path);
}

namespace {

std::string format_double(double v) {
  std::array<char, 32> buf{};
  auto [ptr, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), v);
  return std::string(buf.data(), ptr);
}

void print_passthrough(std::ostringstream& out,
                       const std::vector<std::pair<std::string, std::string>>& entries) {
  for (const auto& [k, v] : entries) out << k << "=" << v << "\n";
}

}  // namespace

std::string print_config(const NetworkConfig& config) {
  std::ostringstream out;
  out << "[net]\n";
  out << "width=" << config.width << "\n";
  out << "height=" << config.height << "\n";
  out << "channels=" << config.channels << "\n";
  print_passthrough(out, config.net_passthrough);

  for (const LayerSpec& layer : config.layers) {
    out << "\n[" << to_string(layer.kind) << "]\n";
    switch (layer.kind) {
      case LayerKind::convolutional:
        if (layer.batch_normalize) out << "batch_normalize=1\n";
        out << "filters=" << layer.filters << "\n";
        out << "size=" << layer.size << "\n";
        out << "stride=" << layer.stride << "\n";
        if (layer.pad_flag) {
          out << "pad=1\n";
        } else if (layer.padding != 0) {
          out << "padding=" << layer.padding << "\n";
        }
        out << "activation=" << (layer.activation == Activation::leaky ? "leaky" : "linear")
            << "\n";
        break;
      case LayerKind::maxpool:
        out << "size=" << layer.size << "\n";
        out << "stride=" << layer.stride << "\n";
        if (layer.padding != layer.size - 1) out << "padding=" << layer.padding << "\n";
        break;
      case LayerKind::shortcut:
        out << "from=" << layer.input_layers.at(0) << "\n";
        out << "activation=" << (layer.activation == Activation::leaky ? "leaky" : "linear")
            << "\n";
        break;
      case LayerKind::route: {
        out << "layers=";
        for (std::size_t i = 0; i < layer.input_layers.size(); ++i) {
          if (i > 0) out << ",";
          out << layer.input_layers[i];
        }
        out << "\n";
        break;
      }
      case LayerKind::upsample:
        out << "stride=" << layer.stride << "\n";
        break;
      case LayerKind::yolo: {
        out << "mask=";
        for (std::size_t i = 0; i < layer.mask.size(); ++i) {
          if (i > 0) out << ",";
          out << layer.mask[i];
        }
        out << "\n";
        out << "anchors=";
        for (std::size_t i = 0; i < config.anchors.size(); ++i) {
          if (i > 0) out << ", ";
          out << format_double(config.anchors[i].first) << ","
              << format_double(config.anchors[i].second);
        }
        out << "\n";
        out << "classes=" << layer.classes << "\n";
        out << "num=" << layer.num_anchors << "\n";
        break;
      }
      case LayerKind::net:
        break;
    }
    print_passthrough(out, layer.passthrough);
  }
  return out.str();
}

void validate_detection_topology(const NetworkConfig& config) {
  const std::vector<int> heads = config.yolo_layers();
  if (heads.empty()) throw ModelError("network has no [yolo] layer; nothing to detect with");
  for (int h : heads) {
    const LayerSpec& layer = config.layers[static_cast<std::size_t>(h)];
    if (layer.mask.empty()) throw ModelError("yolo layer has an empty anchor mask");
    if (layer.classes != config.classes) {
      throw ModelError("yolo layers disagree on the class count");
    }
  }
  if (config.classes <= 0) throw ModelError("network declares no classes");
}

std::size_t expected_weight_floats(const NetworkConfig& config) {
  std::size_t total = 0;
  int in_c = config.channels;
  for (const LayerSpec& layer : config.layers) {
    if (layer.kind == LayerKind::convolutional) {
      const std::size_t filters = static_cast<std::size_t>(layer.filters);
      const std::size_t per_filter =
          static_cast<std::size_t>(in_c) * static_cast<std::size_t>(layer.size) *
          static_cast<std::size_t>(layer.size);
      total += filters * (layer.batch_normalize ? 4u : 1u);
      total += filters * per_filter;
    }
    in_c = layer.out_channels;
  }
  return total;
}

}  // namespace detkit::darknet
