#include "detkit/io/image.hpp"

#include <jpeglib.h>
#include <png.h>
#include <zlib.h>

#include <algorithm>
#include <cmath>
#include <csetjmp>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <memory>

#include "detkit/error.hpp"

namespace detkit::io {

namespace {

struct FileCloser {
  void operator()(std::FILE* f) const {
    if (f) std::fclose(f);
  }
};
using FilePtr = std::unique_ptr<std::FILE, FileCloser>;

bool has_png_magic(const std::uint8_t* bytes, std::size_t n) {
  static const std::uint8_t magic[8] = {0x89, 'P', 'N', 'G', '\r', '\n', 0x1a, '\n'};
  return n >= 8 && std::memcmp(bytes, magic, 8) == 0;
}

bool has_jpeg_magic(const std::uint8_t* bytes, std::size_t n) {
  return n >= 2 && bytes[0] == 0xFF && bytes[1] == 0xD8;
}

ImageU8 read_png_file(const std::string& path) {
  FilePtr file(std::fopen(path.c_str(), "rb"));
  if (!file) throw DataError("cannot open image: " + path);

  png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  png_infop info = png ? png_create_info_struct(png) : nullptr;
  if (!png || !info) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw DataError("png decoder initialization failed for " + path);
  }
  ImageU8 image;
  std::vector<png_bytep> rows;
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw DataError("malformed PNG: " + path);
  }
  png_init_io(png, file.get());
  png_read_info(png, info);

  // Normalize every color type / bit depth to 8-bit RGB.
  png_set_expand(png);
  if (png_get_bit_depth(png, info) == 16) png_set_strip_16(png);
  if (png_get_color_type(png, info) & PNG_COLOR_MASK_ALPHA) png_set_strip_alpha(png);
  const png_byte color = png_get_color_type(png, info);
  if (color == PNG_COLOR_TYPE_GRAY || color == PNG_COLOR_TYPE_GRAY_ALPHA) {
    png_set_gray_to_rgb(png);
  }
  png_read_update_info(png, info);

  image = ImageU8(static_cast<int>(png_get_image_width(png, info)),
                  static_cast<int>(png_get_image_height(png, info)));
  rows.resize(static_cast<std::size_t>(image.height));
  for (int y = 0; y < image.height; ++y) {
    rows[static_cast<std::size_t>(y)] = image.rgb.data() + image.offset(0, y);
  }
  png_read_image(png, rows.data());
  png_read_end(png, nullptr);
  png_destroy_read_struct(&png, &info, nullptr);
  return image;
}

struct JpegErrorHandler {
  jpeg_error_mgr mgr;
  std::jmp_buf jump;
};

void jpeg_error_trampoline(j_common_ptr cinfo) {
  auto* handler = reinterpret_cast<JpegErrorHandler*>(cinfo->err);
  std::longjmp(handler->jump, 1);
}

ImageU8 read_jpeg_file(const std::string& path) {
  FilePtr file(std::fopen(path.c_str(), "rb"));
  if (!file) throw DataError("cannot open image: " + path);

  jpeg_decompress_struct cinfo;
  JpegErrorHandler handler;
  cinfo.err = jpeg_std_error(&handler.mgr);
  handler.mgr.error_exit = jpeg_error_trampoline;
  if (setjmp(handler.jump)) {
    jpeg_destroy_decompress(&cinfo);
    throw DataError("malformed JPEG: " + path);
  }
  jpeg_create_decompress(&cinfo);
  jpeg_stdio_src(&cinfo, file.get());
  jpeg_read_header(&cinfo, TRUE);
  cinfo.out_color_space = JCS_RGB;
  jpeg_start_decompress(&cinfo);

  ImageU8 image(static_cast<int>(cinfo.output_width), static_cast<int>(cinfo.output_height));
  while (cinfo.output_scanline < cinfo.output_height) {
    JSAMPROW row = image.rgb.data() + image.offset(0, static_cast<int>(cinfo.output_scanline));
    jpeg_read_scanlines(&cinfo, &row, 1);
  }
  jpeg_finish_decompress(&cinfo);
  jpeg_destroy_decompress(&cinfo);
  return image;
}

std::vector<std::uint8_t> read_prefix(const std::string& path, std::size_t n) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open image: " + path);
  std::vector<std::uint8_t> bytes(n);
  in.read(reinterpret_cast<char*>(bytes.data()), static_cast<std::streamsize>(n));
  bytes.resize(static_cast<std::size_t>(in.gcount()));
  return bytes;
}

std::uint32_t be32(const std::uint8_t* p) {
  return (static_cast<std::uint32_t>(p[0]) << 24) | (static_cast<std::uint32_t>(p[1]) << 16) |
         (static_cast<std::uint32_t>(p[2]) << 8) | static_cast<std::uint32_t>(p[3]);
}

std::pair<int, int> png_size(const std::string& path) {
  const auto bytes = read_prefix(path, 24);
  if (bytes.size() < 24 || std::memcmp(bytes.data() + 12, "IHDR", 4) != 0) {
    throw DataError("malformed PNG header: " + path);
  }
  return {static_cast<int>(be32(bytes.data() + 16)), static_cast<int>(be32(bytes.data() + 20))};
}

std::pair<int, int> jpeg_size(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open image: " + path);
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                                  std::istreambuf_iterator<char>());
  // Scan markers for a start-of-frame segment, which carries the dimensions.
  std::size_t pos = 2;
  while (pos + 9 <= bytes.size()) {
    if (bytes[pos] != 0xFF) {
      ++pos;
      continue;
    }
    const std::uint8_t marker = bytes[pos + 1];
    if (marker == 0xFF) {
      ++pos;
      continue;
    }
    if (marker == 0xD8 || (marker >= 0xD0 && marker <= 0xD7) || marker == 0x01) {
      pos += 2;
      continue;
    }
    const std::size_t seg_len = (static_cast<std::size_t>(bytes[pos + 2]) << 8) | bytes[pos + 3];
    const bool is_sof = (marker >= 0xC0 && marker <= 0xCF) && marker != 0xC4 && marker != 0xC8 &&
                        marker != 0xCC;
    if (is_sof) {
      const int h = static_cast<int>((bytes[pos + 5] << 8) | bytes[pos + 6]);
      const int w = static_cast<int>((bytes[pos + 7] << 8) | bytes[pos + 8]);
      return {w, h};
    }
    pos += 2 + seg_len;
  }
  throw DataError("no JPEG frame header found: " + path);
}

void append_be32(std::vector<std::uint8_t>& out, std::uint32_t v) {
  out.push_back(static_cast<std::uint8_t>(v >> 24));
  out.push_back(static_cast<std::uint8_t>(v >> 16));
  out.push_back(static_cast<std::uint8_t>(v >> 8));
  out.push_back(static_cast<std::uint8_t>(v));
}

void append_chunk(std::vector<std::uint8_t>& out, const char type[4],
                  const std::vector<std::uint8_t>& payload) {
  append_be32(out, static_cast<std::uint32_t>(payload.size()));
  const std::size_t crc_start = out.size();
  out.insert(out.end(), type, type + 4);
  out.insert(out.end(), payload.begin(), payload.end());
  const uLong crc = crc32(crc32(0L, nullptr, 0), out.data() + crc_start,
                          static_cast<uInt>(out.size() - crc_start));
  append_be32(out, static_cast<std::uint32_t>(crc));
}

}  // namespace

ImageU8 read_image(const std::string& path) {
  const auto prefix = read_prefix(path, 8);
  if (has_png_magic(prefix.data(), prefix.size())) return read_png_file(path);
  if (has_jpeg_magic(prefix.data(), prefix.size())) return read_jpeg_file(path);
  throw DataError("unsupported image format (expected PNG or JPEG): " + path);
}

std::pair<int, int> read_image_size(const std::string& path) {
  const auto prefix = read_prefix(path, 8);
  if (has_png_magic(prefix.data(), prefix.size())) return png_size(path);
  if (has_jpeg_magic(prefix.data(), prefix.size())) return jpeg_size(path);
  throw DataError("unsupported image format (expected PNG or JPEG): " + path);
}

std::vector<std::uint8_t> encode_png(const ImageU8& image) {
  if (image.width <= 0 || image.height <= 0) throw ArgumentError("cannot encode an empty image");

  // Raw scanlines, each prefixed with filter byte 0 (None).
  const std::size_t stride = static_cast<std::size_t>(image.width) * 3;
  std::vector<std::uint8_t> raw;
  raw.reserve((stride + 1) * static_cast<std::size_t>(image.height));
  for (int y = 0; y < image.height; ++y) {
    raw.push_back(0);
    const std::uint8_t* row = image.rgb.data() + image.offset(0, y);
    raw.insert(raw.end(), row, row + stride);
  }

  uLongf compressed_size = compressBound(static_cast<uLong>(raw.size()));
  std::vector<std::uint8_t> compressed(compressed_size);
  if (compress2(compressed.data(), &compressed_size, raw.data(), static_cast<uLong>(raw.size()),
                6) != Z_OK) {
    throw Error("zlib compression failed while encoding PNG");
  }
  compressed.resize(compressed_size);

  std::vector<std::uint8_t> out = {0x89, 'P', 'N', 'G', '\r', '\n', 0x1a, '\n'};
  std::vector<std::uint8_t> ihdr;
  append_be32(ihdr, static_cast<std::uint32_t>(image.width));
  append_be32(ihdr, static_cast<std::uint32_t>(image.height));
  ihdr.push_back(8);  // bit depth
  ihdr.push_back(2);  // color type: truecolor RGB
  ihdr.push_back(0);  // compression
  ihdr.push_back(0);  // filter
  ihdr.push_back(0);  // no interlace
  append_chunk(out, "IHDR", ihdr);
  append_chunk(out, "IDAT", compressed);
  append_chunk(out, "IEND", {});
  return out;
}

void write_png(const ImageU8& image, const std::string& path) {
  const std::vector<std::uint8_t> bytes = encode_png(image);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot open for writing: " + path);
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw DataError("write failed: " + path);
}

Tensor to_tensor(const ImageU8& image) {
  Tensor t(1, 3, image.height, image.width);
  const std::size_t plane = static_cast<std::size_t>(image.height) * image.width;
  for (std::size_t i = 0; i < plane; ++i) {
    t.data[i] = static_cast<float>(image.rgb[i * 3]) / 255.0f;
    t.data[plane + i] = static_cast<float>(image.rgb[i * 3 + 1]) / 255.0f;
    t.data[2 * plane + i] = static_cast<float>(image.rgb[i * 3 + 2]) / 255.0f;
  }
  return t;
}

ImageU8 to_image(const Tensor& tensor) {
  if (tensor.batch != 1 || tensor.channels != 3) {
    throw ShapeError("to_image expects a 1x3xHxW tensor");
  }
  ImageU8 image(tensor.width, tensor.height);
  const std::size_t plane = static_cast<std::size_t>(tensor.height) * tensor.width;
  for (std::size_t i = 0; i < plane; ++i) {
    for (int c = 0; c < 3; ++c) {
      const float v = std::clamp(tensor.data[static_cast<std::size_t>(c) * plane + i], 0.0f, 1.0f);
      image.rgb[i * 3 + static_cast<std::size_t>(c)] =
          static_cast<std::uint8_t>(std::lround(v * 255.0f));
    }
  }
  return image;
}

}  // namespace detkit::io
