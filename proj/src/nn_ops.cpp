#include "detkit/nn/ops.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <limits>

namespace detkit::nn {

namespace {

using MatrixRM = Eigen::Matrix<float, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

int conv_out_dim(int in, int pad, int k, int stride) { return (in + 2 * pad - k) / stride + 1; }

void check_conv_args(const Tensor& input, const Tensor& kernel, std::span<const float> bias,
                     int stride, int pad) {
  if (kernel.channels != input.channels) {
    throw ShapeError("conv2d: kernel expects " + std::to_string(kernel.channels) +
                     " input channels, tensor has " + std::to_string(input.channels));
  }
  if (kernel.height != kernel.width) throw ShapeError("conv2d: only square kernels supported");
  if (static_cast<int>(bias.size()) != kernel.batch) {
    throw ShapeError("conv2d: bias count does not match output channels");
  }
  if (stride < 1) throw ShapeError("conv2d: stride must be >= 1");
  if (pad < 0) throw ShapeError("conv2d: padding must be >= 0");
  if (input.height + 2 * pad < kernel.height || input.width + 2 * pad < kernel.width) {
    throw ShapeError("conv2d: kernel larger than padded input");
  }
}

void conv2d_direct(const Tensor& input, const Tensor& kernel, std::span<const float> bias,
                   int stride, int pad, Tensor& out) {
  const int k = kernel.height;
  const int out_c = kernel.batch;
  const int in_c = input.channels;
  const int out_h = out.height;
  const int out_w = out.width;

  for (int n = 0; n < input.batch; ++n) {
    for (int oc = 0; oc < out_c; ++oc) {
      float* out_plane = out.data.data() + out.index(n, oc, 0, 0);
      for (std::size_t i = 0; i < static_cast<std::size_t>(out_h) * out_w; ++i) {
        out_plane[i] = bias[static_cast<std::size_t>(oc)];
      }
      for (int ic = 0; ic < in_c; ++ic) {
        const float* in_plane = input.data.data() + input.index(n, ic, 0, 0);
        const float* k_plane = kernel.data.data() + kernel.index(oc, ic, 0, 0);
        for (int ky = 0; ky < k; ++ky) {
          for (int kx = 0; kx < k; ++kx) {
            const float weight = k_plane[ky * k + kx];
            if (weight == 0.0f) continue;
            for (int oy = 0; oy < out_h; ++oy) {
              const int iy = oy * stride - pad + ky;
              if (iy < 0 || iy >= input.height) continue;
              const float* in_row = in_plane + static_cast<std::size_t>(iy) * input.width;
              float* out_row = out_plane + static_cast<std::size_t>(oy) * out_w;
              const int x_off = kx - pad;
              // Valid output columns keep ix = ox*stride + x_off inside the row.
              int ox_begin = 0;
              while (ox_begin < out_w && ox_begin * stride + x_off < 0) ++ox_begin;
              int ox_end = out_w;
              while (ox_end > ox_begin && (ox_end - 1) * stride + x_off >= input.width) --ox_end;
              for (int ox = ox_begin; ox < ox_end; ++ox) {
                out_row[ox] += weight * in_row[ox * stride + x_off];
              }
            }
          }
        }
      }
    }
  }
}

void im2col(const Tensor& input, int n, int k, int stride, int pad, int out_h, int out_w,
            float* col) {
  // Column buffer layout: rows = in_c*k*k, cols = out_h*out_w, column-major
  // (each output pixel's receptive field is contiguous).
  const int in_c = input.channels;
  const std::size_t rows = static_cast<std::size_t>(in_c) * k * k;
  for (int oy = 0; oy < out_h; ++oy) {
    for (int ox = 0; ox < out_w; ++ox) {
      float* column = col + (static_cast<std::size_t>(oy) * out_w + ox) * rows;
      std::size_t r = 0;
      for (int ic = 0; ic < in_c; ++ic) {
        const float* in_plane = input.data.data() + input.index(n, ic, 0, 0);
        for (int ky = 0; ky < k; ++ky) {
          const int iy = oy * stride - pad + ky;
          for (int kx = 0; kx < k; ++kx, ++r) {
            const int ix = ox * stride - pad + kx;
            column[r] = (iy < 0 || iy >= input.height || ix < 0 || ix >= input.width)
                            ? 0.0f
                            : in_plane[static_cast<std::size_t>(iy) * input.width + ix];
          }
        }
      }
    }
  }
}

void conv2d_gemm(const Tensor& input, const Tensor& kernel, std::span<const float> bias,
                 int stride, int pad, Tensor& out) {
  const int k = kernel.height;
  const int out_c = kernel.batch;
  const int in_c = input.channels;
  const int out_h = out.height;
  const int out_w = out.width;
  const std::size_t patch = static_cast<std::size_t>(in_c) * k * k;
  const std::size_t pixels = static_cast<std::size_t>(out_h) * out_w;

  std::vector<float> col(patch * pixels);
  Eigen::Map<const MatrixRM> weights(kernel.data.data(), out_c, static_cast<Eigen::Index>(patch));

  for (int n = 0; n < input.batch; ++n) {
    im2col(input, n, k, stride, pad, out_h, out_w, col.data());
    Eigen::Map<const Eigen::MatrixXf> columns(col.data(), static_cast<Eigen::Index>(patch),
                                              static_cast<Eigen::Index>(pixels));
    Eigen::Map<MatrixRM> result(out.data.data() + out.index(n, 0, 0, 0), out_c,
                                static_cast<Eigen::Index>(pixels));
    result.noalias() = weights * columns;
    for (int oc = 0; oc < out_c; ++oc) {
      result.row(oc).array() += bias[static_cast<std::size_t>(oc)];
    }
  }
}

}  // namespace

Tensor conv2d(const Tensor& input, const Tensor& kernel, std::span<const float> bias, int stride,
              int pad, Activation act, ConvPath path) {
  check_conv_args(input, kernel, bias, stride, pad);
  const int out_h = conv_out_dim(input.height, pad, kernel.height, stride);
  const int out_w = conv_out_dim(input.width, pad, kernel.width, stride);
  Tensor out(input.batch, kernel.batch, out_h, out_w);

  if (path == ConvPath::direct) {
    conv2d_direct(input, kernel, bias, stride, pad, out);
  } else {
    conv2d_gemm(input, kernel, bias, stride, pad, out);
  }
  if (act == Activation::leaky) {
    for (float& v : out.data) v = apply_activation(v, act);
  }
  return out;
}

Tensor conv2d_same(const Tensor& input, const Tensor& kernel, std::span<const float> bias,
                   int stride, bool same_pad, Activation act, ConvPath path) {
  return conv2d(input, kernel, bias, stride, same_pad ? kernel.height / 2 : 0, act, path);
}

std::pair<Tensor, std::vector<float>> fold_batchnorm(const Tensor& kernel,
                                                     std::span<const float> beta,
                                                     std::span<const float> gamma,
                                                     std::span<const float> mean,
                                                     std::span<const float> variance,
                                                     float epsilon) {
  const std::size_t out_c = static_cast<std::size_t>(kernel.batch);
  if (beta.size() != out_c || gamma.size() != out_c || mean.size() != out_c ||
      variance.size() != out_c) {
    throw ShapeError("fold_batchnorm: statistics must have one entry per output channel");
  }
  for (float v : variance) {
    if (!(v >= 0.0f)) throw DataError("fold_batchnorm: negative variance");
  }

  Tensor folded = kernel;
  std::vector<float> bias(out_c);
  const std::size_t per_channel = kernel.size() / out_c;
  for (std::size_t oc = 0; oc < out_c; ++oc) {
    const float scale = gamma[oc] / std::sqrt(variance[oc] + epsilon);
    float* block = folded.data.data() + oc * per_channel;
    for (std::size_t i = 0; i < per_channel; ++i) block[i] *= scale;
    bias[oc] = beta[oc] - scale * mean[oc];
  }
  return {std::move(folded), std::move(bias)};
}

void batchnorm_inplace(Tensor& t, std::span<const float> beta, std::span<const float> gamma,
                       std::span<const float> mean, std::span<const float> variance,
                       float epsilon) {
  const std::size_t plane = static_cast<std::size_t>(t.height) * t.width;
  for (int n = 0; n < t.batch; ++n) {
    for (int c = 0; c < t.channels; ++c) {
      const std::size_t ci = static_cast<std::size_t>(c);
      if (!(variance[ci] >= 0.0f)) throw DataError("batchnorm: negative variance");
      const float scale = gamma[ci] / std::sqrt(variance[ci] + epsilon);
      const float shift = beta[ci] - scale * mean[ci];
      float* block = t.data.data() + t.index(n, c, 0, 0);
      for (std::size_t i = 0; i < plane; ++i) block[i] = block[i] * scale + shift;
    }
  }
}

Tensor shortcut_add(const Tensor& a, const Tensor& b, Activation act) {
  if (!a.same_shape(b)) {
    throw ShapeError("shortcut_add: shapes differ (" + a.shape_string() + " vs " +
                     b.shape_string() + ")");
  }
  Tensor out = a;
  for (std::size_t i = 0; i < out.size(); ++i) {
    out.data[i] = apply_activation(out.data[i] + b.data[i], act);
  }
  return out;
}

Tensor route_concat(const std::vector<const Tensor*>& inputs) {
  if (inputs.empty()) throw ShapeError("route_concat: no inputs");
  const Tensor& first = *inputs.front();
  int channels = 0;
  for (const Tensor* t : inputs) {
    if (t->batch != first.batch || t->height != first.height || t->width != first.width) {
      throw ShapeError("route_concat: spatial dims differ (" + first.shape_string() + " vs " +
                       t->shape_string() + ")");
    }
    channels += t->channels;
  }
  Tensor out(first.batch, channels, first.height, first.width);
  const std::size_t plane = static_cast<std::size_t>(first.height) * first.width;
  for (int n = 0; n < first.batch; ++n) {
    std::size_t offset = out.index(n, 0, 0, 0);
    for (const Tensor* t : inputs) {
      const std::size_t block = static_cast<std::size_t>(t->channels) * plane;
      std::copy_n(t->data.data() + t->index(n, 0, 0, 0), block, out.data.data() + offset);
      offset += block;
    }
  }
  return out;
}

Tensor upsample_nearest(const Tensor& t, int factor) {
  if (factor < 1) throw ShapeError("upsample_nearest: factor must be >= 1");
  Tensor out(t.batch, t.channels, t.height * factor, t.width * factor);
  for (int n = 0; n < t.batch; ++n) {
    for (int c = 0; c < t.channels; ++c) {
      for (int y = 0; y < out.height; ++y) {
        const float* src_row = t.data.data() + t.index(n, c, y / factor, 0);
        float* dst_row = out.data.data() + out.index(n, c, y, 0);
        for (int x = 0; x < out.width; ++x) dst_row[x] = src_row[x / factor];
      }
    }
  }
  return out;
}

Tensor maxpool(const Tensor& t, int size, int stride, int padding) {
  if (size < 1 || stride < 1 || padding < 0) throw ShapeError("maxpool: invalid geometry");
  const int out_h = (t.height + padding - size) / stride + 1;
  const int out_w = (t.width + padding - size) / stride + 1;
  if (out_h < 1 || out_w < 1) throw ShapeError("maxpool: window larger than input");
  const int offset = -padding / 2;

  Tensor out(t.batch, t.channels, out_h, out_w);
  for (int n = 0; n < t.batch; ++n) {
    for (int c = 0; c < t.channels; ++c) {
      for (int oy = 0; oy < out_h; ++oy) {
        for (int ox = 0; ox < out_w; ++ox) {
          float best = -std::numeric_limits<float>::infinity();
          for (int ky = 0; ky < size; ++ky) {
            const int iy = offset + oy * stride + ky;
            if (iy < 0 || iy >= t.height) continue;
            for (int kx = 0; kx < size; ++kx) {
              const int ix = offset + ox * stride + kx;
              if (ix < 0 || ix >= t.width) continue;
              best = std::max(best, t.at(n, c, iy, ix));
            }
          }
          out.at(n, c, oy, ox) = best;
        }
      }
    }
  }
  return out;
}

bool all_finite(const Tensor& t) {
  for (float v : t.data) {
    if (!std::isfinite(v)) return false;
  }
  return true;
}

}  // namespace detkit::nn
