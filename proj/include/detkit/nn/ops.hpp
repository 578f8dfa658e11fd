#pragma once

#include <span>
#include <utility>
#include <vector>

#include "detkit/tensor.hpp"

namespace detkit::nn {

enum class Activation { linear, leaky };

/// Convolution execution route. `direct` is the straightforward nested-loop
/// path; `gemm` lowers to im2col followed by a matrix product. The two agree
/// within 1e-5 relative and exist to cross-check each other.
enum class ConvPath { direct, gemm };

constexpr float kLeakySlope = 0.1f;

inline float apply_activation(float x, Activation act) {
  return (act == Activation::leaky && x < 0.0f) ? kLeakySlope * x : x;
}

/// 2-D convolution. `kernel` has dims (out_c, in_c, k, k) reusing the tensor
/// type's batch axis for output channels; `bias` is one value per output
/// channel. Output spatial dims are floor((in + 2*pad - k)/stride) + 1.
Tensor conv2d(const Tensor& input, const Tensor& kernel, std::span<const float> bias, int stride,
              int pad, Activation act, ConvPath path = ConvPath::gemm);

/// Same-pad convenience: pad = k/2 when same_pad, else 0.
Tensor conv2d_same(const Tensor& input, const Tensor& kernel, std::span<const float> bias,
                   int stride, bool same_pad, Activation act, ConvPath path = ConvPath::gemm);

/// Folds batch-norm statistics into an equivalent kernel/bias pair:
/// kernel' = kernel * gamma / sqrt(variance + eps) per output channel,
/// bias'   = beta - gamma * mean / sqrt(variance + eps).
std::pair<Tensor, std::vector<float>> fold_batchnorm(const Tensor& kernel,
                                                     std::span<const float> beta,
                                                     std::span<const float> gamma,
                                                     std::span<const float> mean,
                                                     std::span<const float> variance,
                                                     float epsilon = 1e-6f);

/// Applies batch-norm followed by the bias shift, channel-wise, in place:
/// y = gamma * (x - mean) / sqrt(variance + eps) + beta. The two-step route
/// the folded form is checked against.
void batchnorm_inplace(Tensor& t, std::span<const float> beta, std::span<const float> gamma,
                       std::span<const float> mean, std::span<const float> variance,
                       float epsilon = 1e-6f);

/// Elementwise sum; both inputs must have identical dims.
Tensor shortcut_add(const Tensor& a, const Tensor& b, Activation act = Activation::linear);

/// Channel-axis concatenation preserving order; spatial dims must agree.
Tensor route_concat(const std::vector<const Tensor*>& inputs);

/// Nearest-neighbor upsampling by an integer factor in both spatial axes.
Tensor upsample_nearest(const Tensor& t, int factor);

inline Tensor upsample2x(const Tensor& t) { return upsample_nearest(t, 2); }

/// Darknet-convention max pooling: out = (in + padding - size)/stride + 1 with
/// the window anchored at -padding/2; out-of-bounds taps contribute -inf.
Tensor maxpool(const Tensor& t, int size, int stride, int padding);

/// True when every element is finite (no NaN or infinity).
bool all_finite(const Tensor& t);

}  // namespace detkit::nn
