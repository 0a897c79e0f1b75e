#pragma once

#include <memory>
#include <vector>

#include "layoutgen/numerics/tensor.hpp"

// Differentiable operations. Every backward rule is written in terms of these
// same operations, so a backward pass run with `create_graph` is itself
// differentiable (needed for the gradient penalty).
//
// Spatial ops take [C, H, W] or batched [N, C, H, W] tensors; everything
// before the channel axis is treated as batch.

namespace layoutgen::num {

// Elementwise, equal shapes.
Tensor add(const Tensor& a, const Tensor& b);
Tensor sub(const Tensor& a, const Tensor& b);
Tensor mul(const Tensor& a, const Tensor& b);
Tensor scale(const Tensor& a, float s);
Tensor add_scalar(const Tensor& a, float s);
Tensor square(const Tensor& a);
/// a^p elementwise; callers keep `a` positive when p is fractional.
Tensor power(const Tensor& a, float p);
Tensor abs(const Tensor& a);

/// Multiplies by a fixed (non-differentiable) elementwise mask.
Tensor mask_mul(const Tensor& a, std::shared_ptr<const std::vector<float>> mask);

enum class Activation { leaky_relu, tanh };
Tensor leaky_relu(const Tensor& a, float alpha);
Tensor tanh(const Tensor& a);
Tensor activation(const Tensor& a, Activation kind, float alpha = 0.1f);

// Reductions; results have shape [1].
Tensor sum(const Tensor& a);
Tensor mean(const Tensor& a);
Tensor broadcast_to(const Tensor& s, const Shape& shape);
/// Mean absolute difference over all elements; subgradient 0 at ties.
Tensor l1_distance(const Tensor& a, const Tensor& b);

Tensor reshape(const Tensor& a, Shape shape);

// Matrices.
Tensor matmul(const Tensor& a, const Tensor& b);
Tensor transpose(const Tensor& a);
/// weight[M, N] * input[N] + bias[M].
Tensor linear(const Tensor& input, const Tensor& weight, const Tensor& bias);
/// Row-wise linear map: input[B, N] -> [B, M].
Tensor linear_rows(const Tensor& input, const Tensor& weight, const Tensor& bias);

// Channel-structured ops.
Tensor conv2d(const Tensor& input, const Tensor& weight, const Tensor& bias, int stride, int padding);
Tensor conv2d_nobias(const Tensor& input, const Tensor& weight, int stride, int padding);
Tensor upsample_nearest(const Tensor& input, int factor);
/// Sums each factor x factor block; the adjoint of upsample_nearest.
Tensor block_sum(const Tensor& input, int factor);
Tensor concat_channels(const Tensor& a, const Tensor& b);
Tensor slice_channels(const Tensor& a, int start, int count);
/// Places `a` at channel offset `start` of a zero tensor with `total` channels.
Tensor pad_channels(const Tensor& a, int start, int total);
/// bias[C] -> shape, replicated over every non-channel position.
Tensor broadcast_channels(const Tensor& bias, const Shape& shape);
/// Sums over every non-channel position -> [C].
Tensor channel_sum(const Tensor& a);

/// Fixed mixing across the leading (component) axis:
/// out[p, ...] = sum_n matrix[p][n] * in[n, ...], accumulated in double so
/// the result does not depend on the component enumeration order.
struct MixMatrix {
  int rows = 0;
  int cols = 0;
  std::vector<float> values;  // row-major rows x cols
  MixMatrix transposed() const;
};
Tensor mix_components(const Tensor& input, std::shared_ptr<const MixMatrix> matrix);

// Lower-level conv primitives; exposed for tests.
Tensor conv_forward(const Tensor& input, const Tensor& weight, int stride, int padding);
Tensor conv_input_grad(const Tensor& grad_out, const Tensor& weight, int height, int width,
                       int stride, int padding);
Tensor conv_weight_grad(const Tensor& input, const Tensor& grad_out, int kernel, int stride,
                        int padding);

}  // namespace layoutgen::num
