#pragma once

#include <span>

// Raw float32 kernels behind the convolution and matrix ops. The top-level
// functions are the blocked, OpenMP-parallel versions used in training; the
// `reference` namespace holds direct serial loops kept as test oracles.
//
// Parallel loops only partition independent outputs and every reduction runs
// in a fixed order, so results are identical for any thread count.

namespace layoutgen::num::kernels {

struct ConvGeometry {
  int batch = 1;
  int in_channels = 1;
  int height = 1;
  int width = 1;
  int out_channels = 1;
  int kernel = 1;
  int stride = 1;
  int padding = 0;

  int out_height() const { return (height + 2 * padding - kernel) / stride + 1; }
  int out_width() const { return (width + 2 * padding - kernel) / stride + 1; }
  int patch_size() const { return in_channels * kernel * kernel; }
};

/// C[m x n] (+)= A[m x k] * B[k x n], row-major with leading dimensions.
void gemm(int m, int n, int k, const float* a, int lda, const float* b, int ldb, float* c, int ldc,
          bool accumulate);

/// C[m x n] (+)= A[m x k] * B[n x k]^T.
void gemm_nt(int m, int n, int k, const float* a, int lda, const float* b, int ldb, float* c,
             int ldc, bool accumulate);

/// output[N, Cout, Ho, Wo] = cross-correlation of input[N, Cin, H, W] with weight[Cout, Cin, k, k].
void conv2d_forward(const ConvGeometry& g, std::span<const float> input,
                    std::span<const float> weight, std::span<float> output);
/// grad_input = adjoint of the forward map in its input, applied to grad_output.
void conv2d_backward_input(const ConvGeometry& g, std::span<const float> grad_output,
                           std::span<const float> weight, std::span<float> grad_input);
/// grad_weight = adjoint of the forward map in its weight, summed over the batch.
void conv2d_backward_weight(const ConvGeometry& g, std::span<const float> input,
                            std::span<const float> grad_output, std::span<float> grad_weight);

namespace reference {

void gemm(int m, int n, int k, const float* a, int lda, const float* b, int ldb, float* c, int ldc,
          bool accumulate);
void conv2d_forward(const ConvGeometry& g, std::span<const float> input,
                    std::span<const float> weight, std::span<float> output);
void conv2d_backward_input(const ConvGeometry& g, std::span<const float> grad_output,
                           std::span<const float> weight, std::span<float> grad_input);
void conv2d_backward_weight(const ConvGeometry& g, std::span<const float> input,
                            std::span<const float> grad_output, std::span<float> grad_weight);

}  // namespace reference
}  // namespace layoutgen::num::kernels
