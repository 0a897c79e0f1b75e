#include "layoutgen/numerics/kernels.hpp"

namespace layoutgen::num::kernels::reference {

void gemm(int m, int n, int k, const float* a, int lda, const float* b, int ldb, float* c, int ldc,
          bool accumulate) {
  for (int i = 0; i < m; ++i) {
    for (int j = 0; j < n; ++j) {
      float s = accumulate ? c[i * ldc + j] : 0.0f;
      for (int p = 0; p < k; ++p) s += a[i * lda + p] * b[p * ldb + j];
      c[i * ldc + j] = s;
    }
  }
}

void conv2d_forward(const ConvGeometry& g, std::span<const float> input,
                    std::span<const float> weight, std::span<float> output) {
  const int ho = g.out_height(), wo = g.out_width(), k = g.kernel;
  for (int n = 0; n < g.batch; ++n)
    for (int co = 0; co < g.out_channels; ++co)
      for (int oy = 0; oy < ho; ++oy)
        for (int ox = 0; ox < wo; ++ox) {
          double s = 0.0;
          for (int ci = 0; ci < g.in_channels; ++ci)
            for (int ky = 0; ky < k; ++ky)
              for (int kx = 0; kx < k; ++kx) {
                const int iy = oy * g.stride - g.padding + ky;
                const int ix = ox * g.stride - g.padding + kx;
                if (iy < 0 || iy >= g.height || ix < 0 || ix >= g.width) continue;
                s += static_cast<double>(
                         input[((n * g.in_channels + ci) * g.height + iy) * g.width + ix]) *
                     weight[((co * g.in_channels + ci) * k + ky) * k + kx];
              }
          output[((n * g.out_channels + co) * ho + oy) * wo + ox] = static_cast<float>(s);
        }
}

void conv2d_backward_input(const ConvGeometry& g, std::span<const float> grad_output,
                           std::span<const float> weight, std::span<float> grad_input) {
  const int ho = g.out_height(), wo = g.out_width(), k = g.kernel;
  for (auto& v : grad_input) v = 0.0f;
  for (int n = 0; n < g.batch; ++n)
    for (int co = 0; co < g.out_channels; ++co)
      for (int oy = 0; oy < ho; ++oy)
        for (int ox = 0; ox < wo; ++ox) {
          const float go = grad_output[((n * g.out_channels + co) * ho + oy) * wo + ox];
          for (int ci = 0; ci < g.in_channels; ++ci)
            for (int ky = 0; ky < k; ++ky)
              for (int kx = 0; kx < k; ++kx) {
                const int iy = oy * g.stride - g.padding + ky;
                const int ix = ox * g.stride - g.padding + kx;
                if (iy < 0 || iy >= g.height || ix < 0 || ix >= g.width) continue;
                grad_input[((n * g.in_channels + ci) * g.height + iy) * g.width + ix] +=
                    go * weight[((co * g.in_channels + ci) * k + ky) * k + kx];
              }
        }
}

void conv2d_backward_weight(const ConvGeometry& g, std::span<const float> input,
                            std::span<const float> grad_output, std::span<float> grad_weight) {
  const int ho = g.out_height(), wo = g.out_width(), k = g.kernel;
  for (int co = 0; co < g.out_channels; ++co)
    for (int ci = 0; ci < g.in_channels; ++ci)
      for (int ky = 0; ky < k; ++ky)
        for (int kx = 0; kx < k; ++kx) {
          double s = 0.0;
          for (int n = 0; n < g.batch; ++n)
            for (int oy = 0; oy < ho; ++oy)
              for (int ox = 0; ox < wo; ++ox) {
                const int iy = oy * g.stride - g.padding + ky;
                const int ix = ox * g.stride - g.padding + kx;
                if (iy < 0 || iy >= g.height || ix < 0 || ix >= g.width) continue;
                s += static_cast<double>(
                         input[((n * g.in_channels + ci) * g.height + iy) * g.width + ix]) *
                     grad_output[((n * g.out_channels + co) * ho + oy) * wo + ox];
              }
          grad_weight[((co * g.in_channels + ci) * k + ky) * k + kx] = static_cast<float>(s);
        }
}

}  // namespace layoutgen::num::kernels::reference
