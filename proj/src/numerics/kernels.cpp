#include "layoutgen/numerics/kernels.hpp"

#include <algorithm>
#include <cstddef>
#include <cstring>
#include <vector>

namespace layoutgen::num::kernels {

namespace {

constexpr int kColBlock = 64;
constexpr long kParallelWork = 1L << 15;

// Portable SIMD type; lowers to whatever vector width the target offers.
typedef float vec16 __attribute__((vector_size(64)));
constexpr int kLanes = 16;
constexpr int kVecsPerBlock = kColBlock / kLanes;

inline vec16 load16(const float* p) {
  vec16 v;
  std::memcpy(&v, p, sizeof(v));
  return v;
}

inline void store16(float* p, vec16 v) { std::memcpy(p, &v, sizeof(v)); }

// One MR x kColBlock tile of C, accumulated over the full k extent in registers.
template <int MR>
void tile_full(int k, const float* a, int lda, const float* b, int ldb, float* c, int ldc,
               bool accumulate) {
  vec16 acc[MR][kVecsPerBlock];
  for (int r = 0; r < MR; ++r)
    for (int v = 0; v < kVecsPerBlock; ++v)
      acc[r][v] = accumulate ? load16(c + r * ldc + v * kLanes) : vec16{};
  for (int p = 0; p < k; ++p) {
    const float* bp = b + static_cast<std::ptrdiff_t>(p) * ldb;
    vec16 bv[kVecsPerBlock];
    for (int v = 0; v < kVecsPerBlock; ++v) bv[v] = load16(bp + v * kLanes);
    for (int r = 0; r < MR; ++r) {
      const float av = a[r * lda + p];
      for (int v = 0; v < kVecsPerBlock; ++v) acc[r][v] += av * bv[v];
    }
  }
  for (int r = 0; r < MR; ++r)
    for (int v = 0; v < kVecsPerBlock; ++v) store16(c + r * ldc + v * kLanes, acc[r][v]);
}

template <int MR>
void tile(int k, const float* a, int lda, const float* b, int ldb, float* c, int ldc,
          bool accumulate) {
  tile_full<MR>(k, a, lda, b, ldb, c, ldc, accumulate);
}

// Full-width column block: b and c each expose kColBlock columns.
void column_block(int m, int k, const float* a, int lda, const float* b, int ldb, float* c,
                  int ldc, bool accumulate) {
  int i = 0;
  for (; i + 4 <= m; i += 4) tile<4>(k, a + i * lda, lda, b, ldb, c + i * ldc, ldc, accumulate);
  switch (m - i) {
    case 3: tile<3>(k, a + i * lda, lda, b, ldb, c + i * ldc, ldc, accumulate); break;
    case 2: tile<2>(k, a + i * lda, lda, b, ldb, c + i * ldc, ldc, accumulate); break;
    case 1: tile<1>(k, a + i * lda, lda, b, ldb, c + i * ldc, ldc, accumulate); break;
    default: break;
  }
}

// Narrow trailing block: staged through zero-padded buffers so the same
// full-width tiles apply.
void partial_column_block(int m, int cols, int k, const float* a, int lda, const float* b, int ldb,
                          float* c, int ldc, bool accumulate) {
  std::vector<float> bpad(static_cast<std::size_t>(k) * kColBlock, 0.0f);
  std::vector<float> cpad(static_cast<std::size_t>(m) * kColBlock, 0.0f);
  for (int p = 0; p < k; ++p) std::copy_n(b + static_cast<std::ptrdiff_t>(p) * ldb, cols, &bpad[p * kColBlock]);
  if (accumulate) {
    for (int i = 0; i < m; ++i) std::copy_n(c + i * ldc, cols, &cpad[i * kColBlock]);
  }
  column_block(m, k, a, lda, bpad.data(), kColBlock, cpad.data(), kColBlock, accumulate);
  for (int i = 0; i < m; ++i) std::copy_n(&cpad[i * kColBlock], cols, c + i * ldc);
}

inline float horizontal_sum(vec16 v) {
  float s = 0.0f;
  for (int l = 0; l < kLanes; ++l) s += v[l];
  return s;
}

// C[MR x NR] (+)= A[MR x k] * B[NR x k]^T as vectorized dot products.
template <int MR, int NR>
void dot_tile(int k, const float* a, int lda, const float* b, int ldb, float* c, int ldc,
              bool accumulate) {
  vec16 acc[MR][NR] = {};
  int p = 0;
  for (; p + kLanes <= k; p += kLanes) {
    vec16 av[MR], bv[NR];
    for (int r = 0; r < MR; ++r) av[r] = load16(a + static_cast<std::ptrdiff_t>(r) * lda + p);
    for (int q = 0; q < NR; ++q) bv[q] = load16(b + static_cast<std::ptrdiff_t>(q) * ldb + p);
    for (int r = 0; r < MR; ++r)
      for (int q = 0; q < NR; ++q) acc[r][q] += av[r] * bv[q];
  }
  for (int r = 0; r < MR; ++r)
    for (int q = 0; q < NR; ++q) {
      float s = horizontal_sum(acc[r][q]);
      for (int t = p; t < k; ++t) s += a[static_cast<std::ptrdiff_t>(r) * lda + t] * b[static_cast<std::ptrdiff_t>(q) * ldb + t];
      float& out = c[r * ldc + q];
      out = accumulate ? out + s : s;
    }
}

template <int MR>
void dot_row_block(int n, int k, const float* a, int lda, const float* b, int ldb, float* c, int ldc,
                   bool accumulate) {
  int j = 0;
  for (; j + 4 <= n; j += 4) dot_tile<MR, 4>(k, a, lda, b + static_cast<std::ptrdiff_t>(j) * ldb, ldb, c + j, ldc, accumulate);
  for (; j < n; ++j) dot_tile<MR, 1>(k, a, lda, b + static_cast<std::ptrdiff_t>(j) * ldb, ldb, c + j, ldc, accumulate);
}

// cols[(ci*k + ky)*k + kx][oy*Wo + ox] for one image.
void im2col(const ConvGeometry& g, const float* image, float* cols) {
  const int ho = g.out_height(), wo = g.out_width(), k = g.kernel;
  const int p = ho * wo;
  for (int ci = 0; ci < g.in_channels; ++ci) {
    const float* plane = image + static_cast<std::ptrdiff_t>(ci) * g.height * g.width;
    for (int ky = 0; ky < k; ++ky)
      for (int kx = 0; kx < k; ++kx) {
        float* row = cols + static_cast<std::ptrdiff_t>((ci * k + ky) * k + kx) * p;
        for (int oy = 0; oy < ho; ++oy) {
          const int iy = oy * g.stride - g.padding + ky;
          float* out = row + oy * wo;
          if (iy < 0 || iy >= g.height) {
            std::fill(out, out + wo, 0.0f);
            continue;
          }
          const float* src = plane + iy * g.width;
          for (int ox = 0; ox < wo; ++ox) {
            const int ix = ox * g.stride - g.padding + kx;
            out[ox] = (ix >= 0 && ix < g.width) ? src[ix] : 0.0f;
          }
        }
      }
  }
}

void col2im(const ConvGeometry& g, const float* cols, float* image) {
  const int ho = g.out_height(), wo = g.out_width(), k = g.kernel;
  const int p = ho * wo;
  std::fill(image, image + static_cast<std::ptrdiff_t>(g.in_channels) * g.height * g.width, 0.0f);
  for (int ci = 0; ci < g.in_channels; ++ci) {
    float* plane = image + static_cast<std::ptrdiff_t>(ci) * g.height * g.width;
    for (int ky = 0; ky < k; ++ky)
      for (int kx = 0; kx < k; ++kx) {
        const float* row = cols + static_cast<std::ptrdiff_t>((ci * k + ky) * k + kx) * p;
        for (int oy = 0; oy < ho; ++oy) {
          const int iy = oy * g.stride - g.padding + ky;
          if (iy < 0 || iy >= g.height) continue;
          float* dst = plane + iy * g.width;
          const float* src = row + oy * wo;
          for (int ox = 0; ox < wo; ++ox) {
            const int ix = ox * g.stride - g.padding + kx;
            if (ix >= 0 && ix < g.width) dst[ix] += src[ox];
          }
        }
      }
  }
}

}  // namespace

void gemm(int m, int n, int k, const float* a, int lda, const float* b, int ldb, float* c, int ldc,
          bool accumulate) {
  const int blocks = (n + kColBlock - 1) / kColBlock;
  const long work = static_cast<long>(m) * n * k;
#pragma omp parallel for schedule(static) if (work > kParallelWork)
  for (int jb = 0; jb < blocks; ++jb) {
    const int j0 = jb * kColBlock;
    const int cols = std::min(kColBlock, n - j0);
    if (cols == kColBlock) {
      column_block(m, k, a, lda, b + j0, ldb, c + j0, ldc, accumulate);
    } else {
      partial_column_block(m, cols, k, a, lda, b + j0, ldb, c + j0, ldc, accumulate);
    }
  }
}

void gemm_nt(int m, int n, int k, const float* a, int lda, const float* b, int ldb, float* c,
             int ldc, bool accumulate) {
  const int blocks = (m + 3) / 4;
  const long work = static_cast<long>(m) * n * k;
#pragma omp parallel for schedule(static) if (work > kParallelWork)
  for (int ib = 0; ib < blocks; ++ib) {
    const int i = ib * 4;
    const float* ai = a + static_cast<std::ptrdiff_t>(i) * lda;
    float* ci = c + static_cast<std::ptrdiff_t>(i) * ldc;
    switch (std::min(4, m - i)) {
      case 4: dot_row_block<4>(n, k, ai, lda, b, ldb, ci, ldc, accumulate); break;
      case 3: dot_row_block<3>(n, k, ai, lda, b, ldb, ci, ldc, accumulate); break;
      case 2: dot_row_block<2>(n, k, ai, lda, b, ldb, ci, ldc, accumulate); break;
      default: dot_row_block<1>(n, k, ai, lda, b, ldb, ci, ldc, accumulate); break;
    }
  }
}

void conv2d_forward(const ConvGeometry& g, std::span<const float> input,
                    std::span<const float> weight, std::span<float> output) {
  const int p = g.out_height() * g.out_width();
  const int kk = g.patch_size();
  const std::ptrdiff_t in_stride = static_cast<std::ptrdiff_t>(g.in_channels) * g.height * g.width;
  const std::ptrdiff_t out_stride = static_cast<std::ptrdiff_t>(g.out_channels) * p;
#pragma omp parallel if (static_cast<long>(g.batch) * kk * p * g.out_channels > kParallelWork)
  {
    std::vector<float> cols(static_cast<std::size_t>(kk) * p);
#pragma omp for schedule(static)
    for (int n = 0; n < g.batch; ++n) {
      im2col(g, input.data() + n * in_stride, cols.data());
      gemm(g.out_channels, p, kk, weight.data(), kk, cols.data(), p, output.data() + n * out_stride,
           p, false);
    }
  }
}

void conv2d_backward_input(const ConvGeometry& g, std::span<const float> grad_output,
                           std::span<const float> weight, std::span<float> grad_input) {
  const int p = g.out_height() * g.out_width();
  const int kk = g.patch_size();
  const std::ptrdiff_t in_stride = static_cast<std::ptrdiff_t>(g.in_channels) * g.height * g.width;
  const std::ptrdiff_t out_stride = static_cast<std::ptrdiff_t>(g.out_channels) * p;
  std::vector<float> wt(static_cast<std::size_t>(kk) * g.out_channels);
  for (int co = 0; co < g.out_channels; ++co)
    for (int r = 0; r < kk; ++r) wt[r * g.out_channels + co] = weight[co * kk + r];
#pragma omp parallel if (static_cast<long>(g.batch) * kk * p * g.out_channels > kParallelWork)
  {
    std::vector<float> cols(static_cast<std::size_t>(kk) * p);
#pragma omp for schedule(static)
    for (int n = 0; n < g.batch; ++n) {
      gemm(kk, p, g.out_channels, wt.data(), g.out_channels, grad_output.data() + n * out_stride, p,
           cols.data(), p, false);
      col2im(g, cols.data(), grad_input.data() + n * in_stride);
    }
  }
}

void conv2d_backward_weight(const ConvGeometry& g, std::span<const float> input,
                            std::span<const float> grad_output, std::span<float> grad_weight) {
  const int p = g.out_height() * g.out_width();
  const int kk = g.patch_size();
  const std::ptrdiff_t in_stride = static_cast<std::ptrdiff_t>(g.in_channels) * g.height * g.width;
  const std::ptrdiff_t out_stride = static_cast<std::ptrdiff_t>(g.out_channels) * p;
  std::vector<float> cols(static_cast<std::size_t>(g.batch) * kk * p);
#pragma omp parallel for schedule(static) if (static_cast<long>(g.batch) * kk * p > kParallelWork)
  for (int n = 0; n < g.batch; ++n) {
    im2col(g, input.data() + n * in_stride, cols.data() + static_cast<std::ptrdiff_t>(n) * kk * p);
  }
  if (g.batch == 0) std::fill(grad_weight.begin(), grad_weight.end(), 0.0f);
  // Batch contributions are summed in index order.
  for (int n = 0; n < g.batch; ++n) {
    gemm_nt(g.out_channels, kk, p, grad_output.data() + n * out_stride, p,
            cols.data() + static_cast<std::ptrdiff_t>(n) * kk * p, p, grad_weight.data(), kk, n > 0);
  }
}

}  // namespace layoutgen::num::kernels
