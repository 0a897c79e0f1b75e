#include "layoutgen/metrics/embedding.hpp"

#include <cmath>
#include <random>
#include <stdexcept>
#include <string>

#include "layoutgen/numerics/ops.hpp"

namespace layoutgen::metrics {

using num::Tensor;

namespace {
constexpr std::uint64_t kEmbeddingSeed = 0x5eedf1dULL;
constexpr int kWidths[] = {3, 16, 32, 64, 64};
constexpr int kChunk = 64;  // images per forward pass
}  // namespace

EmbeddingNet::EmbeddingNet(int resolution) : resolution_(resolution) {
  if (resolution < 16) throw std::invalid_argument("embedding needs resolution >= 16");
  std::mt19937_64 rng(kEmbeddingSeed);
  auto uniform = [&](num::Shape shape, int fan_in) {
    Tensor t(std::move(shape));
    std::uniform_real_distribution<float> dist(-std::sqrt(6.0f / fan_in), std::sqrt(6.0f / fan_in));
    for (float& v : t.data()) v = dist(rng);
    return t;
  };
  for (int l = 0; l < 4; ++l) {
    params_.add("conv" + std::to_string(l) + ".weight", uniform({kWidths[l + 1], kWidths[l], 3, 3}, kWidths[l] * 9));
    params_.add("conv" + std::to_string(l) + ".bias", uniform({kWidths[l + 1]}, kWidths[l] * 9));
  }
  params_.add("proj.weight", uniform({kEmbeddingDim, 64}, 64));
  params_.add("proj.bias", uniform({kEmbeddingDim}, 64));
}

Eigen::MatrixXd EmbeddingNet::embed(const std::vector<data::Image>& images) const {
  num::NoGradScope no_grad;
  const int r = resolution_;
  const std::size_t px = static_cast<std::size_t>(r) * r;
  Eigen::MatrixXd out(static_cast<Eigen::Index>(images.size()), kEmbeddingDim);
  for (std::size_t start = 0; start < images.size(); start += kChunk) {
    const int n = static_cast<int>(std::min<std::size_t>(kChunk, images.size() - start));
    Tensor x({n, 3, r, r});
    auto dst = x.data();
    for (int i = 0; i < n; ++i) {
      const auto& img = images[start + i];
      if (img.width != r || img.height != r) {
        throw std::invalid_argument("embed: image is " + std::to_string(img.width) + "x" + std::to_string(img.height) +
                                    ", expected " + std::to_string(r));
      }
      for (std::size_t p = 0; p < px; ++p)
        for (int c = 0; c < 3; ++c) dst[(i * 3 + c) * px + p] = img.rgb[p * 3 + c] / 127.5f - 1.0f;
    }
    for (int l = 0; l < 4; ++l) {
      const auto name = "conv" + std::to_string(l);
      x = num::leaky_relu(num::conv2d(x, params_.get(name + ".weight"), params_.get(name + ".bias"), 2, 1), 0.1f);
    }
    const int c = x.dim(1);
    const std::size_t area = static_cast<std::size_t>(x.dim(2)) * x.dim(3);
    Tensor pooled({n, c});
    for (int i = 0; i < n; ++i) {
      for (int k = 0; k < c; ++k) {
        double s = 0.0;
        for (std::size_t p = 0; p < area; ++p) s += x.data()[(i * c + k) * area + p];
        pooled.data()[i * c + k] = static_cast<float>(s / area);
      }
    }
    const Tensor e = num::linear_rows(pooled, params_.get("proj.weight"), params_.get("proj.bias"));
    for (int i = 0; i < n; ++i)
      for (int k = 0; k < kEmbeddingDim; ++k) out(static_cast<Eigen::Index>(start) + i, k) = e.data()[i * kEmbeddingDim + k];
  }
  return out;
}

Eigen::VectorXd EmbeddingNet::embed(const data::Image& image) const {
  return embed(std::vector<data::Image>{image}).row(0).transpose();
}

}  // namespace layoutgen::metrics
