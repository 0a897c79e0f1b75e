#pragma once

#include <Eigen/Dense>
#include <vector>

#include "layoutgen/data/raster.hpp"
#include "layoutgen/model/params.hpp"

namespace layoutgen::metrics {

inline constexpr int kEmbeddingDim = 64;

/// Untrained convolutional encoder with weights fixed by a constant seed:
/// four stride-2 3x3 convs (3->16->32->64->64) with leaky ReLU, global
/// average, then a 64->64 linear map.
class EmbeddingNet {
 public:
  explicit EmbeddingNet(int resolution);

  int resolution() const { return resolution_; }
  /// One row per image. Throws std::invalid_argument on a size mismatch.
  Eigen::MatrixXd embed(const std::vector<data::Image>& images) const;
  Eigen::VectorXd embed(const data::Image& image) const;

 private:
  int resolution_;
  model::ParamSet params_;
};

}  // namespace layoutgen::metrics
