#pragma once

#include <span>
#include <vector>

#include "layoutgen/numerics/tensor.hpp"

namespace layoutgen::num {

struct AdamConfig {
  float lr = 1e-4f;
  float b1 = 0.5f;
  float b2 = 0.999f;
  float epsilon = 1e-8f;
};

struct AdamState {
  AdamConfig config;
  long step = 0;
  std::vector<std::vector<float>> first_moment;
  std::vector<std::vector<float>> second_moment;

  AdamState() = default;
  AdamState(AdamConfig cfg, std::span<const Tensor> params);
};

/// One bias-corrected Adam update applied in place to `params`.
void adam_step(std::span<Tensor> params, std::span<const Tensor> grads, AdamState& state);

}  // namespace layoutgen::num
