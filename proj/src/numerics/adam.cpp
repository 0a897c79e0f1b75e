#include "layoutgen/numerics/adam.hpp"

#include <cmath>
#include <string>

namespace layoutgen::num {

AdamState::AdamState(AdamConfig cfg, std::span<const Tensor> params) : config(cfg) {
  for (const auto& p : params) {
    first_moment.emplace_back(p.numel(), 0.0f);
    second_moment.emplace_back(p.numel(), 0.0f);
  }
}

void adam_step(std::span<Tensor> params, std::span<const Tensor> grads, AdamState& state) {
  if (params.size() != grads.size() || params.size() != state.first_moment.size()) {
    throw DimensionError("adam_step: " + std::to_string(params.size()) + " params, " +
                         std::to_string(grads.size()) + " grads, " +
                         std::to_string(state.first_moment.size()) + " moment slots");
  }
  for (std::size_t i = 0; i < params.size(); ++i) {
    if (params[i].shape() != grads[i].shape() || state.first_moment[i].size() != params[i].numel()) {
      throw DimensionError("adam_step: parameter " + std::to_string(i) + " has shape " +
                           to_string(params[i].shape()) + " but gradient " +
                           to_string(grads[i].shape()));
    }
  }
  const auto& c = state.config;
  state.step += 1;
  const double bc1 = 1.0 - std::pow(static_cast<double>(c.b1), static_cast<double>(state.step));
  const double bc2 = 1.0 - std::pow(static_cast<double>(c.b2), static_cast<double>(state.step));
  for (std::size_t i = 0; i < params.size(); ++i) {
    auto p = params[i].data();
    auto g = grads[i].data();
    auto& m = state.first_moment[i];
    auto& v = state.second_moment[i];
    for (std::size_t j = 0; j < p.size(); ++j) {
      m[j] = c.b1 * m[j] + (1.0f - c.b1) * g[j];
      v[j] = c.b2 * v[j] + (1.0f - c.b2) * g[j] * g[j];
      const double m_hat = m[j] / bc1;
      const double v_hat = v[j] / bc2;
      p[j] -= static_cast<float>(c.lr * m_hat / (std::sqrt(v_hat) + c.epsilon));
    }
  }
}

}  // namespace layoutgen::num
