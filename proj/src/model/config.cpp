#include "layoutgen/model/config.hpp"

#include <stdexcept>

namespace layoutgen::model {

std::string to_string(Pooling p) { return p == Pooling::sum ? "sum" : "mean"; }

Pooling pooling_from_string(const std::string& s) {
  if (s == "sum") return Pooling::sum;
  if (s == "mean") return Pooling::mean;
  throw std::invalid_argument("unknown pooling \"" + s + "\" (expected sum or mean)");
}

ModelConfig ModelConfig::desk_scale() {
  ModelConfig c;
  c.resolution = 32;
  c.base_channels = 8;
  c.noise_dim = 32;
  return c;
}

void ModelConfig::validate() const {
  if (resolution != 32 && resolution != 64) {
    throw std::invalid_argument("resolution must be 32 or 64, got " + std::to_string(resolution));
  }
  if (base_channels < 1 || noise_dim < 1 || mpn_rounds_per_scale < 0) {
    throw std::invalid_argument("base_channels and noise_dim must be positive, mpn_rounds_per_scale non-negative");
  }
  if (!(leaky_alpha >= 0.0f && leaky_alpha < 1.0f)) throw std::invalid_argument("leaky_alpha must be in [0, 1)");
}

int ModelConfig::upsamples() const { return resolution == 64 ? 3 : 2; }

}  // namespace layoutgen::model
