#pragma once

#include <string>

namespace layoutgen::model {

enum class Pooling { sum, mean };

std::string to_string(Pooling p);
Pooling pooling_from_string(const std::string& s);

struct ModelConfig {
  int resolution = 64;
  int base_channels = 16;
  int noise_dim = 128;
  int mpn_rounds_per_scale = 1;
  Pooling pooling = Pooling::sum;
  float leaky_alpha = 0.1f;

  /// Resolution 32, base_channels 8, noise_dim 32.
  static ModelConfig desk_scale();

  /// Throws std::invalid_argument unless resolution is 32 or 64 and every
  /// width is positive.
  void validate() const;

  /// Number of x2 upsampling stages from the 8x8 base (2 or 3).
  int upsamples() const;
  /// Channels of a component feature volume: noise/type part plus condition part.
  int feature_channels() const { return 2 * base_channels; }
  bool operator==(const ModelConfig&) const = default;
};

inline constexpr int kBaseSize = 8;

}  // namespace layoutgen::model
