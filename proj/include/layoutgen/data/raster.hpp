#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <vector>

#include "layoutgen/graphs/diagram.hpp"

namespace layoutgen::data {

using Rgb = std::array<std::uint8_t, 3>;

/// Display color per type code.
const std::array<Rgb, graphs::kTypeCount>& color_table();
inline constexpr Rgb kBackground = {255, 255, 255};

struct Image {
  int width = 0;
  int height = 0;
  std::vector<std::uint8_t> rgb;  // row-major, 3 bytes per pixel
  bool operator==(const Image&) const = default;
};

/// Occupied pixels painted in component order (rooms, then doors on top);
/// later components win. Unoccupied pixels stay white.
Image rasterize(const graphs::LayoutMasks& masks, const graphs::BubbleDiagram& d);

void write_ppm(const std::filesystem::path& path, const Image& img);
Image read_ppm(const std::filesystem::path& path);

}  // namespace layoutgen::data
