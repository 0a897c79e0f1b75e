#include "layoutgen/data/raster.hpp"

#include <fstream>
#include <stdexcept>
#include <string>

namespace layoutgen::data {

const std::array<Rgb, graphs::kTypeCount>& color_table() {
  static const std::array<Rgb, graphs::kTypeCount> table = {{
      {238, 77, 77},    // living room
      {198, 124, 123},  // kitchen
      {255, 210, 116},  // bedroom
      {190, 190, 190},  // balcony
      {191, 227, 232},  // entrance
      {123, 167, 121},  // dining room
      {232, 122, 144},  // study room
      {255, 140, 105},  // storage
      {31, 78, 121},    // unknown
      {114, 113, 113},  // outside
      {211, 162, 199},  // interior door
      {60, 60, 60},     // front door
  }};
  return table;
}

Image rasterize(const graphs::LayoutMasks& masks, const graphs::BubbleDiagram& d) {
  const auto comps = graphs::components(d);
  if (static_cast<int>(comps.size()) != masks.count) throw std::invalid_argument("rasterize: mask count mismatch");
  Image img{masks.resolution, masks.resolution, {}};
  img.rgb.resize(masks.pixels() * 3);
  for (std::size_t p = 0; p < masks.pixels(); ++p)
    for (int c = 0; c < 3; ++c) img.rgb[p * 3 + c] = kBackground[c];
  for (std::size_t i = 0; i < comps.size(); ++i) {
    const Rgb& color = color_table()[comps[i].type];
    const auto m = masks.mask(static_cast<int>(i));
    for (std::size_t p = 0; p < m.size(); ++p) {
      if (m[p] <= 0.0f) continue;
      for (int c = 0; c < 3; ++c) img.rgb[p * 3 + c] = color[c];
    }
  }
  return img;
}

void write_ppm(const std::filesystem::path& path, const Image& img) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << "P6\n" << img.width << ' ' << img.height << "\n255\n";
  out.write(reinterpret_cast<const char*>(img.rgb.data()), static_cast<std::streamsize>(img.rgb.size()));
  if (!out) throw std::runtime_error("write failed for " + path.string());
}

Image read_ppm(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  std::string magic;
  int maxval = 0;
  Image img;
  if (!(in >> magic >> img.width >> img.height >> maxval) || magic != "P6" || maxval != 255 ||
      img.width <= 0 || img.height <= 0) {
    throw std::runtime_error("not a P6 image: " + path.string());
  }
  in.get();
  img.rgb.resize(static_cast<std::size_t>(img.width) * img.height * 3);
  if (!in.read(reinterpret_cast<char*>(img.rgb.data()), static_cast<std::streamsize>(img.rgb.size()))) {
    throw std::runtime_error("truncated image: " + path.string());
  }
  return img;
}

}  // namespace layoutgen::data
