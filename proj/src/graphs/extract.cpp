#include "layoutgen/graphs/extract.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace layoutgen::graphs {

ExtractionConfig ExtractionConfig::for_resolution(int resolution) {
  const double s = resolution / 64.0;
  ExtractionConfig cfg;
  cfg.area_min = std::max(1, static_cast<int>(std::lround(10.0 * s * s)));
  cfg.dilation = std::max(1, static_cast<int>(std::lround(2.0 * s)));
  return cfg;
}

namespace {

std::vector<unsigned char> dilate(std::span<const float> mask, int r, int radius) {
  std::vector<unsigned char> rows(mask.size(), 0), out(mask.size(), 0);
  // Separable box dilation: horizontal pass, then vertical.
  for (int y = 0; y < r; ++y) {
    for (int x = 0; x < r; ++x) {
      if (mask[y * r + x] <= 0.0f) continue;
      const int x0 = std::max(0, x - radius), x1 = std::min(r - 1, x + radius);
      for (int xx = x0; xx <= x1; ++xx) rows[y * r + xx] = 1;
    }
  }
  for (int y = 0; y < r; ++y) {
    for (int x = 0; x < r; ++x) {
      if (!rows[y * r + x]) continue;
      const int y0 = std::max(0, y - radius), y1 = std::min(r - 1, y + radius);
      for (int yy = y0; yy <= y1; ++yy) out[yy * r + x] = 1;
    }
  }
  return out;
}

}  // namespace

Extraction extract_layout(const LayoutMasks& masks, const BubbleDiagram& d_in,
                          const ExtractionConfig& cfg) {
  const auto comps = components(d_in);
  if (masks.count != static_cast<int>(comps.size())) {
    throw std::invalid_argument("extract: " + std::to_string(masks.count) + " masks for " +
                                std::to_string(comps.size()) + " components");
  }
  if (cfg.area_min < 0 || cfg.dilation < 0) throw std::invalid_argument("extract: negative threshold");
  const int r = masks.resolution;
  const std::size_t px = masks.pixels();

  Extraction ex;
  ex.present.assign(comps.size(), false);
  std::vector<int> rooms;  // positions of present rooms
  for (std::size_t i = 0; i < comps.size(); ++i) {
    if (comps[i].kind != ComponentKind::node) continue;
    const auto m = masks.mask(static_cast<int>(i));
    const auto area = std::count_if(m.begin(), m.end(), [](float v) { return v > 0.0f; });
    if (area >= cfg.area_min) {
      ex.present[i] = true;
      rooms.push_back(static_cast<int>(i));
    }
  }

  const auto outside = d_in.outside_id();
  std::vector<unsigned char> exterior;
  if (outside) {
    exterior.assign(px, 1);
    for (int pos : rooms) {
      const auto m = masks.mask(pos);
      for (std::size_t p = 0; p < px; ++p)
        if (m[p] > 0.0f) exterior[p] = 0;
    }
  }

  for (const auto& n : d_in.nodes) {
    const bool is_outside = outside && n.id == *outside;
    if (is_outside ? !rooms.empty() : ex.present[component_position(d_in, {ComponentKind::node, n.id, n.type})]) {
      ex.diagram.nodes.push_back(n);
    }
  }

  ex.door_endpoints.resize(d_in.edges.size());
  for (std::size_t i = 0; i < comps.size(); ++i) {
    if (comps[i].kind != ComponentKind::edge) continue;
    const auto grown = dilate(masks.mask(static_cast<int>(i)), r, cfg.dilation);

    // (count, node id) per candidate in tie-break order.
    std::vector<std::pair<long, int>> counts;
    for (int pos : rooms) {
      const auto m = masks.mask(pos);
      long c = 0;
      for (std::size_t p = 0; p < px; ++p) c += grown[p] && m[p] > 0.0f;
      counts.emplace_back(c, comps[pos].index);
    }
    if (outside) {
      long c = 0;
      for (std::size_t p = 0; p < px; ++p) c += grown[p] && exterior[p];
      counts.emplace_back(c, *outside);
    }
    std::vector<int> order(counts.size());
    for (std::size_t k = 0; k < order.size(); ++k) order[k] = static_cast<int>(k);
    std::stable_sort(order.begin(), order.end(),
                     [&](int a, int b) { return counts[a].first > counts[b].first; });
    if (order.size() < 2 || counts[order[1]].first <= 0) continue;

    const int first = std::min(order[0], order[1]), second = std::max(order[0], order[1]);
    int u = counts[first].second, v = counts[second].second;
    const Edge& e = d_in.edges[comps[i].index];
    if (u == e.b && v == e.a) std::swap(u, v);
    ex.door_endpoints[comps[i].index] = std::make_pair(u, v);
    ex.diagram.edges.push_back({u, v, e.type});
  }
  return ex;
}

BubbleDiagram extract_diagram(const LayoutMasks& masks, const BubbleDiagram& d_in,
                              const ExtractionConfig& cfg) {
  return extract_layout(masks, d_in, cfg).diagram;
}

namespace {

bool door_ok(const BubbleDiagram& d_in, const Extraction& ex, int edge) {
  const auto& got = ex.door_endpoints[edge];
  const auto& e = d_in.edges[edge];
  return got && ((got->first == e.a && got->second == e.b) || (got->first == e.b && got->second == e.a));
}

}  // namespace

bool component_compatible(const BubbleDiagram& d_in, const Extraction& ex, const Component& c) {
  const int pos = component_position(d_in, c);
  if (c.kind == ComponentKind::edge) return door_ok(d_in, ex, c.index);
  if (!ex.present[pos]) return false;
  for (std::size_t k = 0; k < d_in.edges.size(); ++k) {
    const auto& e = d_in.edges[k];
    if ((e.a == c.index || e.b == c.index) && !door_ok(d_in, ex, static_cast<int>(k))) return false;
  }
  return true;
}

bool component_compatible(const BubbleDiagram& d_in, const LayoutMasks& masks, const Component& c,
                          const ExtractionConfig& cfg) {
  return component_compatible(d_in, extract_layout(masks, d_in, cfg), c);
}

std::vector<bool> compatibility_flags(const BubbleDiagram& d_in, const Extraction& ex) {
  std::vector<bool> ok;
  for (const auto& c : components(d_in)) ok.push_back(component_compatible(d_in, ex, c));
  return ok;
}

}  // namespace layoutgen::graphs
