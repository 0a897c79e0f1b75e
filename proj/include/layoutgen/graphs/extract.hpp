#pragma once

#include <optional>
#include <utility>
#include <vector>

#include "layoutgen/graphs/diagram.hpp"

namespace layoutgen::graphs {

struct ExtractionConfig {
  int area_min = 10;  // occupied pixels for a room to count as present
  int dilation = 2;   // box dilation applied to door masks, in pixels

  /// Defaults scaled from the 64x64 values: area by s^2, dilation by s.
  static ExtractionConfig for_resolution(int resolution);
};

/// Per-component result of reading a diagram back from masks.
struct Extraction {
  BubbleDiagram diagram;
  /// Indexed by position in d_in.edges; unset when fewer than two candidates
  /// touch the door. Endpoints follow the input orientation when they match.
  std::vector<std::optional<std::pair<int, int>>> door_endpoints;
  /// Indexed by position in components(d_in); rooms only, doors are false.
  std::vector<bool> present;
};

/// Rooms are present when their occupied area reaches `area_min`. Each door's
/// endpoints are the two candidates (present rooms, plus the exterior when
/// d_in has an outside node) with the largest positive overlap with the
/// dilated door. Ties go to the earlier component, the exterior last.
Extraction extract_layout(const LayoutMasks& masks, const BubbleDiagram& d_in,
                          const ExtractionConfig& cfg);

BubbleDiagram extract_diagram(const LayoutMasks& masks, const BubbleDiagram& d_in,
                              const ExtractionConfig& cfg);

/// Doors: reconstructed with exactly their intended endpoints. Rooms: present
/// and every incident input door reconstructed correctly.
bool component_compatible(const BubbleDiagram& d_in, const Extraction& ex, const Component& c);
bool component_compatible(const BubbleDiagram& d_in, const LayoutMasks& masks, const Component& c,
                          const ExtractionConfig& cfg);
/// Flags for every component of d_in, in components() order.
std::vector<bool> compatibility_flags(const BubbleDiagram& d_in, const Extraction& ex);

}  // namespace layoutgen::graphs
