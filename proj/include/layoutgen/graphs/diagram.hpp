#pragma once

#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace layoutgen::graphs {

/// Room and door type codes. The order is fixed: it indexes the 12-d type
/// vector, the refinement schedules, and the color table.
enum class ComponentType : int {
  living_room = 0,
  kitchen = 1,
  bedroom = 2,
  balcony = 3,
  entrance = 4,
  dining_room = 5,
  study_room = 6,
  storage = 7,
  unknown = 8,
  outside = 9,
  interior_door = 10,
  front_door = 11,
};

inline constexpr int kTypeCount = 12;

constexpr int code(ComponentType t) { return static_cast<int>(t); }
constexpr bool is_room_type(int c) { return c >= 0 && c <= 9; }
constexpr bool is_door_type(int c) { return c == 10 || c == 11; }
std::string_view type_name(int c);

struct Node {
  int id = 0;
  int type = 0;
  bool operator==(const Node&) const = default;
};

struct Edge {
  int a = 0;
  int b = 0;
  int type = code(ComponentType::interior_door);
  bool operator==(const Edge&) const = default;
};

struct BubbleDiagram {
  std::vector<Node> nodes;
  std::vector<Edge> edges;

  bool operator==(const BubbleDiagram&) const = default;

  const Node* find_node(int id) const;
  std::optional<int> outside_id() const;
  /// Rooms that carry a mask, i.e. every node except "outside".
  int room_count() const;
};

struct Violation {
  std::string code;  // e.g. "dangling edge"
  std::string detail;
};

/// Every structural problem in `d`; empty when the diagram is valid.
std::vector<Violation> validate_diagram(const BubbleDiagram& d);

enum class ComponentKind { node, edge };

/// A mask-carrying element of a diagram. `index` is the node id for rooms and
/// the position in `edges` for doors.
struct Component {
  ComponentKind kind = ComponentKind::node;
  int index = 0;
  int type = 0;
  bool operator==(const Component&) const = default;
};

/// Mask-carrying components: rooms in node-list order (skipping "outside"),
/// then doors in edge-list order. Every per-component array in the project
/// (masks, conditions, features) uses this order.
std::vector<Component> components(const BubbleDiagram& d);

/// Position of `c` in components(d); throws std::invalid_argument if absent.
int component_position(const BubbleDiagram& d, const Component& c);

/// Dataset key: "n<id>" for rooms, "e<a>_<b>" for doors.
std::string component_key(const BubbleDiagram& d, const Component& c);

/// Message-passing neighbourhoods over component positions. A room's
/// neighbours are the rooms it connects to and the doors in between; a door's
/// neighbours are its endpoint rooms. "outside" carries no features and never
/// appears.
struct ComponentGraph {
  std::vector<std::vector<int>> neighbors;
  std::vector<std::vector<int>> complement;
};

ComponentGraph component_graph(const BubbleDiagram& d);

std::vector<Component> neighbors(const BubbleDiagram& d, const Component& c);
std::vector<Component> complement_neighbors(const BubbleDiagram& d, const Component& c);

/// One R x R real-valued mask per component (components(d) order); a pixel
/// is occupied iff its value is > 0.
struct LayoutMasks {
  int resolution = 0;
  int count = 0;
  std::vector<float> values;  // count * resolution^2

  LayoutMasks() = default;
  LayoutMasks(int count, int resolution, float fill = -1.0f);

  std::size_t pixels() const { return static_cast<std::size_t>(resolution) * resolution; }
  std::span<float> mask(int i) { return std::span(values).subspan(i * pixels(), pixels()); }
  std::span<const float> mask(int i) const { return std::span(values).subspan(i * pixels(), pixels()); }
  bool operator==(const LayoutMasks&) const = default;
};

}  // namespace layoutgen::graphs
