#include "layoutgen/graphs/diagram.hpp"

#include <algorithm>
#include <array>
#include <set>
#include <stdexcept>
#include <unordered_map>
#include <unordered_set>

namespace layoutgen::graphs {

std::string_view type_name(int c) {
  static constexpr std::array<std::string_view, kTypeCount> names = {
      "living room", "kitchen",    "bedroom", "balcony", "entrance",      "dining room",
      "study room",  "storage",    "unknown", "outside", "interior door", "front door"};
  if (c < 0 || c >= kTypeCount) return "invalid";
  return names[c];
}

const Node* BubbleDiagram::find_node(int id) const {
  for (const auto& n : nodes)
    if (n.id == id) return &n;
  return nullptr;
}

std::optional<int> BubbleDiagram::outside_id() const {
  for (const auto& n : nodes)
    if (n.type == code(ComponentType::outside)) return n.id;
  return std::nullopt;
}

int BubbleDiagram::room_count() const {
  return static_cast<int>(std::count_if(nodes.begin(), nodes.end(), [](const Node& n) {
    return n.type != code(ComponentType::outside);
  }));
}

std::vector<Violation> validate_diagram(const BubbleDiagram& d) {
  std::vector<Violation> out;
  auto report = [&](std::string code, std::string detail) {
    out.push_back({std::move(code), std::move(detail)});
  };

  std::unordered_map<int, int> type_of;
  int outside_count = 0;
  for (const auto& n : d.nodes) {
    if (!type_of.emplace(n.id, n.type).second) {
      report("duplicate node id", "node " + std::to_string(n.id));
    }
    if (!is_room_type(n.type)) {
      report("invalid room type", "node " + std::to_string(n.id) + " has type " + std::to_string(n.type));
    }
    if (n.type == code(ComponentType::outside)) ++outside_count;
  }
  if (outside_count > 1) report("multiple outside nodes", std::to_string(outside_count) + " found");

  std::set<std::pair<int, int>> pairs;
  const int outside = code(ComponentType::outside);
  for (std::size_t i = 0; i < d.edges.size(); ++i) {
    const auto& e = d.edges[i];
    const std::string where = "edge " + std::to_string(i) + " (" + std::to_string(e.a) + "," +
                              std::to_string(e.b) + ")";
    if (!is_door_type(e.type)) report("invalid door type", where + " has type " + std::to_string(e.type));
    const bool has_a = type_of.contains(e.a), has_b = type_of.contains(e.b);
    if (!has_a || !has_b) {
      report("dangling edge", where);
      continue;
    }
    if (e.a == e.b) {
      report("self loop", where);
      continue;
    }
    if (!pairs.emplace(std::min(e.a, e.b), std::max(e.a, e.b)).second) {
      report("duplicate edge", where);
    }
    const int outside_ends = (type_of[e.a] == outside) + (type_of[e.b] == outside);
    if (e.type == code(ComponentType::front_door) && outside_ends != 1) {
      report("front door without outside endpoint", where);
    }
    if (e.type == code(ComponentType::interior_door) && outside_ends != 0) {
      report("interior door touching outside", where);
    }
  }
  return out;
}

std::vector<Component> components(const BubbleDiagram& d) {
  std::vector<Component> out;
  for (const auto& n : d.nodes) {
    if (n.type == code(ComponentType::outside)) continue;
    out.push_back({ComponentKind::node, n.id, n.type});
  }
  for (std::size_t i = 0; i < d.edges.size(); ++i) {
    out.push_back({ComponentKind::edge, static_cast<int>(i), d.edges[i].type});
  }
  return out;
}

int component_position(const BubbleDiagram& d, const Component& c) {
  const auto all = components(d);
  for (std::size_t i = 0; i < all.size(); ++i) {
    if (all[i].kind == c.kind && all[i].index == c.index) return static_cast<int>(i);
  }
  throw std::invalid_argument("unknown component");
}

std::string component_key(const BubbleDiagram& d, const Component& c) {
  if (c.kind == ComponentKind::node) return "n" + std::to_string(c.index);
  if (c.index < 0 || c.index >= static_cast<int>(d.edges.size())) {
    throw std::invalid_argument("unknown component");
  }
  const auto& e = d.edges[c.index];
  return "e" + std::to_string(e.a) + "_" + std::to_string(e.b);
}

ComponentGraph component_graph(const BubbleDiagram& d) {
  const auto comps = components(d);
  const int n = static_cast<int>(comps.size());
  std::unordered_map<int, int> room_pos;
  for (int i = 0; i < n; ++i)
    if (comps[i].kind == ComponentKind::node) room_pos[comps[i].index] = i;

  std::vector<std::set<int>> adj(n);
  for (int i = 0; i < n; ++i) {
    if (comps[i].kind != ComponentKind::edge) continue;
    const auto& e = d.edges[comps[i].index];
    auto ia = room_pos.find(e.a);
    auto ib = room_pos.find(e.b);
    const bool a_ok = ia != room_pos.end(), b_ok = ib != room_pos.end();
    if (a_ok) {
      adj[i].insert(ia->second);
      adj[ia->second].insert(i);
    }
    if (b_ok) {
      adj[i].insert(ib->second);
      adj[ib->second].insert(i);
    }
    if (a_ok && b_ok && ia->second != ib->second) {
      adj[ia->second].insert(ib->second);
      adj[ib->second].insert(ia->second);
    }
  }

  ComponentGraph g;
  g.neighbors.resize(n);
  g.complement.resize(n);
  for (int i = 0; i < n; ++i) {
    adj[i].erase(i);
    g.neighbors[i].assign(adj[i].begin(), adj[i].end());
    for (int j = 0; j < n; ++j)
      if (j != i && !adj[i].contains(j)) g.complement[i].push_back(j);
  }
  return g;
}

namespace {
std::vector<Component> pick(const std::vector<Component>& all, const std::vector<int>& idx) {
  std::vector<Component> out;
  out.reserve(idx.size());
  for (int i : idx) out.push_back(all[i]);
  return out;
}
}  // namespace

std::vector<Component> neighbors(const BubbleDiagram& d, const Component& c) {
  const int pos = component_position(d, c);
  return pick(components(d), component_graph(d).neighbors[pos]);
}

std::vector<Component> complement_neighbors(const BubbleDiagram& d, const Component& c) {
  const int pos = component_position(d, c);
  return pick(components(d), component_graph(d).complement[pos]);
}

LayoutMasks::LayoutMasks(int count_, int resolution_, float fill)
    : resolution(resolution_),
      count(count_),
      values(static_cast<std::size_t>(count_) * resolution_ * resolution_, fill) {}

}  // namespace layoutgen::graphs
