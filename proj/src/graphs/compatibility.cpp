#include "layoutgen/graphs/compatibility.hpp"

#include <algorithm>
#include <set>
#include <utility>

namespace layoutgen::graphs {

namespace {

struct Door {
  int lo, hi, type;
};

std::vector<Door> doors(const BubbleDiagram& d) {
  std::vector<Door> out;
  for (const auto& e : d.edges) out.push_back({std::min(e.a, e.b), std::max(e.a, e.b), e.type});
  return out;
}

bool augment(int u, const std::vector<std::vector<int>>& adj, std::vector<int>& match,
             std::vector<char>& seen) {
  for (int v : adj[u]) {
    if (seen[v]) continue;
    seen[v] = 1;
    if (match[v] < 0 || augment(match[v], adj, match, seen)) {
      match[v] = u;
      return true;
    }
  }
  return false;
}

}  // namespace

int compatibility_distance(const BubbleDiagram& d_in, const BubbleDiagram& d_out) {
  const int outside = code(ComponentType::outside);
  std::set<int> rooms_in, rooms_out;
  for (const auto& n : d_in.nodes)
    if (n.type != outside) rooms_in.insert(n.id);
  for (const auto& n : d_out.nodes)
    if (n.type != outside) rooms_out.insert(n.id);
  int cost = 0;
  for (int id : rooms_in) cost += !rooms_out.contains(id);
  for (int id : rooms_out) cost += !rooms_in.contains(id);

  // Exact matches cost nothing; what is left is paired up where one edit
  // (a relabel or a move to other rooms) turns one door into the other.
  auto in = doors(d_in), out = doors(d_out);
  std::vector<char> used(out.size(), 0);
  std::vector<Door> rest_in;
  for (const auto& a : in) {
    bool hit = false;
    for (std::size_t j = 0; j < out.size() && !hit; ++j) {
      if (!used[j] && out[j].lo == a.lo && out[j].hi == a.hi && out[j].type == a.type) {
        used[j] = 1;
        hit = true;
      }
    }
    if (!hit) rest_in.push_back(a);
  }
  std::vector<Door> rest_out;
  for (std::size_t j = 0; j < out.size(); ++j)
    if (!used[j]) rest_out.push_back(out[j]);

  std::vector<std::vector<int>> adj(rest_in.size());
  for (std::size_t i = 0; i < rest_in.size(); ++i) {
    for (std::size_t j = 0; j < rest_out.size(); ++j) {
      const bool same_rooms = rest_in[i].lo == rest_out[j].lo && rest_in[i].hi == rest_out[j].hi;
      const bool same_type = rest_in[i].type == rest_out[j].type;
      if (same_rooms != same_type) adj[i].push_back(static_cast<int>(j));
    }
  }
  std::vector<int> match(rest_out.size(), -1);
  int matched = 0;
  for (std::size_t i = 0; i < rest_in.size(); ++i) {
    std::vector<char> seen(rest_out.size(), 0);
    matched += augment(static_cast<int>(i), adj, match, seen);
  }
  return cost + static_cast<int>(rest_in.size() + rest_out.size()) - matched;
}

}  // namespace layoutgen::graphs
