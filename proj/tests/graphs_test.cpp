#include <algorithm>
#include <chrono>
#include <random>
#include <set>

#include "doctest.h"
#include "layoutgen/data/synthetic.hpp"
#include "layoutgen/graphs/compatibility.hpp"
#include "layoutgen/graphs/extract.hpp"
#include "support/oracles.hpp"

using namespace layoutgen;
using namespace layoutgen::graphs;

namespace {

BubbleDiagram five_rooms_with_outside() {
  BubbleDiagram d;
  d.nodes = {{0, 0}, {1, 1}, {2, 2}, {3, 2}, {4, 3}, {9, 9}};
  d.edges = {{0, 1, 10}, {0, 2, 10}, {0, 3, 10}, {2, 4, 10}, {0, 9, 11}};
  return d;
}

bool has_code(const std::vector<Violation>& v, const std::string& code) {
  return std::any_of(v.begin(), v.end(), [&](const Violation& x) { return x.code == code; });
}

std::set<int> positions(const BubbleDiagram& d, const std::vector<Component>& cs) {
  std::set<int> out;
  for (const auto& c : cs) out.insert(component_position(d, c));
  return out;
}

}  // namespace

TEST_CASE("validate_diagram") {
  CHECK(validate_diagram(five_rooms_with_outside()).empty());

  auto d = five_rooms_with_outside();
  d.edges.push_back({0, 42, 10});
  CHECK(has_code(validate_diagram(d), "dangling edge"));

  d = five_rooms_with_outside();
  d.edges.push_back({1, 3, 11});
  CHECK(has_code(validate_diagram(d), "front door without outside endpoint"));

  d = five_rooms_with_outside();
  d.edges.push_back({1, 9, 10});
  CHECK(has_code(validate_diagram(d), "interior door touching outside"));

  d = five_rooms_with_outside();
  d.nodes.push_back({1, 4});
  d.nodes.push_back({10, 9});
  d.nodes.push_back({11, 10});
  d.edges.push_back({1, 0, 10});
  d.edges.push_back({2, 2, 10});
  d.edges.push_back({3, 4, 7});
  const auto v = validate_diagram(d);
  for (const char* c : {"duplicate node id", "multiple outside nodes", "invalid room type", "duplicate edge",
                        "self loop", "invalid door type"}) {
    CAPTURE(c);
    CHECK(has_code(v, c));
  }
}

TEST_CASE("components, keys and neighbourhoods") {
  BubbleDiagram ab;
  ab.nodes = {{0, 0}, {1, 2}};
  ab.edges = {{0, 1, 10}};
  const auto cs = components(ab);
  REQUIRE(cs.size() == 3);
  CHECK(component_key(ab, cs[0]) == "n0");
  CHECK(component_key(ab, cs[2]) == "e0_1");
  CHECK(positions(ab, neighbors(ab, cs[0])) == std::set<int>{1, 2});
  CHECK(positions(ab, neighbors(ab, cs[2])) == std::set<int>{0, 1});
  for (const auto& c : cs) CHECK(complement_neighbors(ab, c).empty());

  BubbleDiagram lone;
  lone.nodes = {{0, 1}};
  CHECK(neighbors(lone, components(lone)[0]).empty());

  BubbleDiagram front;
  front.nodes = {{0, 0}, {1, 9}};
  front.edges = {{0, 1, 11}};
  const auto fc = components(front);
  REQUIRE(fc.size() == 2);  // the outside node carries no mask
  CHECK(positions(front, neighbors(front, fc[1])) == std::set<int>{0});
  CHECK(positions(front, neighbors(front, fc[0])) == std::set<int>{1});

  BubbleDiagram abc;
  abc.nodes = {{0, 0}, {1, 1}, {2, 2}};
  abc.edges = {{0, 1, 10}};
  CHECK(positions(abc, complement_neighbors(abc, components(abc)[0])) == std::set<int>{2});
}

TEST_CASE("neighbourhoods partition the components") {
  std::mt19937_64 rng(4);
  for (int t = 0; t < 200; ++t) {
    const auto d = testing::random_diagram(rng, 2 + t % 5, 6);
    const auto g = component_graph(d);
    const int n = static_cast<int>(components(d).size());
    for (int i = 0; i < n; ++i) {
      std::set<int> all(g.neighbors[i].begin(), g.neighbors[i].end());
      for (int j : g.complement[i]) CHECK(all.insert(j).second);
      CHECK(!all.contains(i));
      all.insert(i);
      CHECK(static_cast<int>(all.size()) == n);
      for (int j : g.neighbors[i]) {
        const auto& back = g.neighbors[j];
        CHECK(std::find(back.begin(), back.end(), i) != back.end());
      }
    }
  }
}

TEST_CASE("every 3-node diagram keeps pools and distances well defined") {
  // All type assignments from {room, outside} and every door subset.
  for (int outside_at = -1; outside_at < 3; ++outside_at) {
    for (int mask = 0; mask < 8; ++mask) {
      BubbleDiagram d;
      for (int i = 0; i < 3; ++i) d.nodes.push_back({i, i == outside_at ? 9 : 2});
      const std::pair<int, int> pairs[] = {{0, 1}, {0, 2}, {1, 2}};
      for (int e = 0; e < 3; ++e) {
        if (!(mask >> e & 1)) continue;
        const auto [a, b] = pairs[e];
        d.edges.push_back({a, b, (a == outside_at || b == outside_at) ? 11 : 10});
      }
      REQUIRE(validate_diagram(d).empty());
      const auto g = component_graph(d);
      CHECK(g.neighbors.size() == components(d).size());
      CHECK(compatibility_distance(d, d) == 0);
      CHECK(compatibility_distance(d, BubbleDiagram{}) == testing::brute_force_edit_distance(d, BubbleDiagram{}));
    }
  }
}

TEST_CASE("extraction on the three-room fixture") {
  for (int r : {32, 64}) {
    CAPTURE(r);
    const auto d = testing::three_room_diagram();
    auto m = testing::three_room_masks(r);
    const auto cfg = ExtractionConfig::for_resolution(r);
    CHECK(extract_diagram(m, d, cfg) == d);
    const auto ex = extract_layout(m, d, cfg);
    for (bool ok : compatibility_flags(d, ex)) CHECK(ok);

    // Move door A-B onto the B-C wall.
    auto moved = m;
    auto door = moved.mask(3);
    std::fill(door.begin(), door.end(), -1.0f);
    const int w = r / 3;
    for (int y = 4; y < 8; ++y)
      for (int x = 2 * w - 2; x < 2 * w + 2; ++x) door[y * r + x] = 1.0f;
    const auto out = extract_diagram(moved, d, cfg);
    REQUIRE(out.edges.size() == 2);
    CHECK(std::min(out.edges[0].a, out.edges[0].b) == 1);
    CHECK(std::max(out.edges[0].a, out.edges[0].b) == 2);
    CHECK(compatibility_distance(d, out) == 1);
    const auto flags = compatibility_flags(d, extract_layout(moved, d, cfg));
    CHECK(flags == std::vector<bool>{false, false, true, false, true});

    // Empty room A: A and its door lose compatibility.
    auto no_a = m;
    std::fill(no_a.mask(0).begin(), no_a.mask(0).end(), -1.0f);
    const auto f2 = compatibility_flags(d, extract_layout(no_a, d, cfg));
    CHECK(!f2[0]);
    CHECK(!f2[3]);
    CHECK(component_compatible(d, no_a, components(d)[2], cfg));

    const LayoutMasks empty(5, r);
    const auto none = extract_diagram(empty, d, cfg);
    CHECK(none.nodes.empty());
    CHECK(none.edges.empty());
  }
}

TEST_CASE("extraction thresholds scale with resolution") {
  CHECK(ExtractionConfig::for_resolution(64).area_min == 10);
  CHECK(ExtractionConfig::for_resolution(64).dilation == 2);
  CHECK(ExtractionConfig::for_resolution(32).area_min == 3);
  CHECK(ExtractionConfig::for_resolution(32).dilation == 1);
}

TEST_CASE("compatibility_distance examples") {
  const auto d = testing::three_room_diagram();
  CHECK(compatibility_distance(d, d) == 0);
  auto missing = d;
  missing.edges.pop_back();
  CHECK(compatibility_distance(d, missing) == 1);
  auto retyped = d;
  retyped.edges[0].type = 11;
  CHECK(compatibility_distance(d, retyped) == 1);
  auto both = d;
  both.edges[0] = {0, 2, 11};
  CHECK(compatibility_distance(d, both) == 2);
  auto no_room = d;
  no_room.nodes.erase(no_room.nodes.begin());
  CHECK(compatibility_distance(d, no_room) == 1);
}

TEST_CASE("compatibility_distance equals brute-force edit search") {
  std::mt19937_64 rng(2024);
  const auto start = std::chrono::steady_clock::now();
  int nonzero = 0;
  for (int t = 0; t < 200; ++t) {
    const auto a = testing::random_diagram(rng, 2 + t % 4, 6);
    const auto b = t % 3 == 0 ? testing::random_diagram(rng, 2 + (t / 3) % 4, 6) : testing::perturb_diagram(a, rng, 5);
    const int fast = compatibility_distance(a, b);
    CAPTURE(t);
    REQUIRE(fast == testing::brute_force_edit_distance(a, b));
    CHECK(fast == compatibility_distance(b, a));
    nonzero += fast > 0;
  }
  CHECK(nonzero > 100);
  CHECK(std::chrono::steady_clock::now() - start < std::chrono::minutes(1));
}

TEST_CASE("GT masks of synthetic samples read back to their diagrams") {
  for (int r : {32, 64}) {
    for (int rooms = 5; rooms <= 8; ++rooms) {
      for (std::uint64_t seed = 0; seed < 25; ++seed) {
        const auto s = data::generate_synthetic(seed, rooms, r);
        const auto cfg = ExtractionConfig::for_resolution(r);
        const auto ex = extract_layout(s.gt_masks, s.diagram, cfg);
        REQUIRE(ex.diagram == s.diagram);
        for (bool ok : compatibility_flags(s.diagram, ex)) CHECK(ok);
      }
    }
  }
}
