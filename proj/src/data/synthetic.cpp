#include "layoutgen/data/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <optional>
#include <random>
#include <stdexcept>
#include <string>

#include "layoutgen/graphs/extract.hpp"
#include "layoutgen/numerics/seed.hpp"

namespace layoutgen::data {

using graphs::BubbleDiagram;
using graphs::code;
using graphs::ComponentType;

namespace {

struct Rect {
  int x0, y0, x1, y1;  // half-open
  int width() const { return x1 - x0; }
  int height() const { return y1 - y0; }
  int area() const { return width() * height(); }
};

// A wall segment: the line `at` (x for vertical walls, y for horizontal)
// spanning [lo, hi) along the other axis.
struct Run {
  bool vertical;
  int at, lo, hi;
  int length() const { return hi - lo; }
};

struct Params {
  int resolution;
  int min_side;
  int thickness;
  int dilation;
  int door_min;
  int door_max;
  int margin;  // canvas border kept free around the footprint

  explicit Params(int r) : resolution(r) {
    const double s = r / 64.0;
    min_side = std::max(5, static_cast<int>(std::lround(9 * s)));
    thickness = std::max(2, static_cast<int>(std::lround(3 * s)));
    dilation = graphs::ExtractionConfig::for_resolution(r).dilation;
    door_min = std::max(2, static_cast<int>(std::lround(6 * s)));
    door_max = std::max(door_min, static_cast<int>(std::lround(10 * s)));
    margin = thickness / 2 + dilation + 1;
  }
  int end_margin() const { return dilation + 1; }
  int longest_door(const Run& r) const { return r.length() - 2 * end_margin(); }
};

int uniform(std::mt19937_64& rng, int lo, int hi) {
  return std::uniform_int_distribution<int>(lo, hi)(rng);
}
double uniform_real(std::mt19937_64& rng, double lo, double hi) {
  return std::uniform_real_distribution<double>(lo, hi)(rng);
}
bool chance(std::mt19937_64& rng, double p) { return std::bernoulli_distribution(p)(rng); }

// Splits `r` across one axis; nullopt when neither axis leaves two parts of
// at least min_side.
std::optional<std::pair<Rect, Rect>> split(const Rect& r, const Params& p, std::mt19937_64& rng) {
  bool across_x = r.width() > r.height() || (r.width() == r.height() && chance(rng, 0.5));
  for (int tries = 0; tries < 2; ++tries, across_x = !across_x) {
    const int len = across_x ? r.width() : r.height();
    if (len < 2 * p.min_side) continue;
    int cut = static_cast<int>(std::lround(uniform_real(rng, 0.35, 0.65) * len));
    cut = std::clamp(cut, p.min_side, len - p.min_side);
    if (across_x) return std::make_pair(Rect{r.x0, r.y0, r.x0 + cut, r.y1}, Rect{r.x0 + cut, r.y0, r.x1, r.y1});
    return std::make_pair(Rect{r.x0, r.y0, r.x1, r.y0 + cut}, Rect{r.x0, r.y0 + cut, r.x1, r.y1});
  }
  return std::nullopt;
}

std::optional<Run> shared_wall(const Rect& a, const Rect& b) {
  if (a.x1 == b.x0 || b.x1 == a.x0) {
    const int lo = std::max(a.y0, b.y0), hi = std::min(a.y1, b.y1);
    if (hi > lo) return Run{true, a.x1 == b.x0 ? a.x1 : a.x0, lo, hi};
  }
  if (a.y1 == b.y0 || b.y1 == a.y0) {
    const int lo = std::max(a.x0, b.x0), hi = std::min(a.x1, b.x1);
    if (hi > lo) return Run{false, a.y1 == b.y0 ? a.y1 : a.y0, lo, hi};
  }
  return std::nullopt;
}

std::vector<Run> exterior_walls(const Rect& r, const Rect& fp) {
  std::vector<Run> out;
  if (r.x0 == fp.x0) out.push_back({true, r.x0, r.y0, r.y1});
  if (r.x1 == fp.x1) out.push_back({true, r.x1, r.y0, r.y1});
  if (r.y0 == fp.y0) out.push_back({false, r.y0, r.x0, r.x1});
  if (r.y1 == fp.y1) out.push_back({false, r.y1, r.x0, r.x1});
  return out;
}

// Door rectangle straddling the wall, or nullopt if the run is too short.
std::optional<Rect> place_door(const Run& run, const Params& p, std::mt19937_64& rng) {
  const int room = p.longest_door(run);
  if (room < p.door_min) return std::nullopt;
  const int len = std::min(uniform(rng, p.door_min, p.door_max), room);
  const int start = uniform(rng, run.lo + p.end_margin(), run.hi - p.end_margin() - len);
  const int across = run.at - p.thickness / 2;
  if (run.vertical) return Rect{across, start, across + p.thickness, start + len};
  return Rect{start, across, start + len, across + p.thickness};
}

struct UnionFind {
  std::vector<int> parent;
  explicit UnionFind(int n) : parent(n) { std::iota(parent.begin(), parent.end(), 0); }
  int find(int x) { return parent[x] == x ? x : parent[x] = find(parent[x]); }
  bool unite(int a, int b) {
    a = find(a);
    b = find(b);
    if (a == b) return false;
    parent[a] = b;
    return true;
  }
};

void paint(graphs::LayoutMasks& m, int index, const Rect& r) {
  auto mask = m.mask(index);
  for (int y = std::max(0, r.y0); y < std::min(m.resolution, r.y1); ++y)
    for (int x = std::max(0, r.x0); x < std::min(m.resolution, r.x1); ++x) mask[y * m.resolution + x] = 1.0f;
}

std::optional<Sample> attempt(int room_count, const Params& p, std::mt19937_64& rng) {
  const int r = p.resolution;
  const double s = r / 64.0;
  const int side_max = std::min(static_cast<int>(std::lround(58 * s)), r - 2 * p.margin);
  const int side_min = std::min(static_cast<int>(std::lround(40 * s)), side_max);
  const int fw = uniform(rng, side_min, side_max), fh = uniform(rng, side_min, side_max);
  const int fx = uniform(rng, p.margin, r - p.margin - fw), fy = uniform(rng, p.margin, r - p.margin - fh);
  const Rect footprint{fx, fy, fx + fw, fy + fh};

  const bool merge = chance(rng, 0.3);
  const int pieces = room_count + (merge ? 1 : 0);
  std::vector<Rect> rects{footprint};
  while (static_cast<int>(rects.size()) < pieces) {
    std::vector<double> weights;
    for (const auto& rc : rects) weights.push_back(rc.area());
    bool done = false;
    for (int tries = 0; tries < 8 && !done; ++tries) {
      const auto k = std::discrete_distribution<std::size_t>(weights.begin(), weights.end())(rng);
      if (auto parts = split(rects[k], p, rng)) {
        rects[k] = parts->first;
        rects.push_back(parts->second);
        done = true;
      }
    }
    if (!done) return std::nullopt;
  }

  std::vector<std::vector<Rect>> rooms;
  for (const auto& rc : rects) rooms.push_back({rc});
  if (merge) {
    // Prefer a pair whose union is L-shaped (a partial shared wall).
    std::vector<std::pair<int, int>> l_pairs, any_pairs;
    for (int a = 0; a < pieces; ++a) {
      for (int b = a + 1; b < pieces; ++b) {
        const auto w = shared_wall(rects[a], rects[b]);
        if (!w) continue;
        any_pairs.emplace_back(a, b);
        const int sa = w->vertical ? rects[a].height() : rects[a].width();
        const int sb = w->vertical ? rects[b].height() : rects[b].width();
        if (w->length() < sa || w->length() < sb) l_pairs.emplace_back(a, b);
      }
    }
    const auto& pool = l_pairs.empty() ? any_pairs : l_pairs;
    if (pool.empty()) return std::nullopt;
    const auto [a, b] = pool[uniform(rng, 0, static_cast<int>(pool.size()) - 1)];
    rooms[a].push_back(rects[b]);
    rooms.erase(rooms.begin() + b);
  }
  std::shuffle(rooms.begin(), rooms.end(), rng);
  const int n = room_count;

  // Types: living is the largest room, then one kitchen, one bedroom, and the
  // rest drawn from the remaining non-living, non-kitchen room types.
  std::vector<int> area(n, 0);
  for (int i = 0; i < n; ++i)
    for (const auto& rc : rooms[i]) area[i] += rc.area();
  const int living = static_cast<int>(std::max_element(area.begin(), area.end()) - area.begin());
  std::vector<int> others;
  for (int i = 0; i < n; ++i)
    if (i != living) others.push_back(i);
  std::shuffle(others.begin(), others.end(), rng);
  std::vector<int> type(n);
  type[living] = code(ComponentType::living_room);
  type[others[0]] = code(ComponentType::kitchen);
  type[others[1]] = code(ComponentType::bedroom);
  for (std::size_t k = 2; k < others.size(); ++k) {
    type[others[k]] = uniform(rng, code(ComponentType::bedroom), code(ComponentType::unknown));
  }

  // Door candidates per room pair: every shared wall long enough for a door.
  std::vector<std::vector<std::vector<Run>>> walls(n, std::vector<std::vector<Run>>(n));
  std::vector<std::pair<int, int>> eligible;
  for (int a = 0; a < n; ++a) {
    for (int b = a + 1; b < n; ++b) {
      for (const auto& ra : rooms[a])
        for (const auto& rb : rooms[b])
          if (auto w = shared_wall(ra, rb); w && p.longest_door(*w) >= p.door_min) walls[a][b].push_back(*w);
      if (!walls[a][b].empty()) eligible.emplace_back(a, b);
    }
  }
  std::shuffle(eligible.begin(), eligible.end(), rng);
  UnionFind uf(n);
  std::vector<std::pair<int, int>> tree, extra;
  for (const auto& [a, b] : eligible) {
    if (uf.unite(a, b)) tree.emplace_back(a, b);
    else if (chance(rng, 0.3)) extra.emplace_back(a, b);
  }
  if (static_cast<int>(tree.size()) != n - 1) return std::nullopt;

  int front_room = -1;
  std::vector<Run> front_walls;
  auto exterior_of = [&](int i) {
    std::vector<Run> out;
    for (const auto& rc : rooms[i])
      for (const auto& w : exterior_walls(rc, footprint))
        if (p.longest_door(w) >= p.door_min) out.push_back(w);
    return out;
  };
  if (auto w = exterior_of(living); !w.empty()) {
    front_room = living;
    front_walls = std::move(w);
  } else {
    for (int i = 0; i < n && front_room < 0; ++i) {
      if (type[i] != code(ComponentType::entrance)) continue;
      if (auto w2 = exterior_of(i); !w2.empty()) {
        front_room = i;
        front_walls = std::move(w2);
      }
    }
  }
  if (front_room < 0) return std::nullopt;

  Sample sample;
  auto& d = sample.diagram;
  for (int i = 0; i < n; ++i) d.nodes.push_back({i, type[i]});
  d.nodes.push_back({n, code(ComponentType::outside)});

  std::vector<Rect> doors;
  auto pick_run = [&](const std::vector<Run>& runs) {
    return runs[uniform(rng, 0, static_cast<int>(runs.size()) - 1)];
  };
  for (const auto* list : {&tree, &extra}) {
    for (const auto& [a, b] : *list) {
      doors.push_back(*place_door(pick_run(walls[a][b]), p, rng));
      d.edges.push_back({a, b, code(ComponentType::interior_door)});
    }
  }
  doors.push_back(*place_door(pick_run(front_walls), p, rng));
  d.edges.push_back({front_room, n, code(ComponentType::front_door)});

  sample.gt_masks = graphs::LayoutMasks(n + static_cast<int>(doors.size()), r, -1.0f);
  for (int i = 0; i < n; ++i)
    for (const auto& rc : rooms[i]) paint(sample.gt_masks, i, rc);
  for (std::size_t k = 0; k < doors.size(); ++k) paint(sample.gt_masks, n + static_cast<int>(k), doors[k]);

  if (!graphs::validate_diagram(d).empty()) return std::nullopt;
  const auto cfg = graphs::ExtractionConfig::for_resolution(r);
  if (!(graphs::extract_diagram(sample.gt_masks, d, cfg) == d)) return std::nullopt;
  return sample;
}

}  // namespace

Sample generate_synthetic(std::uint64_t seed, int room_count, int resolution) {
  if (room_count < kMinRooms || room_count > kMaxRooms) {
    throw std::invalid_argument("room_count must be in [5, 8], got " + std::to_string(room_count));
  }
  if (resolution != 32 && resolution != 64) {
    throw std::invalid_argument("resolution must be 32 or 64, got " + std::to_string(resolution));
  }
  const Params p(resolution);
  for (std::uint64_t s = seed;; ++s) {
    std::mt19937_64 rng(s);
    for (int tries = 0; tries < 100; ++tries) {
      if (auto sample = attempt(room_count, p, rng)) {
        sample->sample_id = "s" + std::to_string(seed) + "_r" + std::to_string(room_count);
        return std::move(*sample);
      }
    }
  }
}

Dataset generate_dataset(std::uint64_t seed, int count_per_room_count, int resolution) {
  Dataset ds;
  ds.resolution = resolution;
  ds.samples.resize(static_cast<std::size_t>(kMaxRooms - kMinRooms + 1) * count_per_room_count);
  const int total = static_cast<int>(ds.samples.size());
#pragma omp parallel for schedule(dynamic)
  for (int k = 0; k < total; ++k) {
    const int rooms = kMinRooms + k / count_per_room_count;
    const int i = k % count_per_room_count;
    auto s = generate_synthetic(num::derive_seed(seed, {static_cast<std::uint64_t>(rooms), static_cast<std::uint64_t>(i)}),
                                rooms, resolution);
    char id[32];
    std::snprintf(id, sizeof id, "r%d_%05d", rooms, i);
    s.sample_id = id;
    ds.samples[k] = std::move(s);
  }
  return ds;
}

}  // namespace layoutgen::data
