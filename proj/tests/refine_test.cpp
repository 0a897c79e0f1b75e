#include <filesystem>
#include <fstream>

#include "doctest.h"
#include "json.hpp"
#include "layoutgen/data/synthetic.hpp"
#include "layoutgen/refine/refine.hpp"

using namespace layoutgen;
using namespace layoutgen::refine;
namespace fs = std::filesystem;

namespace {

TypeSchedule filled(int v) {
  TypeSchedule s;
  s.fill(v);
  return s;
}

RefinementScheme scheme(decltype(RefinementScheme::rule) rule, int iterations = 10) {
  RefinementScheme s;
  s.rule = rule;
  s.iterations = iterations;
  return s;
}

struct Setup {
  model::ModelConfig cfg = model::ModelConfig::desk_scale();
  data::Sample sample = data::generate_synthetic(21, 6, 32);
  model::GraphContext ctx = model::GraphContext::build(sample.diagram, cfg);
  model::ModelParams params = model::init_params(cfg, 8);
  graphs::ExtractionConfig ex = graphs::ExtractionConfig::for_resolution(32);

  RefinementTrajectory run(const RefinementScheme& s, std::uint64_t seed = 4) const {
    std::mt19937_64 rng(seed);
    return refine::refine(params.generator, cfg, ctx, s, rng, ex);
  }
};

}  // namespace

TEST_CASE("scheme_decision") {
  std::mt19937_64 rng(1);
  SUBCASE("first iteration is never conditioned") {
    for (const auto& s : {scheme(Heuristic{1.0}), scheme(Static{filled(1)}), scheme(Dynamic{filled(1), filled(1)})}) {
      for (int type = 0; type < graphs::kTypeCount; ++type) {
        CHECK_FALSE(scheme_decision(s, type, 1, true, rng));
      }
    }
  }
  SUBCASE("static passes once k exceeds V") {
    auto v = filled(10);
    v[2] = 3;
    const auto s = scheme(Static{v});
    CHECK_FALSE(scheme_decision(s, 2, 3, true, rng));
    CHECK(scheme_decision(s, 2, 4, false, rng));
    CHECK_FALSE(scheme_decision(s, 0, 10, true, rng));
  }
  SUBCASE("dynamic uses T for compatible and U otherwise") {
    const auto s = scheme(Dynamic{filled(2), filled(5)});
    CHECK(scheme_decision(s, 4, 3, true, rng));
    CHECK_FALSE(scheme_decision(s, 4, 3, false, rng));
    CHECK_FALSE(scheme_decision(s, 4, 5, false, rng));
    CHECK(scheme_decision(s, 4, 6, false, rng));
  }
  SUBCASE("heuristic") {
    for (int k = 2; k <= 10; ++k) {
      CHECK(scheme_decision(scheme(Heuristic{1.0}), 0, k, false, rng));
      CHECK_FALSE(scheme_decision(scheme(Heuristic{0.0}), 0, k, true, rng));
    }
    int hits = 0;
    for (int i = 0; i < 4000; ++i) hits += scheme_decision(scheme(Heuristic{0.25}), 0, 2, true, rng);
    CHECK(std::abs(hits / 4000.0 - 0.25) < 0.03);
  }
  SUBCASE("bad type") { CHECK_THROWS_AS(scheme_decision(scheme(Heuristic{}), 12, 2, true, rng), std::invalid_argument); }
}

TEST_CASE("parse and format schemes") {
  for (const std::string text : {"heur:0.5", "heur:1", "static:1,2,3,4,5,6,7,8,9,10,1,2",
                                 "dyna:1,1,1,1,1,1,1,1,1,1,1,1;10,10,10,10,10,10,10,10,10,10,10,10"}) {
    const auto s = parse_scheme(text);
    CHECK(format_scheme(s) == text);
    CHECK(format_scheme(parse_scheme(format_scheme(s))) == text);
  }
  const auto st = std::get<Static>(parse_scheme("static:1,2,3,4,5,6,7,8,9,10,1,2").rule);
  CHECK(st.v[9] == 10);
  CHECK(parse_scheme("heur:0.5", 4).iterations == 4);

  for (const std::string bad : {"heur:1.5", "heur:-0.1", "heur:", "heur:abc", "static:1,2", "static:0,1,1,1,1,1,1,1,1,1,1,1",
                                "static:1,1,1,1,1,1,1,1,1,1,1,11", "static:1,1,1,1,1,1,1,1,1,1,1,1,1",
                                "dyna:1,1,1,1,1,1,1,1,1,1,1,1", "foo:1", "heur0.5", "static:1,,1,1,1,1,1,1,1,1,1,1"}) {
    CAPTURE(bad);
    CHECK_THROWS_AS(parse_scheme(bad), std::invalid_argument);
  }
  CHECK_THROWS_AS(parse_scheme("heur:1", 0), std::invalid_argument);
}

TEST_CASE("refinement trajectories") {
  const Setup s;

  SUBCASE("iteration 1 is unconditioned for every scheme") {
    for (const auto& sc : {scheme(Heuristic{1.0}, 3), scheme(Static{filled(1)}, 3), scheme(Dynamic{filled(1), filled(1)}, 3)}) {
      const auto t = s.run(sc);
      REQUIRE(t.iterations.size() == 3u);
      CHECK_FALSE(t.iterations.front().cond.any());
    }
  }

  SUBCASE("heuristic 0 never conditions and noise is fresh per iteration") {
    const auto t = s.run(scheme(Heuristic{0.0}, 4));
    for (const auto& it : t.iterations) CHECK_FALSE(it.cond.any());
    CHECK(t.iterations[0].masks.values != t.iterations[1].masks.values);
  }

  SUBCASE("static all-1 matches heuristic 1.0 bit for bit") {
    const auto a = s.run(scheme(Static{filled(1)}));
    const auto b = s.run(scheme(Heuristic{1.0}));
    REQUIRE(a.iterations.size() == b.iterations.size());
    for (std::size_t k = 0; k < a.iterations.size(); ++k) {
      CAPTURE(k);
      CHECK(a.iterations[k].masks == b.iterations[k].masks);
      CHECK(a.iterations[k].cond.specified == b.iterations[k].cond.specified);
      CHECK(a.iterations[k].cond.masks == b.iterations[k].cond.masks);
    }
  }

  SUBCASE("conditions are the previous masks binarized") {
    const auto t = s.run(scheme(Heuristic{1.0}, 4));
    for (std::size_t k = 1; k < t.iterations.size(); ++k) {
      const auto& cond = t.iterations[k].cond;
      const auto& prev = t.iterations[k - 1].masks;
      for (int i = 0; i < cond.count(); ++i) {
        CHECK(cond.specified[i]);
        const auto c = cond.masks.mask(i), p = prev.mask(i);
        bool ok = true;
        for (std::size_t px = 0; px < c.size(); ++px) ok &= c[px] == (p[px] > 0.0f ? 1.0f : -1.0f);
        CHECK(ok);
      }
    }
  }

  SUBCASE("dynamic follows the previous compatibility flags") {
    auto never = filled(10);
    const auto t = s.run(scheme(Dynamic{filled(1), never}, 3));
    for (std::size_t k = 1; k < t.iterations.size(); ++k) {
      CHECK(t.iterations[k].cond.specified == t.iterations[k - 1].compatible);
    }
  }

  SUBCASE("same seed, same trajectory; compatibility snapshots agree with extraction") {
    const auto a = s.run(scheme(Heuristic{0.5}, 3), 9);
    const auto b = s.run(scheme(Heuristic{0.5}, 3), 9);
    for (std::size_t k = 0; k < a.iterations.size(); ++k) {
      CHECK(a.iterations[k].masks == b.iterations[k].masks);
      CHECK(a.iterations[k].cond.specified == b.iterations[k].cond.specified);
      const auto ex = graphs::extract_layout(a.iterations[k].masks, s.sample.diagram, s.ex);
      CHECK(a.iterations[k].compatible == graphs::compatibility_flags(s.sample.diagram, ex));
    }
    CHECK(&a.final_masks() == &a.iterations.back().masks);
  }
}

TEST_CASE("trajectory files round trip") {
  const Setup s;
  const auto sc = scheme(Heuristic{1.0}, 3);
  const auto t = s.run(sc);
  const fs::path dir = fs::temp_directory_path() / "layoutgen_traj_test";
  fs::remove_all(dir);
  write_trajectory(dir, t, s.sample.diagram, sc);
  for (const char* f : {"iter_01.ppm", "iter_02.ppm", "iter_03.ppm", "trajectory.json"}) CHECK(fs::exists(dir / f));

  const auto stored = read_trajectory(dir);
  CHECK(stored.diagram == s.sample.diagram);
  REQUIRE(stored.masks.size() == 3u);
  for (std::size_t k = 0; k < 3; ++k) {
    const auto& m = t.iterations[k].masks;
    bool ok = stored.masks[k].resolution == m.resolution && stored.masks[k].count == m.count;
    for (std::size_t i = 0; ok && i < m.values.size(); ++i) ok = stored.masks[k].values[i] == (m.values[i] > 0 ? 1.0f : -1.0f);
    CHECK(ok);
  }

  const auto doc = nlohmann::json::parse(std::ifstream(dir / "trajectory.json"));
  CHECK(doc["scheme"] == "heur:1");
  CHECK(doc["iterations"][0]["conditioned"].empty());
  CHECK(doc["iterations"][1]["conditioned"].size() == static_cast<std::size_t>(s.ctx.count));
  CHECK(doc["iterations"][2]["compatibility"] == t.iterations[2].compatibility);

  std::ofstream(dir / "trajectory.json") << "{\"diagram\":";
  CHECK_THROWS_AS(read_trajectory(dir), std::runtime_error);
  fs::remove_all(dir);
}
