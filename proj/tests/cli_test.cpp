#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "doctest.h"
#include "json.hpp"
#include "layoutgen/cli/commands.hpp"
#include "layoutgen/cli/run_config.hpp"
#include "layoutgen/data/dataset.hpp"

using namespace layoutgen;
using namespace layoutgen::cli;
namespace fs = std::filesystem;

namespace {

struct Result {
  int code;
  std::string out;
  std::string err;
};

Result run(std::vector<std::string> args) {
  args.insert(args.begin(), "layout_refine");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  const int code = run_cli(static_cast<int>(argv.size()), argv.data(), out, err);
  return {code, out.str(), err.str()};
}

fs::path scratch(const std::string& name) {
  const auto p = fs::temp_directory_path() / ("layoutgen_cli_" + name);
  fs::remove_all(p);
  return p;
}

std::string bytes(const fs::path& p) { return data::read_file(p); }

/// Every regular file under `a` exists under `b` with identical bytes.
/// run_config.json is compared without its "out" entry.
bool same_tree(const fs::path& a, const fs::path& b) {
  int files = 0;
  for (const auto& e : fs::recursive_directory_iterator(a)) {
    if (!e.is_regular_file()) continue;
    if (e.path().filename() == "run_config.json") {
      auto x = nlohmann::json::parse(bytes(e.path())), y = nlohmann::json::parse(bytes(b / fs::relative(e.path(), a)));
      x.erase("out");
      y.erase("out");
      if (x != y) return false;
      continue;
    }
    const auto rel = fs::relative(e.path(), a);
    if (!fs::exists(b / rel) || bytes(e.path()) != bytes(b / rel)) return false;
    ++files;
  }
  return files > 0;
}

}  // namespace

TEST_CASE("run config parsing") {
  const auto c = parse_run_config(R"({"train":{"steps":7,"cond_prob":0.25},"eval":{"samples":80},"seed":3})");
  CHECK(c.train.steps == 7);
  CHECK(c.train.cond_prob == 0.25f);
  CHECK(c.eval.samples == 80);
  CHECK(c.seed == 3u);
  CHECK(c.model.resolution == 32);

  CHECK(to_json(parse_run_config(to_json(c))) == to_json(c));

  auto message_of = [](const std::string& text) {
    try {
      parse_run_config(text);
    } catch (const std::invalid_argument& e) {
      return std::string(e.what());
    }
    return std::string();
  };
  CHECK(message_of(R"({"colour":1})").find("colour") != std::string::npos);
  CHECK(message_of(R"({"train":{"stepz":1}})").find("train.stepz") != std::string::npos);
  CHECK(message_of(R"({"train":{"steps":"many"}})").find("train.steps") != std::string::npos);
  CHECK_FALSE(message_of("{not json").empty());
  CHECK_FALSE(message_of("[1,2]").empty());

  RunConfig bad;
  bad.fold = 4;
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
  bad = {};
  bad.scheme = "heur:2";
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
}

TEST_CASE("help and usage errors") {
  const auto help = run({"--help"});
  CHECK(help.code == kExitOk);
  for (const char* cmd : {"gen-data", "train", "refine", "metaopt", "eval", "render"}) CHECK(help.out.find(cmd) != std::string::npos);

  const auto eval_help = run({"eval", "--help"});
  CHECK(eval_help.code == kExitOk);
  for (const char* flag : {"--checkpoint", "--scheme", "--samples", "--rounds", "--seed", "--config", "default 1000"}) {
    CAPTURE(flag);
    CHECK(eval_help.out.find(flag) != std::string::npos);
  }

  CHECK(run({}).code == kExitUsage);
  CHECK(run({"frobnicate"}).code == kExitUsage);
  CHECK(run({"gen-data", "--bogus"}).code == kExitUsage);
  CHECK(run({"gen-data"}).code == kExitUsage);

  const auto dir = scratch("usage");
  const auto res16 = run({"gen-data", "--out", dir.string(), "--resolution", "16"});
  CHECK(res16.code == kExitUsage);
  CHECK_FALSE(res16.err.empty());
  CHECK(run({"eval", "--checkpoint", "x.lgpp", "--data", "d", "--out", "r.json", "--scheme", "heur:7"}).code == kExitUsage);
  CHECK(run({"eval", "--checkpoint", "x.lgpp", "--data", "d", "--out", "r.json", "--samples", "10"}).code == kExitUsage);

  const auto cfg = dir.string() + ".json";
  std::ofstream(cfg) << R"({"trian":{}})";
  const auto unknown = run({"gen-data", "--config", cfg, "--out", dir.string()});
  CHECK(unknown.code == kExitUsage);
  CHECK(unknown.err.find("trian") != std::string::npos);
  fs::remove(cfg);

  CHECK(run({"train", "--data", (dir / "missing").string(), "--out", (dir / "run").string()}).code == kExitRuntime);
  fs::remove_all(dir);
}

TEST_CASE("gen-data") {
  const auto a = scratch("gen_a"), b = scratch("gen_b");
  const auto r = run({"gen-data", "--out", a.string(), "--count-per-room-count", "10", "--seed", "5"});
  REQUIRE(r.code == kExitOk);
  const auto ds = data::load_dataset(a);
  CHECK(ds.samples.size() == 40u);
  CHECK(ds.resolution == 32);
  for (int rooms = 5; rooms <= 8; ++rooms) CHECK(data::kfold_split(ds, rooms).test_ids.size() == 10u);

  REQUIRE(run({"gen-data", "--out", b.string(), "--count-per-room-count", "10", "--seed", "5"}).code == kExitOk);
  CHECK(same_tree(a, b));

  SUBCASE("seed from the environment") {
    const auto c = scratch("gen_c");
    setenv("LAYOUT_REFINE_SEED", "5", 1);
    REQUIRE(run({"gen-data", "--out", c.string(), "--count-per-room-count", "10"}).code == kExitOk);
    unsetenv("LAYOUT_REFINE_SEED");
    CHECK(same_tree(a, c));
    fs::remove_all(c);
  }
  fs::remove_all(a);
  fs::remove_all(b);
}

TEST_CASE("pipeline commands are reproducible") {
  const auto root = scratch("pipeline");
  const auto data_dir = root / "data";
  REQUIRE(run({"gen-data", "--out", data_dir.string(), "--count-per-room-count", "2", "--seed", "1"}).code == kExitOk);
  const auto ds = data::load_dataset(data_dir);
  const auto diagram = root / "diagram.json";
  data::write_file_atomic(diagram, data::diagram_to_json(ds.samples.front().diagram));
  const std::string data_s = data_dir.string();

  std::string ckpt;
  for (const char* tag : {"a", "b"}) {
    const auto out = root / (std::string("train_") + tag);
    const auto r = run({"train", "--data", data_s, "--steps", "2", "--seed", "4", "--out", out.string()});
    REQUIRE(r.code == kExitOk);
    CHECK(fs::exists(out / "final.lgpp"));
    CHECK(fs::exists(out / "run_config.json"));
    ckpt = (out / "final.lgpp").string();
  }
  CHECK(same_tree(root / "train_a", root / "train_b"));

  SUBCASE("resume") {
    const auto out = root / "train_resume";
    REQUIRE(run({"train", "--data", data_s, "--steps", "1", "--seed", "4", "--out", out.string()}).code == kExitOk);
    const auto r = run({"train", "--data", data_s, "--steps", "2", "--seed", "4", "--out", out.string(), "--resume",
                        (out / "final").string()});
    REQUIRE(r.code == kExitOk);
    CHECK(r.out.find("resumed at step 1") != std::string::npos);
    CHECK(bytes(out / "final.lgpp") == bytes(root / "train_a" / "final.lgpp"));
  }

  SUBCASE("refine and render") {
    for (const char* tag : {"a", "b"}) {
      const auto out = root / (std::string("refine_") + tag);
      REQUIRE(run({"refine", "--checkpoint", ckpt, "--diagram", diagram.string(), "--iters", "3", "--seed", "2", "--out",
                   out.string()}).code == kExitOk);
    }
    CHECK(same_tree(root / "refine_a", root / "refine_b"));
    const auto frames = root / "frames";
    REQUIRE(run({"render", "--trajectory", (root / "refine_a").string(), "--out", frames.string()}).code == kExitOk);
    CHECK(fs::exists(frames / "frame_03.ppm"));
    const auto sample_file = data_dir / (ds.samples.front().sample_id + ".json");
    REQUIRE(run({"render", "--sample", sample_file.string(), "--out", (root / "gt.ppm").string()}).code == kExitOk);
    CHECK(fs::file_size(root / "gt.ppm") > 32u * 32u * 3u);
    CHECK(run({"render", "--out", (root / "x.ppm").string()}).code == kExitUsage);
  }

  SUBCASE("eval") {
    for (const char* tag : {"a", "b"}) {
      REQUIRE(run({"eval", "--checkpoint", ckpt, "--data", data_s, "--samples", "65", "--rounds", "1", "--iters", "2",
                   "--seed", "3", "--out", (root / (std::string("eval_") + tag + ".json")).string()}).code == kExitOk);
    }
    CHECK(bytes(root / "eval_a.json") == bytes(root / "eval_b.json"));
    const auto j = nlohmann::json::parse(bytes(root / "eval_a.json"));
    CHECK(j["n_samples"] == 65);
    CHECK(j["rounds"] == 1);
  }

  SUBCASE("metaopt and its resume") {
    auto meta = [&](const fs::path& out, const char* rounds) {
      return run({"metaopt", "--checkpoint", ckpt, "--data", data_s, "--rounds", rounds, "--diagrams", "3", "--iters", "2",
                  "--seed", "6", "--out", out.string()});
    };
    REQUIRE(meta(root / "meta_a", "3").code == kExitOk);
    REQUIRE(meta(root / "meta_b", "3").code == kExitOk);
    CHECK(same_tree(root / "meta_a", root / "meta_b"));
    const auto best = nlohmann::json::parse(bytes(root / "meta_a" / "best.json"));
    CHECK(best["scheme"].get<std::string>().rfind("dyna:", 0) == 0);
    CHECK(best["rounds"] == 3);

    REQUIRE(meta(root / "meta_c", "2").code == kExitOk);
    std::ofstream(root / "meta_c" / "history.jsonl", std::ios::app) << "{\"round\":2,\"par";
    const auto resumed = meta(root / "meta_c", "3");
    REQUIRE(resumed.code == kExitOk);
    CHECK(resumed.out.find("resuming after 2 rounds") != std::string::npos);
    CHECK(same_tree(root / "meta_a", root / "meta_c"));

    const auto warn = run({"metaopt", "--checkpoint", ckpt, "--data", data_s, "--rounds", "1", "--diagrams", "2", "--iters",
                           "1", "--scheme-family", "static", "--out", (root / "meta_s").string()});
    CHECK(warn.code == kExitOk);
    CHECK(warn.err.find("warning") != std::string::npos);
  }
  fs::remove_all(root);
}
