#include "layoutgen/cli/commands.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <map>
#include <optional>
#include <random>

#include "CLI11.hpp"
#include "json.hpp"
#include "layoutgen/cli/run_config.hpp"
#include "layoutgen/data/base64.hpp"
#include "layoutgen/data/raster.hpp"
#include "layoutgen/data/synthetic.hpp"
#include "layoutgen/metaopt/tpe.hpp"
#include "layoutgen/metrics/evaluate.hpp"
#include "layoutgen/model/checkpoint.hpp"
#include "layoutgen/numerics/seed.hpp"
#include "layoutgen/refine/refine.hpp"

namespace layoutgen::cli {

namespace fs = std::filesystem;

namespace {

struct Flags {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::optional<int> workers;
  std::string out;
  std::string data;
  std::optional<int> fold;
  std::string checkpoint;
  std::optional<std::string> scheme;
  std::optional<int> iters;

  // gen-data
  int count = 10;
  std::optional<int> resolution;
  // train
  std::optional<long> steps;
  std::string resume;
  // refine
  std::string diagram;
  // metaopt
  std::optional<std::string> target;
  std::optional<std::string> family;
  std::optional<int> rounds;
  std::optional<int> diagrams;
  // eval
  std::optional<int> samples;
  // render
  std::string sample;
  std::string trajectory;
};

RunConfig load_config(const Flags& f) {
  RunConfig c;
  if (!f.config.empty()) {
    std::string text;
    try {
      text = data::read_file(f.config);
    } catch (const std::runtime_error& e) {
      throw UsageError(e.what());
    }
    try {
      c = parse_run_config(text);
    } catch (const std::invalid_argument& e) {
      throw UsageError(f.config + ": " + e.what());
    }
  }
  if (f.seed) {
    c.seed = *f.seed;
  } else if (f.config.empty()) {
    if (const char* env = std::getenv("LAYOUT_REFINE_SEED")) {
      try {
        c.seed = std::stoull(env);
      } catch (const std::exception&) {
        throw UsageError(std::string("LAYOUT_REFINE_SEED is not an integer: ") + env);
      }
    }
  }
  if (f.workers) c.workers = *f.workers;
  if (!f.out.empty()) c.out = f.out;
  if (!f.data.empty()) c.data = f.data;
  if (f.fold) c.fold = *f.fold;
  if (f.scheme) c.scheme = *f.scheme;
  if (f.iters) c.iterations = *f.iters;
  if (f.steps) c.train.steps = *f.steps;
  if (f.target) c.metaopt.target = *f.target;
  if (f.family) c.metaopt.family = *f.family;
  if (f.rounds) c.metaopt.rounds = c.eval.rounds = *f.rounds;
  if (f.diagrams) c.metaopt.diagrams = *f.diagrams;
  if (f.samples) c.eval.samples = *f.samples;
  try {
    c.validate();
  } catch (const std::invalid_argument& e) {
    throw UsageError(e.what());
  }
  return c;
}

void require(const std::string& value, const char* flag) {
  if (value.empty()) throw UsageError(std::string(flag) + " is required");
}

refine::RefinementScheme scheme_of(const RunConfig& c) {
  try {
    return refine::parse_scheme(c.scheme, c.iterations);
  } catch (const std::invalid_argument& e) {
    throw UsageError(e.what());
  }
}

struct Split {
  data::Dataset ds;
  data::FoldSpec fold;
};

Split load_split(const RunConfig& c) {
  require(c.data, "--data");
  Split s{data::load_dataset(c.data), {}};
  s.fold = data::kfold_split(s.ds, c.fold);
  return s;
}

std::pair<model::ModelConfig, model::ModelParams> load_checkpoint(const std::string& path) {
  require(path, "--checkpoint");
  return model::load_model(path);
}

int cmd_gen_data(const Flags& f, std::ostream& out) {
  RunConfig c = load_config(f);
  require(c.out, "--out");
  const int resolution = f.resolution.value_or(c.model.resolution);
  model::ModelConfig probe = c.model;
  probe.resolution = resolution;
  try {
    probe.validate();
  } catch (const std::invalid_argument& e) {
    throw UsageError(e.what());
  }
  if (f.count < 1) throw UsageError("--count-per-room-count must be positive");
  const auto ds = data::generate_dataset(c.seed, f.count, resolution);
  data::save_dataset(ds, c.out);
  std::map<int, int> counts;
  for (const auto& s : ds.samples) ++counts[s.diagram.room_count()];
  for (const auto& [rooms, n] : counts) out << rooms << " rooms: " << n << " samples\n";
  out << "wrote " << ds.samples.size() << " samples to " << c.out << "\n";
  return kExitOk;
}

int cmd_train(const Flags& f, std::ostream& out) {
  RunConfig c = load_config(f);
  if (f.seed) c.train.seed = *f.seed;
  require(c.out, "--out");
  const auto split = load_split(c);
  if (split.ds.resolution != c.model.resolution) {
    throw UsageError("dataset resolution " + std::to_string(split.ds.resolution) + " does not match model resolution " +
                     std::to_string(c.model.resolution));
  }
  training::Trainer trainer(c.model, c.train, data::select(split.ds, split.fold.train_ids));
  if (!f.resume.empty()) {
    trainer.load(f.resume);
    out << "resumed at step " << trainer.state().step << "\n";
  }
  fs::create_directories(c.out);
  data::write_file_atomic(fs::path(c.out) / "run_config.json", to_json(c));
  const long every = std::max(1L, c.train.steps / 10);
  trainer.run(c.out, [&](const training::StepStats& st) {
    if (st.step % every == 0 || st.step == c.train.steps) {
      out << "step " << st.step << " d_loss " << st.d_loss << " g_loss " << st.g_loss << " l1 " << st.l1_term << "\n";
    }
  });
  out << "trained on " << split.fold.train_ids.size() << " samples (held out " << c.fold << " rooms); final checkpoint "
      << (fs::path(c.out) / "final.lgpp").string() << "\n";
  return kExitOk;
}

int cmd_refine(const Flags& f, std::ostream& out) {
  RunConfig c = load_config(f);
  require(c.out, "--out");
  require(f.diagram, "--diagram");
  const auto scheme = scheme_of(c);
  const auto [cfg, params] = load_checkpoint(f.checkpoint);
  const auto d = data::diagram_from_json(data::read_file(f.diagram));
  const auto ctx = model::GraphContext::build(d, cfg);
  std::mt19937_64 rng(c.seed);
  const auto traj = refine::refine(params.generator, cfg, ctx, scheme, rng, graphs::ExtractionConfig::for_resolution(cfg.resolution));
  refine::write_trajectory(c.out, traj, d, scheme);
  out << "iteration compatibility:";
  for (const auto& it : traj.iterations) out << ' ' << it.compatibility;
  out << "\n";
  return kExitOk;
}

refine::RefinementScheme scheme_from_params(const std::string& family, const std::vector<int>& x, int iterations) {
  refine::RefinementScheme s;
  s.iterations = iterations;
  refine::TypeSchedule a{}, b{};
  std::copy_n(x.begin(), graphs::kTypeCount, a.begin());
  if (family == "static") {
    s.rule = refine::Static{a};
  } else {
    std::copy_n(x.begin() + graphs::kTypeCount, graphs::kTypeCount, b.begin());
    s.rule = refine::Dynamic{a, b};
  }
  return s;
}

int cmd_metaopt(const Flags& f, std::ostream& out, std::ostream& err) {
  RunConfig c = load_config(f);
  require(c.out, "--out");
  const auto [cfg, params] = load_checkpoint(f.checkpoint);
  const auto split = load_split(c);
  if (c.metaopt.family == "static" && c.metaopt.target == "compatibility") {
    err << "warning: static schemes cannot react to the current design; optimizing compatibility with them anyway\n";
  }
  const bool diversity = c.metaopt.target == "diversity";
  if (diversity && c.metaopt.diagrams < metrics::kMinDiversitySamples) {
    throw UsageError("diversity needs --diagrams >= 65");
  }

  // Fixed objective set: a seeded shuffle of the training fold, cycled if short.
  auto pool = data::select(split.ds, split.fold.train_ids);
  std::mt19937_64 pick_rng(num::derive_seed(c.seed, {0x5e1ec7}));
  std::shuffle(pool.begin(), pool.end(), pick_rng);
  std::vector<const data::Sample*> chosen;
  for (int i = 0; i < c.metaopt.diagrams; ++i) chosen.push_back(pool[i % pool.size()]);

  const int dims = c.metaopt.family == "static" ? graphs::kTypeCount : 2 * graphs::kTypeCount;
  const auto space = metaopt::SearchSpace::uniform(dims, 1, 10);
  fs::create_directories(c.out);
  const auto history_path = fs::path(c.out) / "history.jsonl";
  auto history = metaopt::load_history(history_path);
  {
    // Rewrite so a torn trailing line from an interrupted run is dropped.
    std::string clean;
    for (const auto& t : history.trials) {
      nlohmann::json line = {{"round", t.round}, {"params", t.params}};
      line["score"] = std::isfinite(t.score) ? nlohmann::json(t.score) : nlohmann::json(nullptr);
      clean += line.dump() + "\n";
    }
    data::write_file_atomic(history_path, clean);
  }
  if (!history.trials.empty()) out << "resuming after " << history.trials.size() << " rounds\n";

  const auto objective = [&](const std::vector<int>& x, int round) {
    metrics::EvalOptions opts;
    opts.rounds = 1;
    opts.resample = false;
    opts.diversity = diversity;
    opts.workers = c.workers;
    opts.seed = num::derive_seed(c.seed, {static_cast<std::uint64_t>(round)});
    const auto report = metrics::evaluate(params.generator, cfg, chosen, scheme_from_params(c.metaopt.family, x, c.iterations), opts);
    return diversity ? report.diversity.mean : report.compatibility.mean;
  };
  metaopt::optimize(objective, space, c.metaopt.rounds, c.seed, history, {}, [&](const metaopt::Trial& t) {
    metaopt::append_trial(history_path, t);
    out << "round " << t.round << " score " << t.score << "\n";
  });
  const auto* best = history.best();
  const auto scheme = scheme_from_params(c.metaopt.family, best->params, c.iterations);
  const nlohmann::json doc = {{"scheme", refine::format_scheme(scheme)},
                              {"score", best->score},
                              {"round", best->round},
                              {"target", c.metaopt.target},
                              {"rounds", history.trials.size()}};
  data::write_file_atomic(fs::path(c.out) / "best.json", doc.dump(1));
  out << "best " << refine::format_scheme(scheme) << " score " << best->score << "\n";
  return kExitOk;
}

int cmd_eval(const Flags& f, std::ostream& out) {
  RunConfig c = load_config(f);
  require(c.out, "--out");
  const auto scheme = scheme_of(c);
  if (c.eval.samples < metrics::kMinDiversitySamples) throw UsageError("--samples must be at least 65 for diversity");
  const auto [cfg, params] = load_checkpoint(f.checkpoint);
  const auto split = load_split(c);
  metrics::EvalOptions opts;
  opts.n_samples = c.eval.samples;
  opts.rounds = c.eval.rounds;
  opts.seed = c.seed;
  opts.workers = c.workers;
  const auto report = metrics::evaluate(params.generator, cfg, data::select(split.ds, split.fold.test_ids), scheme, opts);
  const fs::path path(c.out);
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  data::write_file_atomic(path, report.to_json());
  out << "diversity " << report.diversity.mean << " +- " << report.diversity.std << ", compatibility "
      << report.compatibility.mean << " +- " << report.compatibility.std << "\n";
  return kExitOk;
}

int cmd_render(const Flags& f, std::ostream& out) {
  if (f.sample.empty() == f.trajectory.empty()) throw UsageError("give exactly one of --sample or --trajectory");
  require(f.out, "--out");
  if (!f.sample.empty()) {
    const auto text = data::read_file(f.sample);
    int resolution = 0;
    try {
      const auto j = nlohmann::json::parse(text);
      const auto& masks = j.at("masks");
      if (masks.empty()) throw std::runtime_error("no masks");
      const auto bytes = data::base64_decode(masks.begin()->get<std::string>());
      if (!bytes) throw std::runtime_error("invalid base64");
      resolution = static_cast<int>(std::lround(std::sqrt(static_cast<double>(bytes->size()))));
    } catch (const std::exception& e) {
      throw std::runtime_error("malformed sample " + f.sample + ": " + e.what());
    }
    const auto s = data::sample_from_json(text, fs::path(f.sample).stem().string(), resolution);
    data::write_ppm(f.out, data::rasterize(s.gt_masks, s.diagram));
    out << "wrote " << f.out << "\n";
    return kExitOk;
  }
  const auto t = refine::read_trajectory(f.trajectory);
  fs::create_directories(f.out);
  for (std::size_t k = 0; k < t.masks.size(); ++k) {
    char name[32];
    std::snprintf(name, sizeof name, "frame_%02zu.ppm", k + 1);
    data::write_ppm(fs::path(f.out) / name, data::rasterize(t.masks[k], t.diagram));
  }
  out << "wrote " << t.masks.size() << " frames to " << f.out << "\n";
  return kExitOk;
}

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Graph-constrained floorplan layout generation with iterative refinement", "layout_refine"};
  app.require_subcommand(1);
  app.option_defaults()->always_capture_default();
  Flags f;

  auto common = [&](CLI::App* cmd) {
    cmd->add_option("--config", f.config, "JSON run config; flags override it");
    cmd->add_option("--seed", f.seed, "Seed (fallback: LAYOUT_REFINE_SEED, then config, then 0)");
  };

  auto* gen = app.add_subcommand("gen-data", "Generate a synthetic dataset directory");
  common(gen);
  gen->add_option("--out", f.out, "Output dataset directory")->required();
  gen->add_option("--count-per-room-count", f.count, "Samples per room count (5, 6, 7, 8)");
  gen->add_option("--resolution", f.resolution, "Mask resolution, 32 or 64 (default: model.resolution = 32)");

  auto* train = app.add_subcommand("train", "Train generator and discriminator on one fold");
  common(train);
  train->add_option("--data", f.data, "Dataset directory");
  train->add_option("--fold", f.fold, "Held-out room count (default 8)");
  train->add_option("--out", f.out, "Output directory for telemetry and checkpoints");
  train->add_option("--steps", f.steps, "Total training steps (default train.steps = 1000)");
  train->add_option("--resume", f.resume, "Checkpoint prefix to resume from, e.g. out/checkpoints/step_500");

  auto* ref = app.add_subcommand("refine", "Refine one diagram and dump the trajectory");
  common(ref);
  ref->add_option("--checkpoint", f.checkpoint, "Model checkpoint (.lgpp)")->required();
  ref->add_option("--diagram", f.diagram, "Diagram JSON file")->required();
  ref->add_option("--scheme", f.scheme, "heur:<p> | static:<12 ints> | dyna:<12 ints>;<12 ints> (default heur:1.0)");
  ref->add_option("--iters", f.iters, "Generator runs (default 10)");
  ref->add_option("--out", f.out, "Trajectory output directory")->required();

  auto* meta = app.add_subcommand("metaopt", "Search refinement schedules with TPE");
  common(meta);
  meta->add_option("--checkpoint", f.checkpoint, "Model checkpoint (.lgpp)")->required();
  meta->add_option("--data", f.data, "Dataset directory");
  meta->add_option("--fold", f.fold, "Held-out room count; diagrams come from the training side (default 8)");
  meta->add_option("--target", f.target, "diversity | compatibility (default compatibility)");
  meta->add_option("--scheme-family", f.family, "static | dynamic (default dynamic)");
  meta->add_option("--rounds", f.rounds, "TPE rounds (default 500)");
  meta->add_option("--diagrams", f.diagrams, "Training diagrams per objective evaluation (default 1000)");
  meta->add_option("--iters", f.iters, "Generator runs per refinement (default 10)");
  meta->add_option("--workers", f.workers, "Worker threads (default 1)");
  meta->add_option("--out", f.out, "Output directory (history.jsonl, best.json); resumes if present")->required();

  auto* ev = app.add_subcommand("eval", "Evaluate diversity and compatibility on the test fold");
  common(ev);
  ev->add_option("--checkpoint", f.checkpoint, "Model checkpoint (.lgpp)")->required();
  ev->add_option("--data", f.data, "Dataset directory");
  ev->add_option("--fold", f.fold, "Held-out room count (default 8)");
  ev->add_option("--scheme", f.scheme, "Refinement scheme (default heur:1.0)");
  ev->add_option("--iters", f.iters, "Generator runs (default 10)");
  ev->add_option("--samples", f.samples, "Samples per round (default 1000)");
  ev->add_option("--rounds", f.rounds, "Rounds (default 5)");
  ev->add_option("--workers", f.workers, "Worker threads (default 1)");
  ev->add_option("--out", f.out, "Report JSON path")->required();

  auto* render = app.add_subcommand("render", "Render a sample or a trajectory to P6 images");
  render->add_option("--sample", f.sample, "Sample JSON file");
  render->add_option("--trajectory", f.trajectory, "Trajectory directory written by refine");
  render->add_option("--out", f.out, "Image path (sample) or directory (trajectory)")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::CallForAllHelp& e) {
    out << app.help("", CLI::AppFormatMode::All);
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n";
    const auto sub = app.get_subcommands();
    err << (sub.empty() ? app.help() : sub.front()->help());
    return kExitUsage;
  }

  try {
    if (gen->parsed()) return cmd_gen_data(f, out);
    if (train->parsed()) return cmd_train(f, out);
    if (ref->parsed()) return cmd_refine(f, out);
    if (meta->parsed()) return cmd_metaopt(f, out, err);
    if (ev->parsed()) return cmd_eval(f, out);
    if (render->parsed()) return cmd_render(f, out);
  } catch (const UsageError& e) {
    err << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitRuntime;
  }
  return kExitUsage;
}

}  // namespace layoutgen::cli
