#include "layoutgen/cli/run_config.hpp"

#include <set>
#include <stdexcept>

#include "json.hpp"
#include "layoutgen/refine/refine.hpp"

namespace layoutgen::cli {

using nlohmann::json;

namespace {

void only_keys(const json& j, const std::string& where, const std::set<std::string>& allowed) {
  if (!j.is_object()) throw std::invalid_argument(where + " must be an object");
  for (const auto& [key, _] : j.items()) {
    if (!allowed.contains(key)) throw std::invalid_argument("unknown config key \"" + (where.empty() ? key : where + "." + key) + "\"");
  }
}

template <typename T>
void read(const json& j, const char* key, T& dst, const std::string& where) {
  if (!j.contains(key)) return;
  try {
    dst = j.at(key).get<T>();
  } catch (const json::exception&) {
    throw std::invalid_argument("config key \"" + (where.empty() ? std::string(key) : where + "." + key) + "\" has the wrong type");
  }
}

}  // namespace

void RunConfig::validate() const {
  model.validate();
  train.validate();
  refine::parse_scheme(scheme, iterations);
  if (fold < 5 || fold > 8) throw std::invalid_argument("fold must be in [5, 8]");
  if (workers < 1) throw std::invalid_argument("workers must be positive");
  if (eval.samples < 1 || eval.rounds < 1) throw std::invalid_argument("eval.samples and eval.rounds must be positive");
  if (metaopt.rounds < 1 || metaopt.diagrams < 1) throw std::invalid_argument("metaopt.rounds and metaopt.diagrams must be positive");
  if (metaopt.target != "diversity" && metaopt.target != "compatibility") {
    throw std::invalid_argument("metaopt.target must be diversity or compatibility");
  }
  if (metaopt.family != "static" && metaopt.family != "dynamic") {
    throw std::invalid_argument("metaopt.family must be static or dynamic");
  }
}

RunConfig parse_run_config(const std::string& json_text) {
  json j;
  try {
    j = json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw std::invalid_argument(std::string("config is not valid JSON: ") + e.what());
  }
  RunConfig c;
  only_keys(j, "", {"model", "train", "scheme", "iterations", "data", "fold", "seed", "out", "workers", "eval", "metaopt"});
  if (j.contains("model")) {
    const auto& m = j.at("model");
    only_keys(m, "model", {"resolution", "base_channels", "noise_dim", "mpn_rounds_per_scale", "pooling", "leaky_alpha"});
    read(m, "resolution", c.model.resolution, "model");
    read(m, "base_channels", c.model.base_channels, "model");
    read(m, "noise_dim", c.model.noise_dim, "model");
    read(m, "mpn_rounds_per_scale", c.model.mpn_rounds_per_scale, "model");
    read(m, "leaky_alpha", c.model.leaky_alpha, "model");
    std::string pooling = model::to_string(c.model.pooling);
    read(m, "pooling", pooling, "model");
    c.model.pooling = model::pooling_from_string(pooling);
  }
  if (j.contains("train")) {
    const auto& t = j.at("train");
    only_keys(t, "train", {"lr", "b1", "b2", "n_critic", "batch_size", "lambda_cond", "gamma_gp", "steps", "seed",
                           "cond_prob", "checkpoint_every"});
    read(t, "lr", c.train.lr, "train");
    read(t, "b1", c.train.b1, "train");
    read(t, "b2", c.train.b2, "train");
    read(t, "n_critic", c.train.n_critic, "train");
    read(t, "batch_size", c.train.batch_size, "train");
    read(t, "lambda_cond", c.train.lambda_cond, "train");
    read(t, "gamma_gp", c.train.gamma_gp, "train");
    read(t, "steps", c.train.steps, "train");
    read(t, "seed", c.train.seed, "train");
    read(t, "cond_prob", c.train.cond_prob, "train");
    read(t, "checkpoint_every", c.train.checkpoint_every, "train");
  }
  read(j, "scheme", c.scheme, "");
  read(j, "iterations", c.iterations, "");
  read(j, "data", c.data, "");
  read(j, "fold", c.fold, "");
  read(j, "seed", c.seed, "");
  read(j, "out", c.out, "");
  read(j, "workers", c.workers, "");
  if (j.contains("eval")) {
    const auto& e = j.at("eval");
    only_keys(e, "eval", {"samples", "rounds"});
    read(e, "samples", c.eval.samples, "eval");
    read(e, "rounds", c.eval.rounds, "eval");
  }
  if (j.contains("metaopt")) {
    const auto& m = j.at("metaopt");
    only_keys(m, "metaopt", {"rounds", "target", "family", "diagrams"});
    read(m, "rounds", c.metaopt.rounds, "metaopt");
    read(m, "target", c.metaopt.target, "metaopt");
    read(m, "family", c.metaopt.family, "metaopt");
    read(m, "diagrams", c.metaopt.diagrams, "metaopt");
  }
  c.validate();
  return c;
}

std::string to_json(const RunConfig& c) {
  const json j = {
      {"model",
       {{"resolution", c.model.resolution},
        {"base_channels", c.model.base_channels},
        {"noise_dim", c.model.noise_dim},
        {"mpn_rounds_per_scale", c.model.mpn_rounds_per_scale},
        {"pooling", model::to_string(c.model.pooling)},
        {"leaky_alpha", c.model.leaky_alpha}}},
      {"train",
       {{"lr", c.train.lr},
        {"b1", c.train.b1},
        {"b2", c.train.b2},
        {"n_critic", c.train.n_critic},
        {"batch_size", c.train.batch_size},
        {"lambda_cond", c.train.lambda_cond},
        {"gamma_gp", c.train.gamma_gp},
        {"steps", c.train.steps},
        {"seed", c.train.seed},
        {"cond_prob", c.train.cond_prob},
        {"checkpoint_every", c.train.checkpoint_every}}},
      {"scheme", c.scheme},
      {"iterations", c.iterations},
      {"data", c.data},
      {"fold", c.fold},
      {"seed", c.seed},
      {"out", c.out},
      {"workers", c.workers},
      {"eval", {{"samples", c.eval.samples}, {"rounds", c.eval.rounds}}},
      {"metaopt",
       {{"rounds", c.metaopt.rounds},
        {"target", c.metaopt.target},
        {"family", c.metaopt.family},
        {"diagrams", c.metaopt.diagrams}}}};
  return j.dump(1);
}

}  // namespace layoutgen::cli
