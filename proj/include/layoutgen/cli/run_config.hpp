#pragma once

#include <cstdint>
#include <string>

#include "layoutgen/model/config.hpp"
#include "layoutgen/training/trainer.hpp"

namespace layoutgen::cli {

struct EvalSettings {
  int samples = 1000;
  int rounds = 5;
};

struct MetaoptSettings {
  int rounds = 500;
  std::string target = "compatibility";  // diversity | compatibility
  std::string family = "dynamic";        // static | dynamic
  int diagrams = 1000;                   // training-fold diagrams per objective evaluation
};

/// Every setting the commands read. Defaults are listed in the README; a
/// JSON config may override any subset, and unknown keys are rejected.
struct RunConfig {
  model::ModelConfig model = model::ModelConfig::desk_scale();
  training::TrainConfig train;
  std::string scheme = "heur:1.0";
  int iterations = 10;
  std::string data;
  int fold = 8;
  std::uint64_t seed = 0;
  std::string out;
  int workers = 1;
  EvalSettings eval;
  MetaoptSettings metaopt;

  void validate() const;
};

/// Throws std::invalid_argument naming the offending key.
RunConfig parse_run_config(const std::string& json_text);
std::string to_json(const RunConfig& c);

}  // namespace layoutgen::cli
