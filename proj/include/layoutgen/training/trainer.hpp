#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

#include "layoutgen/data/dataset.hpp"
#include "layoutgen/model/networks.hpp"
#include "layoutgen/numerics/adam.hpp"

namespace layoutgen::training {

struct TrainConfig {
  float lr = 1e-4f;
  float b1 = 0.5f;
  float b2 = 0.999f;
  int n_critic = 1;
  int batch_size = 1;  // graphs per step
  float lambda_cond = 1000.0f;
  float gamma_gp = 10.0f;
  long steps = 1000;
  std::uint64_t seed = 0;
  float cond_prob = 0.5f;
  long checkpoint_every = 0;  // 0 disables periodic checkpoints

  void validate() const;
  num::AdamConfig adam() const { return {lr, b1, b2, 1e-8f}; }
};

struct ConditionDraw {
  model::ConditionSet cond;
  std::vector<int> selected;  // component positions given their GT mask
};

/// Each component independently keeps its GT mask with probability cond_prob.
ConditionDraw sample_conditions_gt(const graphs::LayoutMasks& gt, float cond_prob, std::mt19937_64& rng);

struct GeneratorLoss {
  num::Tensor total;
  num::Tensor adversarial;  // -D(fake)
  num::Tensor l1;           // mean |fake - cond| over selected components; 0 when none
};

GeneratorLoss generator_loss(const model::ParamSet& d, const model::ModelConfig& cfg, const model::GraphContext& ctx,
                             const num::Tensor& fake, const model::ConditionSet& cond,
                             const std::vector<int>& selected, float lambda_cond);

using Critic = std::function<num::Tensor(const num::Tensor&)>;

/// gamma * (||grad critic(x_hat)|| - 1)^2 with x_hat = eps*real + (1-eps)*fake,
/// the norm taken over every element. The inner gradient is recorded on
/// `tape`, so the result is differentiable in the critic's parameters.
num::Tensor gradient_penalty(const Critic& critic, const num::Tensor& real, const num::Tensor& fake, float epsilon,
                             float gamma, num::Tape& tape);

struct DiscriminatorLoss {
  num::Tensor total;
  num::Tensor wasserstein;  // D(fake) - D(real)
  num::Tensor penalty;
};

/// Must run with `tape` active.
DiscriminatorLoss discriminator_loss(const model::ParamSet& d, const model::ModelConfig& cfg,
                                     const model::GraphContext& ctx, const num::Tensor& real,
                                     const num::Tensor& fake, float epsilon, float gamma, num::Tape& tape);

struct StepStats {
  long step = 0;
  float d_loss = 0;
  float g_loss = 0;
  float l1_term = 0;
  float gp_term = 0;
  std::string sample_id;
};

struct TrainingError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct TrainState {
  long step = 0;
  model::ModelParams params;
  num::AdamState g_adam;
  num::AdamState d_adam;
  std::mt19937_64 rng;
};

class Trainer {
 public:
  Trainer(model::ModelConfig mc, TrainConfig tc, std::vector<const data::Sample*> samples);

  /// One step: n_critic critic updates, then one generator update.
  /// Throws TrainingError on a non-finite loss.
  StepStats step();

  /// Runs until state().step == config().steps. With a non-empty `out_dir`,
  /// appends telemetry to `telemetry.jsonl`, writes periodic checkpoints to
  /// `checkpoints/step_<n>` and a final one to `final`.
  void run(const std::filesystem::path& out_dir, const std::function<void(const StepStats&)>& on_step = {});

  /// Writes `<prefix>.lgpp` (+ `.lgpp.json` model config) and `<prefix>.state.json`.
  void save(const std::filesystem::path& prefix) const;
  /// Restores everything written by save(); the sample list must match.
  void load(const std::filesystem::path& prefix);

  const TrainState& state() const { return state_; }
  TrainState& state() { return state_; }
  const model::ModelConfig& model_config() const { return mc_; }
  const TrainConfig& config() const { return tc_; }

 private:
  const model::GraphContext& context(int index);

  model::ModelConfig mc_;
  TrainConfig tc_;
  std::vector<const data::Sample*> samples_;
  std::map<int, model::GraphContext> contexts_;
  TrainState state_;
};

}  // namespace layoutgen::training
