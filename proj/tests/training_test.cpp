#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>
#include <set>

#include "doctest.h"
#include "json.hpp"
#include "layoutgen/data/synthetic.hpp"
#include "layoutgen/model/checkpoint.hpp"
#include "layoutgen/numerics/ops.hpp"
#include "layoutgen/training/trainer.hpp"
#include "support/oracles.hpp"

using namespace layoutgen;
using namespace layoutgen::training;
using num::Tensor;
namespace fs = std::filesystem;

namespace {

const data::Dataset& small_dataset() {
  static const data::Dataset ds = data::generate_dataset(3, 2, 32);
  return ds;
}

std::vector<const data::Sample*> all_samples(const data::Dataset& ds) {
  std::vector<const data::Sample*> out;
  for (const auto& s : ds.samples) out.push_back(&s);
  return out;
}

TrainConfig quick(long steps, std::uint64_t seed = 1) {
  TrainConfig tc;
  tc.steps = steps;
  tc.seed = seed;
  return tc;
}

bool same_params(const model::ParamSet& a, const model::ParamSet& b) {
  if (a.size() != b.size()) return false;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const auto x = a.tensors()[i].data(), y = b.tensors()[i].data();
    if (!std::equal(x.begin(), x.end(), y.begin(), y.end())) return false;
  }
  return true;
}

struct Fixture {
  model::ModelConfig cfg = model::ModelConfig::desk_scale();
  const data::Sample& sample = small_dataset().samples.front();
  model::GraphContext ctx = model::GraphContext::build(sample.diagram, cfg);
  model::ModelParams params = model::init_params(cfg, 4);
  Tensor fake;

  Fixture() {
    std::mt19937_64 rng(2);
    fake = testing::random_tensor({ctx.count, 1, cfg.resolution, cfg.resolution}, rng);
  }
};

std::vector<Tensor> gradients(const Tensor& loss, num::Tape& tape, const model::ParamSet& p) {
  const auto g = num::backward(loss, tape, p.tensors());
  std::vector<Tensor> out;
  for (const auto& t : p.tensors()) out.push_back(g.of(t));
  return out;
}

}  // namespace

TEST_CASE("train config validation") {
  CHECK_NOTHROW(TrainConfig{}.validate());
  TrainConfig tc;
  tc.cond_prob = 1.5f;
  CHECK_THROWS_AS(tc.validate(), std::invalid_argument);
  tc = {};
  tc.lambda_cond = -1.0f;
  CHECK_THROWS_AS(tc.validate(), std::invalid_argument);
  tc = {};
  tc.n_critic = 0;
  CHECK_THROWS_AS(tc.validate(), std::invalid_argument);
}

TEST_CASE("sample_conditions_gt") {
  const auto& gt = small_dataset().samples.front().gt_masks;
  std::mt19937_64 rng(9);

  SUBCASE("extremes") {
    CHECK(sample_conditions_gt(gt, 0.0f, rng).selected.empty());
    const auto all = sample_conditions_gt(gt, 1.0f, rng);
    CHECK(static_cast<int>(all.selected.size()) == gt.count);
    CHECK(all.cond.masks == gt);
  }

  SUBCASE("selected components carry GT, others are zero") {
    const auto draw = sample_conditions_gt(gt, 0.5f, rng);
    const std::set<int> sel(draw.selected.begin(), draw.selected.end());
    for (int i = 0; i < gt.count; ++i) {
      CHECK(draw.cond.specified[i] == static_cast<bool>(sel.count(i)));
      const auto m = draw.cond.masks.mask(i), g = gt.mask(i);
      if (sel.count(i)) {
        CHECK(std::equal(m.begin(), m.end(), g.begin()));
      } else {
        CHECK(std::all_of(m.begin(), m.end(), [](float v) { return v == 0.0f; }));
      }
    }
  }

  SUBCASE("rate") {
    const int draws = 2000;
    long picked = 0;
    for (int k = 0; k < draws; ++k) picked += sample_conditions_gt(gt, 0.3f, rng).selected.size();
    const double n = static_cast<double>(draws) * gt.count;
    const double rate = picked / n;
    CHECK(std::abs(rate - 0.3) < 4.0 * std::sqrt(0.3 * 0.7 / n));
  }
}

TEST_CASE("generator loss") {
  Fixture f;
  std::mt19937_64 rng(5);
  const auto draw = sample_conditions_gt(f.sample.gt_masks, 1.0f, rng);
  const float d_fake = model::discriminator_forward(f.params.discriminator, f.cfg, f.ctx, f.fake).item();

  SUBCASE("no conditions: total is -D(fake)") {
    const auto none = ConditionDraw{model::ConditionSet::empty(f.ctx.count, f.cfg.resolution), {}};
    const auto gl = generator_loss(f.params.discriminator, f.cfg, f.ctx, f.fake, none.cond, none.selected, 1000.0f);
    CHECK(gl.total.item() == -d_fake);
    CHECK(gl.l1.item() == 0.0f);
  }

  SUBCASE("lambda 0 is the adversarial term") {
    const auto gl = generator_loss(f.params.discriminator, f.cfg, f.ctx, f.fake, draw.cond, draw.selected, 0.0f);
    CHECK(gl.total.item() == doctest::Approx(-d_fake));
    CHECK(gl.l1.item() > 0.0f);
  }

  SUBCASE("fake equal to the conditions gives a zero L1 term") {
    const Tensor exact = model::masks_to_tensor(f.sample.gt_masks);
    const auto gl = generator_loss(f.params.discriminator, f.cfg, f.ctx, exact, draw.cond, draw.selected, 1000.0f);
    CHECK(gl.l1.item() == 0.0f);
  }

  SUBCASE("L1 is the mean over selected components only") {
    auto part = sample_conditions_gt(f.sample.gt_masks, 0.5f, rng);
    while (part.selected.empty() || static_cast<int>(part.selected.size()) == f.ctx.count) {
      part = sample_conditions_gt(f.sample.gt_masks, 0.5f, rng);
    }
    double sum = 0.0;
    const std::size_t px = f.sample.gt_masks.pixels();
    for (int i : part.selected) {
      for (std::size_t k = 0; k < px; ++k) sum += std::abs(f.fake[i * px + k] - f.sample.gt_masks.mask(i)[k]);
    }
    const double expected = sum / (px * part.selected.size());
    const auto gl = generator_loss(f.params.discriminator, f.cfg, f.ctx, f.fake, part.cond, part.selected, 1000.0f);
    CHECK(gl.l1.item() == doctest::Approx(expected).epsilon(1e-5));
  }

  SUBCASE("selecting an unconditioned component is rejected") {
    const auto none = model::ConditionSet::empty(f.ctx.count, f.cfg.resolution);
    CHECK_THROWS_AS(generator_loss(f.params.discriminator, f.cfg, f.ctx, f.fake, none, {0}, 1.0f),
                    std::invalid_argument);
  }
}

TEST_CASE("no generator gradient from L1 when nothing is conditioned") {
  Fixture f;
  const auto none = model::ConditionSet::empty(f.ctx.count, f.cfg.resolution);
  const Tensor cond = none.to_tensor();
  const Tensor noise = Tensor({f.ctx.count, f.cfg.noise_dim});
  auto grads_for = [&](float lambda) {
    num::Tape tape;
    num::TapeScope scope(tape);
    const Tensor fake = model::generator_forward(f.params.generator, f.cfg, f.ctx, noise, cond);
    const auto gl = generator_loss(f.params.discriminator, f.cfg, f.ctx, fake, none, {}, lambda);
    return gradients(gl.total, tape, f.params.generator);
  };
  const auto with = grads_for(1000.0f), without = grads_for(0.0f);
  REQUIRE(with.size() == without.size());
  for (std::size_t i = 0; i < with.size(); ++i) {
    CHECK(std::equal(with[i].data().begin(), with[i].data().end(), without[i].data().begin()));
  }
}

TEST_CASE("discriminator loss") {
  Fixture f;
  SUBCASE("real == fake without penalty is zero") {
    num::Tape tape;
    const auto dl = discriminator_loss(f.params.discriminator, f.cfg, f.ctx, f.fake, f.fake, 0.5f, 0.0f, tape);
    CHECK(dl.total.item() == 0.0f);
    CHECK(dl.penalty.item() == 0.0f);
  }
  SUBCASE("penalty is finite and non-negative, wasserstein is D(fake) - D(real)") {
    num::Tape tape;
    const Tensor real = model::masks_to_tensor(f.sample.gt_masks);
    const auto dl = discriminator_loss(f.params.discriminator, f.cfg, f.ctx, real, f.fake, 0.3f, 10.0f, tape);
    const float d_real = model::discriminator_forward(f.params.discriminator, f.cfg, f.ctx, real).item();
    const float d_fake = model::discriminator_forward(f.params.discriminator, f.cfg, f.ctx, f.fake).item();
    CHECK(dl.wasserstein.item() == doctest::Approx(d_fake - d_real));
    CHECK(std::isfinite(dl.penalty.item()));
    CHECK(dl.penalty.item() >= 0.0f);
  }
}

TEST_CASE("gradient penalty closed forms") {
  std::mt19937_64 rng(3);
  const Tensor real = testing::random_tensor({3, 1, 4, 4}, rng);
  const Tensor fake = testing::random_tensor({3, 1, 4, 4}, rng);
  const double n = static_cast<double>(real.numel());

  SUBCASE("sum critic has unit gradient everywhere") {
    num::Tape tape;
    const Tensor gp = gradient_penalty([](const Tensor& x) { return num::sum(x); }, real, fake, 0.4f, 10.0f, tape);
    CHECK(gp.item() == doctest::Approx(10.0 * std::pow(std::sqrt(n) - 1.0, 2)).epsilon(1e-5));
  }
  SUBCASE("constant critic gives gamma") {
    num::Tape tape;
    const Tensor gp =
        gradient_penalty([](const Tensor& x) { return num::scale(num::sum(x), 0.0f); }, real, fake, 0.4f, 10.0f, tape);
    CHECK(gp.item() == doctest::Approx(10.0).epsilon(1e-5));
  }
  SUBCASE("shape mismatch") {
    num::Tape tape;
    const Tensor other({2, 1, 4, 4});
    CHECK_THROWS_AS(gradient_penalty([](const Tensor& x) { return num::sum(x); }, real, other, 0.5f, 1.0f, tape),
                    num::DimensionError);
  }
}

TEST_CASE("trainer is deterministic") {
  const auto samples = all_samples(small_dataset());
  Trainer a(model::ModelConfig::desk_scale(), quick(2), samples);
  Trainer b(model::ModelConfig::desk_scale(), quick(2), samples);
  for (int k = 0; k < 2; ++k) {
    const auto sa = a.step(), sb = b.step();
    CHECK(sa.sample_id == sb.sample_id);
    CHECK(sa.d_loss == sb.d_loss);
    CHECK(sa.g_loss == sb.g_loss);
    CHECK(sa.l1_term == sb.l1_term);
  }
  CHECK(same_params(a.state().params.generator, b.state().params.generator));
  CHECK(same_params(a.state().params.discriminator, b.state().params.discriminator));

  Trainer c(model::ModelConfig::desk_scale(), quick(2, 2), samples);
  c.step();
  c.step();
  CHECK_FALSE(same_params(a.state().params.generator, c.state().params.generator));
}

TEST_CASE("checkpoint resume reproduces the next step") {
  const auto samples = all_samples(small_dataset());
  const fs::path dir = fs::temp_directory_path() / "layoutgen_resume_test";
  fs::remove_all(dir);
  fs::create_directories(dir);

  Trainer a(model::ModelConfig::desk_scale(), quick(3), samples);
  a.step();
  a.save(dir / "ckpt");
  const auto expected = a.step();

  Trainer b(model::ModelConfig::desk_scale(), quick(3), samples);
  b.load(dir / "ckpt");
  CHECK(b.state().step == 1);
  const auto got = b.step();
  CHECK(got.step == expected.step);
  CHECK(got.sample_id == expected.sample_id);
  CHECK(got.d_loss == expected.d_loss);
  CHECK(got.g_loss == expected.g_loss);
  CHECK(same_params(a.state().params.generator, b.state().params.generator));
  CHECK(same_params(a.state().params.discriminator, b.state().params.discriminator));

  SUBCASE("different sample list is refused") {
    auto fewer = samples;
    fewer.pop_back();
    Trainer c(model::ModelConfig::desk_scale(), quick(3), fewer);
    CHECK_THROWS_AS(c.load(dir / "ckpt"), model::CheckpointError);
  }
  fs::remove_all(dir);
}

TEST_CASE("training only draws from the given fold") {
  const auto& ds = small_dataset();
  const auto fold = data::kfold_split(ds, 8);
  const auto train = data::select(ds, fold.train_ids);
  const std::set<std::string> held(fold.test_ids.begin(), fold.test_ids.end());
  REQUIRE_FALSE(held.empty());
  Trainer t(model::ModelConfig::desk_scale(), quick(6), train);
  for (int k = 0; k < 6; ++k) CHECK(held.count(t.step().sample_id) == 0);
}

TEST_CASE("resolution mismatch and empty sample list are rejected") {
  const auto samples = all_samples(small_dataset());
  CHECK_THROWS_AS(Trainer(model::ModelConfig{}, quick(1), samples), std::invalid_argument);
  CHECK_THROWS_AS(Trainer(model::ModelConfig::desk_scale(), quick(1), {}), std::invalid_argument);
}

TEST_CASE("run writes telemetry and checkpoints") {
  const auto samples = all_samples(small_dataset());
  const fs::path dir = fs::temp_directory_path() / "layoutgen_run_test";
  fs::remove_all(dir);
  auto tc = quick(2);
  tc.checkpoint_every = 1;
  Trainer t(model::ModelConfig::desk_scale(), tc, samples);
  int seen = 0;
  t.run(dir, [&](const StepStats&) { ++seen; });
  CHECK(seen == 2);
  std::ifstream in(dir / "telemetry.jsonl");
  std::string line;
  int lines = 0;
  while (std::getline(in, line)) {
    const auto j = nlohmann::json::parse(line);
    for (const char* key : {"step", "d_loss", "g_loss", "l1_term", "gp_term"}) CHECK(j.contains(key));
    CHECK(j["step"] == ++lines);
  }
  CHECK(lines == 2);
  CHECK(fs::exists(dir / "checkpoints" / "step_1.lgpp"));
  CHECK(fs::exists(dir / "checkpoints" / "step_2.state.json"));
  CHECK(fs::exists(dir / "final.lgpp"));
  fs::remove_all(dir);
}

TEST_CASE("non-finite loss aborts with a dump") {
  const auto samples = all_samples(small_dataset());
  const fs::path dir = fs::temp_directory_path() / "layoutgen_abort_test";
  fs::remove_all(dir);
  Trainer t(model::ModelConfig::desk_scale(), quick(1), samples);
  auto w = t.state().params.discriminator.tensors().back().data();
  w[0] = std::numeric_limits<float>::quiet_NaN();
  CHECK_THROWS_AS(t.run(dir), TrainingError);
  CHECK(fs::exists(dir / "abort.json"));
  fs::remove_all(dir);
}
