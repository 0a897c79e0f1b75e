#include "layoutgen/training/trainer.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include "json.hpp"
#include "layoutgen/model/checkpoint.hpp"
#include "layoutgen/numerics/seed.hpp"

namespace layoutgen::training {

using model::ConditionSet;
using model::GraphContext;
using num::Tensor;
using nlohmann::json;

void TrainConfig::validate() const {
  if (!(cond_prob >= 0.0f && cond_prob <= 1.0f)) throw std::invalid_argument("cond_prob must be in [0, 1]");
  if (!(lambda_cond >= 0.0f)) throw std::invalid_argument("lambda_cond must be non-negative");
  if (!(gamma_gp >= 0.0f)) throw std::invalid_argument("gamma_gp must be non-negative");
  if (!(lr > 0.0f) || !(b1 >= 0.0f && b1 < 1.0f) || !(b2 >= 0.0f && b2 < 1.0f)) {
    throw std::invalid_argument("Adam settings need lr > 0 and b1, b2 in [0, 1)");
  }
  if (n_critic < 1 || batch_size < 1 || steps < 0 || checkpoint_every < 0) {
    throw std::invalid_argument("n_critic and batch_size must be positive, steps and checkpoint_every non-negative");
  }
}

ConditionDraw sample_conditions_gt(const graphs::LayoutMasks& gt, float cond_prob, std::mt19937_64& rng) {
  ConditionDraw out{ConditionSet::empty(gt.count, gt.resolution), {}};
  std::bernoulli_distribution keep(cond_prob);
  for (int i = 0; i < gt.count; ++i) {
    if (!keep(rng)) continue;
    out.cond.specified[i] = true;
    const auto src = gt.mask(i);
    std::copy(src.begin(), src.end(), out.cond.masks.mask(i).begin());
    out.selected.push_back(i);
  }
  return out;
}

namespace {

std::shared_ptr<const num::MixMatrix> selector(const std::vector<int>& rows, int count) {
  num::MixMatrix m{static_cast<int>(rows.size()), count, std::vector<float>(rows.size() * count, 0.0f)};
  for (std::size_t r = 0; r < rows.size(); ++r) m.values[r * count + rows[r]] = 1.0f;
  return std::make_shared<const num::MixMatrix>(std::move(m));
}

Tensor selected_masks(const ConditionSet& cond, const std::vector<int>& rows) {
  const int r = cond.masks.resolution;
  const std::size_t px = cond.masks.pixels();
  Tensor out({static_cast<int>(rows.size()), 1, r, r});
  for (std::size_t k = 0; k < rows.size(); ++k) {
    const auto m = cond.masks.mask(rows[k]);
    std::copy(m.begin(), m.end(), out.data().begin() + k * px);
  }
  return out;
}

bool finite(const Tensor& t) { return std::isfinite(t.item()); }

}  // namespace

GeneratorLoss generator_loss(const model::ParamSet& d, const model::ModelConfig& cfg, const GraphContext& ctx,
                             const Tensor& fake, const ConditionSet& cond, const std::vector<int>& selected,
                             float lambda_cond) {
  GeneratorLoss out;
  out.adversarial = num::scale(model::discriminator_forward(d, cfg, ctx, fake), -1.0f);
  if (selected.empty()) {
    out.l1 = Tensor::scalar(0.0f);
    out.total = out.adversarial;
    return out;
  }
  for (int i : selected) {
    if (i < 0 || i >= cond.count() || !cond.specified[i]) throw std::invalid_argument("generator_loss: selected component is not conditioned");
  }
  const Tensor picked = num::mix_components(fake, selector(selected, ctx.count));
  out.l1 = num::l1_distance(picked, selected_masks(cond, selected));
  out.total = num::add(out.adversarial, num::scale(out.l1, lambda_cond));
  return out;
}

Tensor gradient_penalty(const Critic& critic, const Tensor& real, const Tensor& fake, float epsilon, float gamma,
                        num::Tape& tape) {
  if (real.shape() != fake.shape()) {
    throw num::DimensionError("gradient_penalty: real " + num::to_string(real.shape()) + " vs fake " +
                              num::to_string(fake.shape()));
  }
  Tensor mixed(real.shape());
  auto dst = mixed.data();
  for (std::size_t i = 0; i < dst.size(); ++i) dst[i] = epsilon * real[i] + (1.0f - epsilon) * fake[i];
  mixed.set_requires_grad(true);
  num::TapeScope scope(tape);
  const Tensor score = critic(mixed);
  const Tensor wrt[] = {mixed};
  const Tensor g = num::backward(score, tape, wrt, true).of(mixed);
  const Tensor norm = num::power(num::add_scalar(num::sum(num::square(g)), 1e-12f), 0.5f);
  return num::scale(num::square(num::add_scalar(norm, -1.0f)), gamma);
}

DiscriminatorLoss discriminator_loss(const model::ParamSet& d, const model::ModelConfig& cfg, const GraphContext& ctx,
                                     const Tensor& real, const Tensor& fake, float epsilon, float gamma,
                                     num::Tape& tape) {
  num::TapeScope scope(tape);
  DiscriminatorLoss out;
  out.wasserstein = num::sub(model::discriminator_forward(d, cfg, ctx, fake),
                             model::discriminator_forward(d, cfg, ctx, real));
  if (gamma == 0.0f) {
    out.penalty = Tensor::scalar(0.0f);
    out.total = out.wasserstein;
    return out;
  }
  const auto critic = [&](const Tensor& x) { return model::discriminator_forward(d, cfg, ctx, x); };
  out.penalty = gradient_penalty(critic, real, fake, epsilon, gamma, tape);
  out.total = num::add(out.wasserstein, out.penalty);
  return out;
}

Trainer::Trainer(model::ModelConfig mc, TrainConfig tc, std::vector<const data::Sample*> samples)
    : mc_(mc), tc_(tc), samples_(std::move(samples)) {
  mc_.validate();
  tc_.validate();
  if (samples_.empty()) throw std::invalid_argument("training needs at least one sample");
  for (const auto* s : samples_) {
    if (s->gt_masks.resolution != mc_.resolution) {
      throw std::invalid_argument("sample " + s->sample_id + " has resolution " + std::to_string(s->gt_masks.resolution) +
                                  ", model expects " + std::to_string(mc_.resolution));
    }
  }
  state_.params = model::init_params(mc_, num::derive_seed(tc_.seed, {11}));
  state_.g_adam = num::AdamState(tc_.adam(), state_.params.generator.tensors());
  state_.d_adam = num::AdamState(tc_.adam(), state_.params.discriminator.tensors());
  state_.rng.seed(num::derive_seed(tc_.seed, {12}));
}

const GraphContext& Trainer::context(int index) {
  auto it = contexts_.find(index);
  if (it == contexts_.end()) it = contexts_.emplace(index, GraphContext::build(samples_[index]->diagram, mc_)).first;
  return it->second;
}

StepStats Trainer::step() {
  auto& rng = state_.rng;
  auto& p = state_.params;
  StepStats st;
  st.step = state_.step + 1;

  struct Item {
    int index;
    ConditionDraw draw;
    Tensor cond;
    Tensor real;
  };
  std::vector<Item> batch;
  for (int b = 0; b < tc_.batch_size; ++b) {
    const int index = std::uniform_int_distribution<int>(0, static_cast<int>(samples_.size()) - 1)(rng);
    auto draw = sample_conditions_gt(samples_[index]->gt_masks, tc_.cond_prob, rng);
    Tensor cond = draw.cond.to_tensor();
    batch.push_back({index, std::move(draw), std::move(cond), model::masks_to_tensor(samples_[index]->gt_masks)});
  }
  st.sample_id = samples_[batch.front().index]->sample_id;
  const float inv = 1.0f / static_cast<float>(batch.size());

  auto check = [&](const char* what, const Tensor& total, const Tensor& a, const Tensor& b) {
    if (finite(total)) return;
    std::ostringstream msg;
    msg << "non-finite " << what << " at step " << st.step << " (sample " << st.sample_id << "): total "
        << total.item() << ", parts " << a.item() << ", " << b.item();
    throw TrainingError(msg.str());
  };

  for (int c = 0; c < tc_.n_critic; ++c) {
    num::Tape tape;
    Tensor loss, wass, pen;
    for (const auto& item : batch) {
      const auto& ctx = context(item.index);
      Tensor fake;
      {
        num::NoGradScope no_grad;
        fake = model::generator_forward(p.generator, mc_, ctx, model::sample_noise(rng, ctx.count, mc_.noise_dim),
                                        item.cond);
      }
      const float eps = std::uniform_real_distribution<float>(0.0f, 1.0f)(rng);
      const auto dl = discriminator_loss(p.discriminator, mc_, ctx, item.real, fake, eps, tc_.gamma_gp, tape);
      num::TapeScope scope(tape);
      const Tensor part = num::scale(dl.total, inv);
      loss = loss.defined() ? num::add(loss, part) : part;
      wass = wass.defined() ? num::add(wass, num::scale(dl.wasserstein, inv)) : num::scale(dl.wasserstein, inv);
      pen = pen.defined() ? num::add(pen, num::scale(dl.penalty, inv)) : num::scale(dl.penalty, inv);
    }
    check("discriminator loss", loss, wass, pen);
    const auto grads = num::backward(loss, tape, p.discriminator.tensors());
    std::vector<Tensor> g;
    for (const auto& t : p.discriminator.tensors()) g.push_back(grads.of(t));
    num::adam_step(p.discriminator.tensors(), g, state_.d_adam);
    st.d_loss = loss.item();
    st.gp_term = pen.item();
  }

  {
    num::Tape tape;
    num::TapeScope scope(tape);
    Tensor loss, adv, l1;
    for (const auto& item : batch) {
      const auto& ctx = context(item.index);
      const Tensor fake = model::generator_forward(p.generator, mc_, ctx,
                                                   model::sample_noise(rng, ctx.count, mc_.noise_dim), item.cond);
      const auto gl = generator_loss(p.discriminator, mc_, ctx, fake, item.draw.cond, item.draw.selected, tc_.lambda_cond);
      loss = loss.defined() ? num::add(loss, num::scale(gl.total, inv)) : num::scale(gl.total, inv);
      adv = adv.defined() ? num::add(adv, num::scale(gl.adversarial, inv)) : num::scale(gl.adversarial, inv);
      l1 = l1.defined() ? num::add(l1, num::scale(gl.l1, inv)) : num::scale(gl.l1, inv);
    }
    check("generator loss", loss, adv, l1);
    const auto grads = num::backward(loss, tape, p.generator.tensors());
    std::vector<Tensor> g;
    for (const auto& t : p.generator.tensors()) g.push_back(grads.of(t));
    num::adam_step(p.generator.tensors(), g, state_.g_adam);
    st.g_loss = loss.item();
    st.l1_term = l1.item();
  }
  state_.step = st.step;
  return st;
}

void Trainer::run(const std::filesystem::path& out_dir, const std::function<void(const StepStats&)>& on_step) {
  std::ofstream telemetry;
  if (!out_dir.empty()) {
    std::filesystem::create_directories(out_dir / "checkpoints");
    telemetry.open(out_dir / "telemetry.jsonl", std::ios::app);
    if (!telemetry) throw std::runtime_error("cannot open telemetry log in " + out_dir.string());
  }
  while (state_.step < tc_.steps) {
    StepStats st;
    try {
      st = step();
    } catch (const TrainingError& e) {
      if (!out_dir.empty()) {
        const json dump = {{"step", state_.step + 1}, {"error", e.what()}};
        std::ofstream(out_dir / "abort.json") << dump.dump(1) << '\n';
      }
      throw;
    }
    if (telemetry.is_open()) {
      const json line = {{"step", st.step}, {"d_loss", st.d_loss}, {"g_loss", st.g_loss}, {"l1_term", st.l1_term},
                         {"gp_term", st.gp_term}};
      telemetry << line.dump() << '\n';
    }
    if (on_step) on_step(st);
    if (!out_dir.empty() && tc_.checkpoint_every > 0 && st.step % tc_.checkpoint_every == 0) {
      telemetry.flush();
      save(out_dir / "checkpoints" / ("step_" + std::to_string(st.step)));
    }
  }
  if (!out_dir.empty()) save(out_dir / "final");
}

namespace {

json train_config_json(const TrainConfig& tc) {
  return {{"lr", tc.lr},           {"b1", tc.b1},
          {"b2", tc.b2},           {"n_critic", tc.n_critic},
          {"batch_size", tc.batch_size}, {"lambda_cond", tc.lambda_cond},
          {"gamma_gp", tc.gamma_gp}, {"steps", tc.steps},
          {"seed", tc.seed},       {"cond_prob", tc.cond_prob},
          {"checkpoint_every", tc.checkpoint_every}};
}

model::NamedTensors moments(const model::ParamSet& p, const num::AdamState& s, const std::string& prefix) {
  model::NamedTensors out;
  for (std::size_t i = 0; i < p.size(); ++i) {
    const auto& shape = p.tensors()[i].shape();
    out.emplace_back(prefix + "m." + p.names()[i], Tensor(shape, s.first_moment[i]));
    out.emplace_back(prefix + "v." + p.names()[i], Tensor(shape, s.second_moment[i]));
  }
  return out;
}

void restore_moments(const model::NamedTensors& all, const model::ParamSet& p, num::AdamState& s,
                     const std::string& prefix) {
  std::map<std::string, const Tensor*> by_name;
  for (const auto& [name, t] : all) by_name[name] = &t;
  for (std::size_t i = 0; i < p.size(); ++i) {
    for (auto [tag, dst] : {std::pair{"m.", &s.first_moment[i]}, std::pair{"v.", &s.second_moment[i]}}) {
      auto it = by_name.find(prefix + tag + p.names()[i]);
      if (it == by_name.end() || it->second->numel() != dst->size()) {
        throw model::CheckpointError("missing optimizer state " + prefix + tag + p.names()[i]);
      }
      dst->assign(it->second->data().begin(), it->second->data().end());
    }
  }
}

}  // namespace

void Trainer::save(const std::filesystem::path& prefix) const {
  auto lgpp = prefix;
  lgpp += ".lgpp";
  model::save_model(lgpp, mc_, state_.params);
  model::NamedTensors opt = moments(state_.params.generator, state_.g_adam, "ga.");
  for (auto& e : moments(state_.params.discriminator, state_.d_adam, "da.")) opt.push_back(std::move(e));
  auto opt_path = prefix;
  opt_path += ".adam.lgpp";
  model::save_tensors(opt_path, opt);

  std::ostringstream rng;
  rng << state_.rng;
  json ids = json::array();
  for (const auto* s : samples_) ids.push_back(s->sample_id);
  const json st = {{"step", state_.step},
                   {"g_adam_step", state_.g_adam.step},
                   {"d_adam_step", state_.d_adam.step},
                   {"rng", rng.str()},
                   {"train_config", train_config_json(tc_)},
                   {"samples", ids}};
  auto state_path = prefix;
  state_path += ".state.json";
  data::write_file_atomic(state_path, st.dump(1));
}

void Trainer::load(const std::filesystem::path& prefix) {
  auto lgpp = prefix;
  lgpp += ".lgpp";
  auto [cfg, params] = model::load_model(lgpp);
  if (!(cfg == mc_)) throw model::CheckpointError("checkpoint model config differs from the requested one");
  auto state_path = prefix;
  state_path += ".state.json";
  json st;
  try {
    st = json::parse(data::read_file(state_path));
  } catch (const std::exception& e) {
    throw model::CheckpointError(std::string("bad training state: ") + e.what());
  }
  json ids = json::array();
  for (const auto* s : samples_) ids.push_back(s->sample_id);
  if (st.value("samples", json::array()) != ids) throw model::CheckpointError("checkpoint was trained on different samples");

  state_.params = std::move(params);
  state_.g_adam = num::AdamState(tc_.adam(), state_.params.generator.tensors());
  state_.d_adam = num::AdamState(tc_.adam(), state_.params.discriminator.tensors());
  auto opt_path = prefix;
  opt_path += ".adam.lgpp";
  const auto opt = model::load_tensors(opt_path);
  restore_moments(opt, state_.params.generator, state_.g_adam, "ga.");
  restore_moments(opt, state_.params.discriminator, state_.d_adam, "da.");
  state_.step = st.at("step").get<long>();
  state_.g_adam.step = st.at("g_adam_step").get<long>();
  state_.d_adam.step = st.at("d_adam_step").get<long>();
  std::istringstream rng(st.at("rng").get<std::string>());
  rng >> state_.rng;
  if (!rng) throw model::CheckpointError("bad rng state in " + state_path.string());
}

}  // namespace layoutgen::training
