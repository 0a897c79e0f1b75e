#include "layoutgen/model/params.hpp"

#include <cmath>
#include <random>
#include <stdexcept>

#include "layoutgen/graphs/diagram.hpp"
#include "layoutgen/numerics/seed.hpp"

namespace layoutgen::model {

using num::Tensor;

void ParamSet::add(std::string name, Tensor t) {
  if (index_.contains(name)) throw std::invalid_argument("duplicate parameter " + name);
  index_.emplace(name, tensors_.size());
  names_.push_back(std::move(name));
  tensors_.push_back(std::move(t));
}

const Tensor& ParamSet::get(const std::string& name) const {
  auto it = index_.find(name);
  if (it == index_.end()) throw std::out_of_range("no parameter named " + name);
  return tensors_[it->second];
}

std::size_t ParamSet::parameter_count() const {
  std::size_t n = 0;
  for (const auto& t : tensors_) n += t.numel();
  return n;
}

ParamSet ParamSet::clone() const {
  ParamSet out;
  for (std::size_t i = 0; i < size(); ++i) out.add(names_[i], tensors_[i].clone().set_requires_grad(tensors_[i].requires_grad()));
  return out;
}

namespace {

class Builder {
 public:
  Builder(ParamSet& set, std::uint64_t seed) : set_(set), rng_(seed) {}

  void conv(const std::string& name, int out, int in, int k = 3) {
    weight(name + ".weight", {out, in, k, k}, in * k * k);
    bias(name + ".bias", out);
  }
  void dense(const std::string& name, int out, int in) {
    weight(name + ".weight", {out, in}, in);
    bias(name + ".bias", out);
  }

 private:
  void weight(const std::string& name, num::Shape shape, int fan_in) {
    Tensor t(std::move(shape));
    const float bound = static_cast<float>(std::sqrt(1.0 / fan_in));
    std::uniform_real_distribution<float> dist(-bound, bound);
    for (float& v : t.data()) v = dist(rng_);
    set_.add(name, t.set_requires_grad(true));
  }
  void bias(const std::string& name, int n) { set_.add(name, Tensor({n}).set_requires_grad(true)); }

  ParamSet& set_;
  std::mt19937_64 rng_;
};

void mpn_block(Builder& b, const std::string& prefix, int f) {
  b.conv(prefix + ".conv0", f, 3 * f);
  b.conv(prefix + ".conv1", f, f);
}

}  // namespace

ModelParams init_params(const ModelConfig& cfg, std::uint64_t seed) {
  cfg.validate();
  const int cb = cfg.base_channels, f = cfg.feature_channels();
  ModelParams p;

  Builder g(p.generator, num::derive_seed(seed, {0}));
  g.dense("noise_proj", cb * kBaseSize * kBaseSize, cfg.noise_dim + graphs::kTypeCount);
  g.conv("cond_enc.0", cb, 2);
  g.conv("cond_enc.1", cb, cb);
  g.conv("cond_enc.2", cb, cb);
  for (int s = 0; s < cfg.upsamples(); ++s) {
    for (int r = 0; r < cfg.mpn_rounds_per_scale; ++r) {
      mpn_block(g, "mpn." + std::to_string(s) + "." + std::to_string(r), f);
    }
    g.conv("up." + std::to_string(s), f, f);
  }
  g.conv("head", 1, f);

  Builder d(p.discriminator, num::derive_seed(seed, {1}));
  d.conv("in", f, 1 + graphs::kTypeCount);
  for (int l = 0; l < cfg.upsamples(); ++l) {
    d.conv("down." + std::to_string(l), f, f);
    for (int r = 0; r < cfg.mpn_rounds_per_scale; ++r) {
      mpn_block(d, "mpn." + std::to_string(l) + "." + std::to_string(r), f);
    }
  }
  d.dense("head", 1, f * kBaseSize * kBaseSize);
  return p;
}

}  // namespace layoutgen::model
