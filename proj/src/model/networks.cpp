#include "layoutgen/model/networks.hpp"

#include <algorithm>
#include <stdexcept>
#include <string>

namespace layoutgen::model {

using num::Tensor;

namespace {

std::shared_ptr<const num::MixMatrix> pool_matrix(const std::vector<std::vector<int>>& sets, Pooling pooling) {
  const int n = static_cast<int>(sets.size());
  num::MixMatrix m{n, n, std::vector<float>(static_cast<std::size_t>(n) * n, 0.0f)};
  for (int i = 0; i < n; ++i) {
    if (sets[i].empty()) continue;
    const float w = pooling == Pooling::sum ? 1.0f : 1.0f / static_cast<float>(sets[i].size());
    for (int j : sets[i]) m.values[i * n + j] = w;
  }
  return std::make_shared<const num::MixMatrix>(std::move(m));
}

Tensor conv_act(const ParamSet& p, const std::string& name, const Tensor& x, int stride, float alpha) {
  return num::leaky_relu(num::conv2d(x, p.get(name + ".weight"), p.get(name + ".bias"), stride, 1), alpha);
}

void require_rows(const Tensor& t, int count, const char* what) {
  if (t.rank() < 1 || t.dim(0) != count) {
    throw num::DimensionError(std::string(what) + ": expected " + std::to_string(count) + " rows, got " +
                              num::to_string(t.shape()));
  }
}

}  // namespace

GraphContext GraphContext::build(const graphs::BubbleDiagram& d, const ModelConfig& cfg) {
  GraphContext ctx;
  ctx.diagram = d;
  ctx.components = graphs::components(d);
  ctx.count = static_cast<int>(ctx.components.size());
  const auto graph = graphs::component_graph(d);
  ctx.neighbor_pool = pool_matrix(graph.neighbors, cfg.pooling);
  ctx.complement_pool = pool_matrix(graph.complement, cfg.pooling);
  ctx.total_pool = std::make_shared<const num::MixMatrix>(
      num::MixMatrix{1, ctx.count, std::vector<float>(ctx.count, 1.0f)});

  const int r = cfg.resolution, t = graphs::kTypeCount;
  ctx.one_hot = Tensor({ctx.count, t});
  ctx.type_planes = Tensor({ctx.count, t, r, r});
  auto planes = ctx.type_planes.data();
  for (int i = 0; i < ctx.count; ++i) {
    const int type = ctx.components[i].type;
    ctx.one_hot.data()[i * t + type] = 1.0f;
    std::fill_n(planes.begin() + (static_cast<std::size_t>(i) * t + type) * r * r, r * r, 1.0f);
  }
  return ctx;
}

ConditionSet ConditionSet::empty(int count, int resolution) {
  return {std::vector<bool>(count, false), graphs::LayoutMasks(count, resolution, 0.0f)};
}

bool ConditionSet::any() const { return std::find(specified.begin(), specified.end(), true) != specified.end(); }

Tensor ConditionSet::to_tensor() const {
  const int n = count(), r = masks.resolution;
  if (masks.count != n) throw std::invalid_argument("condition set: mask count mismatch");
  const std::size_t px = masks.pixels();
  Tensor out({n, 2, r, r});
  auto dst = out.data();
  for (int i = 0; i < n; ++i) {
    if (!specified[i]) continue;
    const auto m = masks.mask(i);
    std::copy(m.begin(), m.end(), dst.begin() + 2 * i * px);
    std::fill_n(dst.begin() + (2 * i + 1) * px, px, 1.0f);
  }
  return out;
}

Tensor sample_noise(std::mt19937_64& rng, int count, int noise_dim) {
  Tensor z({count, noise_dim});
  std::normal_distribution<float> dist(0.0f, 1.0f);
  for (float& v : z.data()) v = dist(rng);
  return z;
}

Tensor encode_condition(const ParamSet& g, const ModelConfig& cfg, const Tensor& cond) {
  const int r = cfg.resolution;
  if (cond.rank() != 4 || cond.dim(1) != 2 || cond.dim(2) != r || cond.dim(3) != r) {
    throw num::DimensionError("encode_condition: expected [N,2," + std::to_string(r) + "," + std::to_string(r) +
                              "], got " + num::to_string(cond.shape()));
  }
  const int last_stride = r == 64 ? 2 : 1;
  Tensor x = conv_act(g, "cond_enc.0", cond, 2, cfg.leaky_alpha);
  x = conv_act(g, "cond_enc.1", x, 2, cfg.leaky_alpha);
  return conv_act(g, "cond_enc.2", x, last_stride, cfg.leaky_alpha);
}

Tensor init_component_feature(const ParamSet& g, const ModelConfig& cfg, const Tensor& one_hot,
                              const Tensor& noise, const Tensor& encoded) {
  const int n = one_hot.dim(0);
  require_rows(noise, n, "init_component_feature noise");
  require_rows(encoded, n, "init_component_feature condition");
  if (noise.rank() != 2 || noise.dim(1) != cfg.noise_dim) {
    throw num::DimensionError("init_component_feature: noise must be [N," + std::to_string(cfg.noise_dim) + "], got " +
                              num::to_string(noise.shape()));
  }
  // [noise | one-hot] as channels of a 1x1 image, so concat_channels applies.
  const Tensor z = num::reshape(noise, {n, cfg.noise_dim, 1, 1});
  const Tensor t = num::reshape(one_hot, {n, graphs::kTypeCount, 1, 1});
  const Tensor zt = num::reshape(num::concat_channels(z, t), {n, cfg.noise_dim + graphs::kTypeCount});
  const Tensor proj = num::linear_rows(zt, g.get("noise_proj.weight"), g.get("noise_proj.bias"));
  const Tensor volume = num::reshape(proj, {n, cfg.base_channels, kBaseSize, kBaseSize});
  return num::concat_channels(volume, encoded);
}

Tensor conv_mpn_round(const ParamSet& p, const std::string& prefix, const ModelConfig& cfg, const GraphContext& ctx,
                      const Tensor& features) {
  require_rows(features, ctx.count, "conv_mpn_round");
  const Tensor near = num::mix_components(features, ctx.neighbor_pool);
  const Tensor far = num::mix_components(features, ctx.complement_pool);
  Tensor x = num::concat_channels(num::concat_channels(features, near), far);
  x = conv_act(p, prefix + ".conv0", x, 1, cfg.leaky_alpha);
  return conv_act(p, prefix + ".conv1", x, 1, cfg.leaky_alpha);
}

Tensor generator_forward(const ParamSet& g, const ModelConfig& cfg, const GraphContext& ctx, const Tensor& noise,
                         const Tensor& cond) {
  require_rows(cond, ctx.count, "generator_forward condition");
  Tensor x = init_component_feature(g, cfg, ctx.one_hot, noise, encode_condition(g, cfg, cond));
  for (int s = 0; s < cfg.upsamples(); ++s) {
    for (int r = 0; r < cfg.mpn_rounds_per_scale; ++r) {
      x = conv_mpn_round(g, "mpn." + std::to_string(s) + "." + std::to_string(r), cfg, ctx, x);
    }
    x = conv_act(g, "up." + std::to_string(s), num::upsample_nearest(x, 2), 1, cfg.leaky_alpha);
  }
  return num::tanh(num::conv2d(x, g.get("head.weight"), g.get("head.bias"), 1, 1));
}

Tensor discriminator_forward(const ParamSet& d, const ModelConfig& cfg, const GraphContext& ctx, const Tensor& masks) {
  const int r = cfg.resolution;
  if (masks.rank() != 4 || masks.dim(0) != ctx.count || masks.dim(1) != 1 || masks.dim(2) != r || masks.dim(3) != r) {
    throw num::DimensionError("discriminator_forward: expected [" + std::to_string(ctx.count) + ",1," +
                              std::to_string(r) + "," + std::to_string(r) + "], got " + num::to_string(masks.shape()));
  }
  Tensor x = conv_act(d, "in", num::concat_channels(masks, ctx.type_planes), 1, cfg.leaky_alpha);
  for (int l = 0; l < cfg.upsamples(); ++l) {
    x = conv_act(d, "down." + std::to_string(l), x, 2, cfg.leaky_alpha);
    for (int k = 0; k < cfg.mpn_rounds_per_scale; ++k) {
      x = conv_mpn_round(d, "mpn." + std::to_string(l) + "." + std::to_string(k), cfg, ctx, x);
    }
  }
  const Tensor pooled = num::reshape(num::mix_components(x, ctx.total_pool), {cfg.feature_channels() * kBaseSize * kBaseSize});
  return num::linear(pooled, d.get("head.weight"), d.get("head.bias"));
}

Tensor masks_to_tensor(const graphs::LayoutMasks& m) {
  return Tensor({m.count, 1, m.resolution, m.resolution}, m.values);
}

graphs::LayoutMasks tensor_to_masks(const Tensor& t) {
  if (t.rank() != 4 || t.dim(1) != 1 || t.dim(2) != t.dim(3)) {
    throw num::DimensionError("tensor_to_masks: expected [N,1,R,R], got " + num::to_string(t.shape()));
  }
  graphs::LayoutMasks m(t.dim(0), t.dim(2));
  std::copy(t.data().begin(), t.data().end(), m.values.begin());
  return m;
}

}  // namespace layoutgen::model
