#pragma once

#include <memory>
#include <random>
#include <vector>

#include "layoutgen/graphs/diagram.hpp"
#include "layoutgen/model/config.hpp"
#include "layoutgen/model/params.hpp"
#include "layoutgen/numerics/ops.hpp"

namespace layoutgen::model {

/// Per-diagram constants shared by the generator and discriminator.
struct GraphContext {
  graphs::BubbleDiagram diagram;
  std::vector<graphs::Component> components;
  int count = 0;
  std::shared_ptr<const num::MixMatrix> neighbor_pool;
  std::shared_ptr<const num::MixMatrix> complement_pool;
  std::shared_ptr<const num::MixMatrix> total_pool;  // 1 x count, all ones
  num::Tensor one_hot;                                // [count, 12]
  num::Tensor type_planes;                            // [count, 12, R, R]

  static GraphContext build(const graphs::BubbleDiagram& d, const ModelConfig& cfg);
};

/// Optional per-component input masks. Unspecified entries are ignored.
struct ConditionSet {
  std::vector<bool> specified;
  graphs::LayoutMasks masks;

  /// All components unspecified.
  static ConditionSet empty(int count, int resolution);
  int count() const { return static_cast<int>(specified.size()); }
  bool any() const;

  /// [count, 2, R, R]: channel 0 is the mask where specified (else 0),
  /// channel 1 the indicator (all 1 or all 0).
  num::Tensor to_tensor() const;
};

/// Standard-normal noise rows [count, noise_dim].
num::Tensor sample_noise(std::mt19937_64& rng, int count, int noise_dim);

/// [count, 2, R, R] -> [count, base_channels, 8, 8].
num::Tensor encode_condition(const ParamSet& g, const ModelConfig& cfg, const num::Tensor& cond);

/// Noise and type projected to [count, base, 8, 8] and stacked with the
/// encoded condition -> [count, 2*base, 8, 8].
num::Tensor init_component_feature(const ParamSet& g, const ModelConfig& cfg, const num::Tensor& one_hot,
                                   const num::Tensor& noise, const num::Tensor& encoded);

/// One synchronous message-passing round: CNN over [self; pooled neighbours;
/// pooled non-neighbours]. `prefix` names the conv0/conv1 parameters.
num::Tensor conv_mpn_round(const ParamSet& p, const std::string& prefix, const ModelConfig& cfg,
                           const GraphContext& ctx, const num::Tensor& features);

/// Masks [count, 1, R, R] in (-1, 1).
num::Tensor generator_forward(const ParamSet& g, const ModelConfig& cfg, const GraphContext& ctx,
                              const num::Tensor& noise, const num::Tensor& cond);

/// Critic score of masks [count, 1, R, R] -> [1].
num::Tensor discriminator_forward(const ParamSet& d, const ModelConfig& cfg, const GraphContext& ctx,
                                  const num::Tensor& masks);

num::Tensor masks_to_tensor(const graphs::LayoutMasks& m);
graphs::LayoutMasks tensor_to_masks(const num::Tensor& t);

}  // namespace layoutgen::model
