#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "layoutgen/data/dataset.hpp"
#include "layoutgen/graphs/extract.hpp"
#include "layoutgen/metrics/embedding.hpp"
#include "layoutgen/metrics/frechet.hpp"
#include "layoutgen/model/networks.hpp"
#include "layoutgen/refine/refine.hpp"

namespace layoutgen::metrics {

/// A generated layout together with the diagram it was generated for.
struct Layout {
  graphs::BubbleDiagram diagram;
  graphs::LayoutMasks masks;
};

inline constexpr int kMinDiversitySamples = 65;

/// Fréchet distance between embedding Gaussians of the rasterized sets.
/// Both sides need at least 65 layouts.
double diversity_score(const std::vector<Layout>& generated, const std::vector<Layout>& reference,
                       const EmbeddingNet& net);

/// Mean compatibility_distance between each input diagram and the one
/// extracted from its masks.
double compatibility_score(const std::vector<Layout>& generated, const graphs::ExtractionConfig& ex);

struct MetricSummary {
  double mean = 0.0;
  double std = 0.0;  // population std over rounds
  std::vector<double> per_round;
};

MetricSummary summarize(std::vector<double> values);

struct EvalReport {
  std::string scheme;
  int n_samples = 0;
  int rounds = 0;
  std::uint64_t seed = 0;
  int iterations = 0;
  MetricSummary diversity;
  MetricSummary compatibility;
  /// The same metrics on iteration 1 of each trajectory (single-shot output).
  MetricSummary single_shot_diversity;
  MetricSummary single_shot_compatibility;
  std::vector<int> samples_per_round;

  std::string to_json() const;
};

struct EvalOptions {
  int n_samples = 1000;
  int rounds = 5;
  std::uint64_t seed = 0;
  int workers = 1;
  /// Skip the Fréchet computation (for compatibility-only objectives).
  bool diversity = true;
  /// Draw samples with replacement each round; when false every test sample
  /// is used once per round, in order, and n_samples is ignored.
  bool resample = true;
};

/// Per round, draws n_samples test samples with replacement, refines each
/// under `scheme` and scores the final layouts against the drawn samples'
/// ground truth. Per-sample seeds derive from (seed, round, index), so the
/// report does not depend on `workers`.
EvalReport evaluate(const model::ParamSet& g, const model::ModelConfig& cfg,
                    const std::vector<const data::Sample*>& test, const refine::RefinementScheme& scheme,
                    const EvalOptions& opts);

}  // namespace layoutgen::metrics
