#include "layoutgen/metrics/evaluate.hpp"

#include <cmath>
#include <numeric>
#include <random>
#include <stdexcept>


#include "json.hpp"
#include "layoutgen/graphs/compatibility.hpp"
#include "layoutgen/numerics/seed.hpp"

namespace layoutgen::metrics {

namespace {

Eigen::MatrixXd features(const std::vector<Layout>& layouts, const EmbeddingNet& net) {
  std::vector<data::Image> images;
  images.reserve(layouts.size());
  for (const auto& l : layouts) images.push_back(data::rasterize(l.masks, l.diagram));
  return net.embed(images);
}

nlohmann::json summary_json(const MetricSummary& m) {
  return {{"mean", m.mean}, {"std", m.std}, {"per_round", m.per_round}};
}

}  // namespace

double diversity_score(const std::vector<Layout>& generated, const std::vector<Layout>& reference,
                       const EmbeddingNet& net) {
  if (generated.size() < kMinDiversitySamples || reference.size() < kMinDiversitySamples) {
    throw std::invalid_argument("diversity needs at least 65 layouts per side, got " + std::to_string(generated.size()) +
                                " and " + std::to_string(reference.size()));
  }
  return frechet_distance(fit_gaussian(features(generated, net)), fit_gaussian(features(reference, net)));
}

double compatibility_score(const std::vector<Layout>& generated, const graphs::ExtractionConfig& ex) {
  if (generated.empty()) throw std::invalid_argument("compatibility_score needs at least one layout");
  long total = 0;
  for (const auto& l : generated) {
    total += graphs::compatibility_distance(l.diagram, graphs::extract_diagram(l.masks, l.diagram, ex));
  }
  return static_cast<double>(total) / static_cast<double>(generated.size());
}

MetricSummary summarize(std::vector<double> values) {
  MetricSummary m;
  m.per_round = std::move(values);
  if (m.per_round.empty()) return m;
  const double n = static_cast<double>(m.per_round.size());
  m.mean = std::accumulate(m.per_round.begin(), m.per_round.end(), 0.0) / n;
  double var = 0.0;
  for (double v : m.per_round) var += (v - m.mean) * (v - m.mean);
  m.std = std::sqrt(var / n);
  return m;
}

std::string EvalReport::to_json() const {
  const nlohmann::json j = {{"scheme", scheme},
                            {"n_samples", n_samples},
                            {"rounds", rounds},
                            {"seed", seed},
                            {"iterations", iterations},
                            {"samples_per_round", samples_per_round},
                            {"diversity", summary_json(diversity)},
                            {"compatibility", summary_json(compatibility)},
                            {"single_shot_diversity", summary_json(single_shot_diversity)},
                            {"single_shot_compatibility", summary_json(single_shot_compatibility)}};
  return j.dump(1);
}

EvalReport evaluate(const model::ParamSet& g, const model::ModelConfig& cfg,
                    const std::vector<const data::Sample*>& test, const refine::RefinementScheme& scheme,
                    const EvalOptions& opts) {
  if (test.empty()) throw std::invalid_argument("evaluate: empty test set");
  const int n = opts.resample ? opts.n_samples : static_cast<int>(test.size());
  if (n < 1 || opts.rounds < 1 || opts.workers < 1) {
    throw std::invalid_argument("evaluate: samples, rounds and workers must be positive");
  }
  if (opts.diversity && n < kMinDiversitySamples) {
    throw std::invalid_argument("evaluate: diversity needs at least 65 samples per round");
  }
  scheme.validate();
  const auto ex = graphs::ExtractionConfig::for_resolution(cfg.resolution);
  const EmbeddingNet net(cfg.resolution);

  std::vector<model::GraphContext> contexts;
  contexts.reserve(test.size());
  for (const auto* s : test) contexts.push_back(model::GraphContext::build(s->diagram, cfg));

  EvalReport report;
  report.scheme = refine::format_scheme(scheme);
  report.n_samples = n;
  report.rounds = opts.rounds;
  report.seed = opts.seed;
  report.iterations = scheme.iterations;
  std::vector<double> div, comp, div1, comp1;
  for (int round = 0; round < opts.rounds; ++round) {
    std::mt19937_64 draw(num::derive_seed(opts.seed, {0, static_cast<std::uint64_t>(round)}));
    std::vector<int> picks(n);
    for (int i = 0; i < n; ++i) {
      picks[i] = opts.resample ? std::uniform_int_distribution<int>(0, static_cast<int>(test.size()) - 1)(draw) : i;
    }

    std::vector<Layout> final_layouts(n), first_layouts(n), reference(n);
    std::vector<int> final_cost(n), first_cost(n);
#pragma omp parallel for schedule(dynamic) num_threads(opts.workers)
    for (int i = 0; i < n; ++i) {
      const auto& ctx = contexts[picks[i]];
      std::mt19937_64 rng(num::derive_seed(opts.seed, {1, static_cast<std::uint64_t>(round), static_cast<std::uint64_t>(i)}));
      const auto traj = refine::refine(g, cfg, ctx, scheme, rng, ex);
      final_layouts[i] = {ctx.diagram, traj.final_masks()};
      first_layouts[i] = {ctx.diagram, traj.iterations.front().masks};
      final_cost[i] = traj.iterations.back().compatibility;
      first_cost[i] = traj.iterations.front().compatibility;
      reference[i] = {test[picks[i]]->diagram, test[picks[i]]->gt_masks};
    }
    comp.push_back(std::accumulate(final_cost.begin(), final_cost.end(), 0.0) / n);
    comp1.push_back(std::accumulate(first_cost.begin(), first_cost.end(), 0.0) / n);
    if (opts.diversity) {
      div.push_back(diversity_score(final_layouts, reference, net));
      div1.push_back(diversity_score(first_layouts, reference, net));
    }
    report.samples_per_round.push_back(n);
  }
  report.diversity = summarize(div);
  report.compatibility = summarize(comp);
  report.single_shot_diversity = summarize(div1);
  report.single_shot_compatibility = summarize(comp1);
  return report;
}

}  // namespace layoutgen::metrics
