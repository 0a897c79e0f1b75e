#pragma once

#include <array>
#include <filesystem>
#include <random>
#include <string>
#include <variant>
#include <vector>

#include "layoutgen/graphs/extract.hpp"
#include "layoutgen/model/networks.hpp"

namespace layoutgen::refine {

using TypeSchedule = std::array<int, graphs::kTypeCount>;

struct Heuristic {
  double p = 1.0;
};
/// Pass the previous mask once the iteration exceeds V[type].
struct Static {
  TypeSchedule v{};
};
/// Threshold T[type] for compatible components, U[type] otherwise.
struct Dynamic {
  TypeSchedule t{};
  TypeSchedule u{};
};

struct RefinementScheme {
  std::variant<Heuristic, Static, Dynamic> rule = Heuristic{};
  int iterations = 10;

  /// Throws std::invalid_argument for p outside [0,1], schedule entries
  /// outside [1,10], or iterations < 1.
  void validate() const;
};

/// `heur:<p>` | `static:<12 ints>` | `dyna:<12 ints>;<12 ints>`, comma separated.
RefinementScheme parse_scheme(const std::string& spec, int iterations = 10);
std::string format_scheme(const RefinementScheme& s);

/// Whether component of `type` receives its previous mask at iteration k >= 2.
bool scheme_decision(const RefinementScheme& s, int type, int k, bool compatible, std::mt19937_64& rng);

struct IterationRecord {
  model::ConditionSet cond;      // conditions fed to this iteration
  graphs::LayoutMasks masks;     // generator output
  std::vector<bool> compatible;  // per component, measured on `masks`
  int compatibility = 0;         // edit distance of `masks` to the input diagram
};

struct RefinementTrajectory {
  std::vector<IterationRecord> iterations;
  const graphs::LayoutMasks& final_masks() const { return iterations.back().masks; }
};

/// Runs the generator `s.iterations` times. Iteration 1 is unconditioned;
/// afterwards each component whose decision passes is conditioned on its
/// previous output binarized to {-1,+1}. Noise is fresh every iteration and
/// comes from `rng`; decisions use a separate stream seeded from `rng` first.
RefinementTrajectory refine(const model::ParamSet& g, const model::ModelConfig& cfg, const model::GraphContext& ctx,
                            const RefinementScheme& s, std::mt19937_64& rng, const graphs::ExtractionConfig& ex);

/// `iter_<k>.ppm` per iteration plus `trajectory.json` with the decisions,
/// compatibility snapshots and binarized masks.
void write_trajectory(const std::filesystem::path& dir, const RefinementTrajectory& t, const graphs::BubbleDiagram& d,
                      const RefinementScheme& s);

/// Diagram and per-iteration binarized masks from a trajectory.json.
struct StoredTrajectory {
  graphs::BubbleDiagram diagram;
  std::vector<graphs::LayoutMasks> masks;
};
StoredTrajectory read_trajectory(const std::filesystem::path& dir);

}  // namespace layoutgen::refine
