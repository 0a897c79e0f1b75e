#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <limits>
#include <random>
#include <utility>
#include <vector>

namespace layoutgen::metaopt {

/// Inclusive integer range per parameter.
struct SearchSpace {
  std::vector<std::pair<int, int>> ranges;

  static SearchSpace uniform(int count, int lo, int hi);
  /// Throws std::invalid_argument if empty or any range has lo > hi.
  void validate() const;
  bool contains(const std::vector<int>& x) const;
};

struct Trial {
  int round = 0;
  std::vector<int> params;
  double score = std::numeric_limits<double>::infinity();  // lower is better
};

struct TrialHistory {
  std::vector<Trial> trials;

  /// Lowest score, earliest round on ties; nullptr when empty.
  const Trial* best() const;
  /// Best score after each trial.
  std::vector<double> best_so_far() const;
};

struct TpeConfig {
  double gamma = 0.25;
  int n_candidates = 24;
  int n_startup = 20;
};

/// Uniform while fewer than n_startup trials exist; afterwards splits the
/// history into the best ceil(gamma * sqrt(n)) finite trials (n = finite
/// count) and the rest, builds
/// add-one smoothed categorical densities l (good) and g (bad) per parameter,
/// draws n_candidates vectors from l and returns the one maximizing
/// sum log(l/g) (first on ties).
std::vector<int> tpe_suggest(const TrialHistory& h, const SearchSpace& space, std::mt19937_64& rng,
                             const TpeConfig& cfg = {});

std::vector<int> uniform_sample(const SearchSpace& space, std::mt19937_64& rng);

/// Score for a parameter vector; the round index is passed for seeding.
using Objective = std::function<double(const std::vector<int>&, int round)>;

/// Minimizes `objective` for `rounds` total trials, continuing from whatever
/// `history` already holds. The suggestion for round r uses an rng seeded
/// from (seed, r), so a resumed run matches an uninterrupted one. Non-finite
/// scores are recorded as +inf.
void optimize(const Objective& objective, const SearchSpace& space, int rounds, std::uint64_t seed,
              TrialHistory& history, const TpeConfig& cfg = {},
              const std::function<void(const Trial&)>& on_trial = {});

/// JSON lines `{"round", "params", "score"}`; +inf is written as null.
void append_trial(const std::filesystem::path& path, const Trial& t);
TrialHistory load_history(const std::filesystem::path& path);

}  // namespace layoutgen::metaopt
