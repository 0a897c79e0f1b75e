#include "layoutgen/metaopt/tpe.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <stdexcept>
#include <string>

#include "json.hpp"
#include "layoutgen/numerics/seed.hpp"

namespace layoutgen::metaopt {

SearchSpace SearchSpace::uniform(int count, int lo, int hi) {
  return {std::vector<std::pair<int, int>>(count, {lo, hi})};
}

void SearchSpace::validate() const {
  if (ranges.empty()) throw std::invalid_argument("search space is empty");
  for (const auto& [lo, hi] : ranges) {
    if (lo > hi) throw std::invalid_argument("search range [" + std::to_string(lo) + ", " + std::to_string(hi) + "] is empty");
  }
}

bool SearchSpace::contains(const std::vector<int>& x) const {
  if (x.size() != ranges.size()) return false;
  for (std::size_t j = 0; j < x.size(); ++j)
    if (x[j] < ranges[j].first || x[j] > ranges[j].second) return false;
  return true;
}

const Trial* TrialHistory::best() const {
  const Trial* b = nullptr;
  for (const auto& t : trials)
    if (!b || t.score < b->score) b = &t;
  return b;
}

std::vector<double> TrialHistory::best_so_far() const {
  std::vector<double> out;
  double b = std::numeric_limits<double>::infinity();
  for (const auto& t : trials) out.push_back(b = std::min(b, t.score));
  return out;
}

std::vector<int> uniform_sample(const SearchSpace& space, std::mt19937_64& rng) {
  std::vector<int> x;
  for (const auto& [lo, hi] : space.ranges) x.push_back(std::uniform_int_distribution<int>(lo, hi)(rng));
  return x;
}

std::vector<int> tpe_suggest(const TrialHistory& h, const SearchSpace& space, std::mt19937_64& rng,
                             const TpeConfig& cfg) {
  space.validate();
  if (!(cfg.gamma > 0.0 && cfg.gamma <= 1.0) || cfg.n_candidates < 1) {
    throw std::invalid_argument("TPE needs gamma in (0, 1] and at least one candidate");
  }
  std::vector<const Trial*> finite;
  for (const auto& t : h.trials) {
    if (!space.contains(t.params)) throw std::invalid_argument("history trial outside the search space");
    if (std::isfinite(t.score)) finite.push_back(&t);
  }
  if (static_cast<int>(h.trials.size()) < cfg.n_startup || finite.empty()) return uniform_sample(space, rng);

  std::stable_sort(finite.begin(), finite.end(), [](const Trial* a, const Trial* b) { return a->score < b->score; });
  const std::size_t n_good = std::max<std::size_t>(1, static_cast<std::size_t>(std::ceil(cfg.gamma * std::sqrt(static_cast<double>(finite.size())))));
  std::vector<const Trial*> good(finite.begin(), finite.begin() + n_good);
  std::vector<const Trial*> bad(finite.begin() + n_good, finite.end());
  for (const auto& t : h.trials)
    if (!std::isfinite(t.score)) bad.push_back(&t);

  const std::size_t dims = space.ranges.size();
  std::vector<std::vector<double>> l(dims), g(dims);
  for (std::size_t j = 0; j < dims; ++j) {
    const auto [lo, hi] = space.ranges[j];
    const int k = hi - lo + 1;
    l[j].assign(k, 1.0);
    g[j].assign(k, 1.0);
    for (const auto* t : good) l[j][t->params[j] - lo] += 1.0;
    for (const auto* t : bad) g[j][t->params[j] - lo] += 1.0;
    for (auto& v : l[j]) v /= static_cast<double>(good.size() + k);
    for (auto& v : g[j]) v /= static_cast<double>(bad.size() + k);
  }

  std::vector<int> best;
  double best_score = -std::numeric_limits<double>::infinity();
  for (int c = 0; c < cfg.n_candidates; ++c) {
    std::vector<int> x(dims);
    double score = 0.0;
    for (std::size_t j = 0; j < dims; ++j) {
      const int idx = static_cast<int>(std::discrete_distribution<int>(l[j].begin(), l[j].end())(rng));
      x[j] = space.ranges[j].first + idx;
      score += std::log(l[j][idx]) - std::log(g[j][idx]);
    }
    if (best.empty() || score > best_score) {
      best = std::move(x);
      best_score = score;
    }
  }
  return best;
}

void optimize(const Objective& objective, const SearchSpace& space, int rounds, std::uint64_t seed,
              TrialHistory& history, const TpeConfig& cfg, const std::function<void(const Trial&)>& on_trial) {
  space.validate();
  for (int r = static_cast<int>(history.trials.size()); r < rounds; ++r) {
    std::mt19937_64 rng(num::derive_seed(seed, {static_cast<std::uint64_t>(r)}));
    Trial t;
    t.round = r;
    t.params = tpe_suggest(history, space, rng, cfg);
    t.score = objective(t.params, r);
    if (!std::isfinite(t.score)) t.score = std::numeric_limits<double>::infinity();
    history.trials.push_back(t);
    if (on_trial) on_trial(t);
  }
}

void append_trial(const std::filesystem::path& path, const Trial& t) {
  nlohmann::json line = {{"round", t.round}, {"params", t.params}};
  line["score"] = std::isfinite(t.score) ? nlohmann::json(t.score) : nlohmann::json(nullptr);
  std::ofstream out(path, std::ios::app);
  out << line.dump() << '\n';
  if (!out.flush()) throw std::runtime_error("cannot append to " + path.string());
}

TrialHistory load_history(const std::filesystem::path& path) {
  TrialHistory h;
  std::ifstream in(path);
  if (!in) return h;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    try {
      const auto j = nlohmann::json::parse(line);
      Trial t;
      t.round = j.at("round").get<int>();
      t.params = j.at("params").get<std::vector<int>>();
      t.score = j.at("score").is_null() ? std::numeric_limits<double>::infinity() : j.at("score").get<double>();
      if (t.round != static_cast<int>(h.trials.size())) throw std::runtime_error("rounds out of order");
      h.trials.push_back(std::move(t));
    } catch (const std::exception& e) {
      // A torn final line from an interrupted run is dropped; anything else is an error.
      if (in.peek() == EOF) break;
      throw std::runtime_error(path.string() + ":" + std::to_string(lineno) + ": " + e.what());
    }
  }
  return h;
}

}  // namespace layoutgen::metaopt
