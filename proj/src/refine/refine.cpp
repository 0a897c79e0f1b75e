#include "layoutgen/refine/refine.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <sstream>
#include <stdexcept>

#include "json.hpp"
#include "layoutgen/data/base64.hpp"
#include "layoutgen/data/dataset.hpp"
#include "layoutgen/data/raster.hpp"
#include "layoutgen/graphs/compatibility.hpp"

namespace layoutgen::refine {

namespace {

void check_schedule(const TypeSchedule& s, const char* name) {
  for (int v : s) {
    if (v < 1 || v > 10) throw std::invalid_argument(std::string(name) + " entries must be in [1, 10], got " + std::to_string(v));
  }
}

TypeSchedule parse_schedule(const std::string& text, const std::string& spec) {
  TypeSchedule out{};
  std::size_t n = 0, pos = 0;
  while (true) {
    const auto end = text.find(',', pos);
    const auto item = text.substr(pos, end == std::string::npos ? std::string::npos : end - pos);
    int v = 0;
    const auto [ptr, ec] = std::from_chars(item.data(), item.data() + item.size(), v);
    if (ec != std::errc() || ptr != item.data() + item.size() || item.empty()) {
      throw std::invalid_argument("bad scheme \"" + spec + "\": \"" + item + "\" is not an integer");
    }
    if (n == out.size()) throw std::invalid_argument("bad scheme \"" + spec + "\": more than 12 entries");
    out[n++] = v;
    if (end == std::string::npos) break;
    pos = end + 1;
  }
  if (n != out.size()) throw std::invalid_argument("bad scheme \"" + spec + "\": expected 12 entries, got " + std::to_string(n));
  return out;
}

std::string join(const TypeSchedule& s) {
  std::string out;
  for (std::size_t i = 0; i < s.size(); ++i) out += (i ? "," : "") + std::to_string(s[i]);
  return out;
}

}  // namespace

void RefinementScheme::validate() const {
  if (iterations < 1) throw std::invalid_argument("iterations must be at least 1");
  if (const auto* h = std::get_if<Heuristic>(&rule); h && !(h->p >= 0.0 && h->p <= 1.0)) {
    throw std::invalid_argument("heuristic probability must be in [0, 1]");
  }
  if (const auto* st = std::get_if<Static>(&rule)) check_schedule(st->v, "V");
  if (const auto* dy = std::get_if<Dynamic>(&rule)) {
    check_schedule(dy->t, "T");
    check_schedule(dy->u, "U");
  }
}

RefinementScheme parse_scheme(const std::string& spec, int iterations) {
  RefinementScheme s;
  s.iterations = iterations;
  const auto colon = spec.find(':');
  if (colon == std::string::npos) throw std::invalid_argument("bad scheme \"" + spec + "\": expected <kind>:<values>");
  const auto kind = spec.substr(0, colon), body = spec.substr(colon + 1);
  if (kind == "heur") {
    double p = 0;
    const auto [ptr, ec] = std::from_chars(body.data(), body.data() + body.size(), p);
    if (ec != std::errc() || ptr != body.data() + body.size() || body.empty()) {
      throw std::invalid_argument("bad scheme \"" + spec + "\": probability is not a number");
    }
    s.rule = Heuristic{p};
  } else if (kind == "static") {
    s.rule = Static{parse_schedule(body, spec)};
  } else if (kind == "dyna") {
    const auto semi = body.find(';');
    if (semi == std::string::npos) throw std::invalid_argument("bad scheme \"" + spec + "\": dyna needs T;U");
    s.rule = Dynamic{parse_schedule(body.substr(0, semi), spec), parse_schedule(body.substr(semi + 1), spec)};
  } else {
    throw std::invalid_argument("bad scheme \"" + spec + "\": unknown kind \"" + kind + "\"");
  }
  s.validate();
  return s;
}

std::string format_scheme(const RefinementScheme& s) {
  if (const auto* h = std::get_if<Heuristic>(&s.rule)) {
    std::ostringstream os;
    os.precision(17);
    os << "heur:" << h->p;
    return os.str();
  }
  if (const auto* st = std::get_if<Static>(&s.rule)) return "static:" + join(st->v);
  const auto& dy = std::get<Dynamic>(s.rule);
  return "dyna:" + join(dy.t) + ";" + join(dy.u);
}

bool scheme_decision(const RefinementScheme& s, int type, int k, bool compatible, std::mt19937_64& rng) {
  if (k < 2) return false;
  if (type < 0 || type >= graphs::kTypeCount) throw std::invalid_argument("scheme_decision: bad type " + std::to_string(type));
  if (const auto* h = std::get_if<Heuristic>(&s.rule)) return std::bernoulli_distribution(h->p)(rng);
  if (const auto* st = std::get_if<Static>(&s.rule)) return k > st->v[type];
  const auto& dy = std::get<Dynamic>(s.rule);
  return compatible ? k > dy.t[type] : k > dy.u[type];
}

RefinementTrajectory refine(const model::ParamSet& g, const model::ModelConfig& cfg, const model::GraphContext& ctx,
                            const RefinementScheme& s, std::mt19937_64& rng, const graphs::ExtractionConfig& ex) {
  s.validate();
  std::mt19937_64 decision_rng(rng());
  num::NoGradScope no_grad;
  RefinementTrajectory traj;
  for (int k = 1; k <= s.iterations; ++k) {
    IterationRecord rec;
    rec.cond = model::ConditionSet::empty(ctx.count, cfg.resolution);
    if (k > 1) {
      const auto& prev = traj.iterations.back();
      for (int i = 0; i < ctx.count; ++i) {
        if (!scheme_decision(s, ctx.components[i].type, k, prev.compatible[i], decision_rng)) continue;
        rec.cond.specified[i] = true;
        const auto src = prev.masks.mask(i);
        auto dst = rec.cond.masks.mask(i);
        for (std::size_t p = 0; p < src.size(); ++p) dst[p] = src[p] > 0.0f ? 1.0f : -1.0f;
      }
    }
    const auto noise = model::sample_noise(rng, ctx.count, cfg.noise_dim);
    rec.masks = model::tensor_to_masks(model::generator_forward(g, cfg, ctx, noise, rec.cond.to_tensor()));
    const auto extraction = graphs::extract_layout(rec.masks, ctx.diagram, ex);
    rec.compatible = graphs::compatibility_flags(ctx.diagram, extraction);
    rec.compatibility = graphs::compatibility_distance(ctx.diagram, extraction.diagram);
    traj.iterations.push_back(std::move(rec));
  }
  return traj;
}

void write_trajectory(const std::filesystem::path& dir, const RefinementTrajectory& t, const graphs::BubbleDiagram& d,
                      const RefinementScheme& s) {
  std::filesystem::create_directories(dir);
  nlohmann::json iters = nlohmann::json::array();
  for (std::size_t k = 0; k < t.iterations.size(); ++k) {
    const auto& it = t.iterations[k];
    char name[32];
    std::snprintf(name, sizeof name, "iter_%02zu.ppm", k + 1);
    data::write_ppm(dir / name, data::rasterize(it.masks, d));
    nlohmann::json conditioned = nlohmann::json::array();
    for (int i = 0; i < it.cond.count(); ++i)
      if (it.cond.specified[i]) conditioned.push_back(i);
    std::vector<bool> flags(it.compatible.begin(), it.compatible.end());
    nlohmann::json masks = nlohmann::json::object();
    const auto comps = graphs::components(d);
    std::vector<std::uint8_t> bytes(it.masks.pixels());
    for (std::size_t i = 0; i < comps.size(); ++i) {
      const auto m = it.masks.mask(static_cast<int>(i));
      for (std::size_t p = 0; p < m.size(); ++p) bytes[p] = m[p] > 0.0f ? 255 : 0;
      masks[graphs::component_key(d, comps[i])] = data::base64_encode(bytes);
    }
    iters.push_back({{"iteration", k + 1},
                     {"masks", masks},
                     {"image", name},
                     {"conditioned", conditioned},
                     {"compatible", flags},
                     {"compatibility", it.compatibility}});
  }
  const nlohmann::json doc = {{"scheme", format_scheme(s)},
                              {"diagram", nlohmann::json::parse(data::diagram_to_json(d))},
                              {"iterations", iters}};
  data::write_file_atomic(dir / "trajectory.json", doc.dump(1));
}

StoredTrajectory read_trajectory(const std::filesystem::path& dir) {
  const auto path = dir / "trajectory.json";
  StoredTrajectory out;
  try {
    const auto doc = nlohmann::json::parse(data::read_file(path));
    out.diagram = data::diagram_from_json(doc.at("diagram").dump());
    const auto comps = graphs::components(out.diagram);
    for (const auto& it : doc.at("iterations")) {
      const auto& masks = it.at("masks");
      graphs::LayoutMasks m;
      for (std::size_t i = 0; i < comps.size(); ++i) {
        const auto bytes = data::base64_decode(masks.at(graphs::component_key(out.diagram, comps[i])).get<std::string>());
        if (!bytes) throw std::runtime_error("invalid base64 mask");
        if (i == 0) {
          const int r = static_cast<int>(std::lround(std::sqrt(static_cast<double>(bytes->size()))));
          if (r * r != static_cast<int>(bytes->size())) throw std::runtime_error("mask is not square");
          m = graphs::LayoutMasks(static_cast<int>(comps.size()), r);
        }
        if (bytes->size() != m.pixels()) throw std::runtime_error("mask sizes differ");
        auto dst = m.mask(static_cast<int>(i));
        for (std::size_t p = 0; p < bytes->size(); ++p) dst[p] = (*bytes)[p] ? 1.0f : -1.0f;
      }
      out.masks.push_back(std::move(m));
    }
  } catch (const std::exception& e) {
    throw std::runtime_error("bad trajectory " + path.string() + ": " + e.what());
  }
  return out;
}

}  // namespace layoutgen::refine
