#include "layoutgen/data/dataset.hpp"

#include <algorithm>
#include <fstream>
#include <random>
#include <set>
#include <sstream>
#include <unordered_map>

#include "json.hpp"
#include "layoutgen/data/base64.hpp"

namespace layoutgen::data {

using graphs::BubbleDiagram;
using nlohmann::json;

namespace fs = std::filesystem;

namespace {

json diagram_json(const BubbleDiagram& d) {
  json nodes = json::array(), edges = json::array();
  for (const auto& n : d.nodes) nodes.push_back({{"id", n.id}, {"type", n.type}});
  for (const auto& e : d.edges) edges.push_back({{"a", e.a}, {"b", e.b}, {"type", e.type}});
  return {{"nodes", nodes}, {"edges", edges}};
}

[[noreturn]] void fail(const std::string& where, const std::string& what) {
  throw DatasetError(where + ": " + what);
}

int get_int(const json& obj, const char* key, const std::string& where) {
  if (!obj.is_object() || !obj.contains(key)) fail(where, std::string("missing field \"") + key + "\"");
  const auto& v = obj.at(key);
  if (!v.is_number_integer()) fail(where, std::string("field \"") + key + "\" is not an integer");
  return v.get<int>();
}

BubbleDiagram parse_diagram(const json& j, const std::string& where) {
  if (!j.is_object()) fail(where, "not a JSON object");
  BubbleDiagram d;
  for (const char* key : {"nodes", "edges"}) {
    if (!j.contains(key) || !j.at(key).is_array()) fail(where, std::string("field \"") + key + "\" missing or not an array");
  }
  int i = 0;
  for (const auto& n : j.at("nodes")) {
    const auto at = where + " nodes[" + std::to_string(i++) + "]";
    d.nodes.push_back({get_int(n, "id", at), get_int(n, "type", at)});
  }
  i = 0;
  for (const auto& e : j.at("edges")) {
    const auto at = where + " edges[" + std::to_string(i++) + "]";
    d.edges.push_back({get_int(e, "a", at), get_int(e, "b", at), get_int(e, "type", at)});
  }
  if (auto v = graphs::validate_diagram(d); !v.empty()) fail(where, v.front().code + " (" + v.front().detail + ")");
  return d;
}

json parse_text(const std::string& text, const std::string& where) {
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    fail(where, std::string("malformed JSON: ") + e.what());
  }
}

}  // namespace

std::string diagram_to_json(const BubbleDiagram& d) { return diagram_json(d).dump(); }

BubbleDiagram diagram_from_json(const std::string& text) {
  return parse_diagram(parse_text(text, "diagram"), "diagram");
}

std::string sample_to_json(const Sample& s) {
  json j = diagram_json(s.diagram);
  json masks = json::object();
  const auto comps = graphs::components(s.diagram);
  std::vector<std::uint8_t> bytes(s.gt_masks.pixels());
  for (std::size_t i = 0; i < comps.size(); ++i) {
    const auto m = s.gt_masks.mask(static_cast<int>(i));
    std::transform(m.begin(), m.end(), bytes.begin(), [](float v) -> std::uint8_t { return v > 0.0f ? 255 : 0; });
    masks[graphs::component_key(s.diagram, comps[i])] = base64_encode(bytes);
  }
  j["masks"] = std::move(masks);
  return j.dump();
}

Sample sample_from_json(const std::string& text, const std::string& id, int resolution) {
  const std::string where = "sample " + id;
  const json j = parse_text(text, where);
  Sample s;
  s.sample_id = id;
  s.diagram = parse_diagram(j, where);
  const int rooms = s.diagram.room_count();
  if (rooms < kMinRooms || rooms > kMaxRooms) {
    fail(where, "field \"nodes\" has " + std::to_string(rooms) + " rooms, expected 5 to 8");
  }
  if (!j.contains("masks") || !j.at("masks").is_object()) fail(where, "field \"masks\" missing or not an object");
  const auto& masks = j.at("masks");
  const auto comps = graphs::components(s.diagram);
  s.gt_masks = graphs::LayoutMasks(static_cast<int>(comps.size()), resolution);
  for (std::size_t i = 0; i < comps.size(); ++i) {
    const auto key = graphs::component_key(s.diagram, comps[i]);
    const auto field = where + " masks." + key;
    if (!masks.contains(key) || !masks.at(key).is_string()) fail(field, "missing or not a string");
    const auto bytes = base64_decode(masks.at(key).get<std::string>());
    if (!bytes) fail(field, "invalid base64");
    if (bytes->size() != s.gt_masks.pixels()) {
      fail(field, std::to_string(bytes->size()) + " bytes, expected " + std::to_string(s.gt_masks.pixels()));
    }
    auto m = s.gt_masks.mask(static_cast<int>(i));
    for (std::size_t p = 0; p < bytes->size(); ++p) {
      if ((*bytes)[p] != 0 && (*bytes)[p] != 255) fail(field, "byte value " + std::to_string((*bytes)[p]) + " is not 0 or 255");
      m[p] = (*bytes)[p] == 255 ? 1.0f : -1.0f;
    }
  }
  if (masks.size() != comps.size()) fail(where + " masks", "unexpected extra keys");
  return s;
}

void write_file_atomic(const fs::path& path, const std::string& bytes) {
  fs::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write " + tmp.string());
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!out.flush()) throw std::runtime_error("write failed for " + tmp.string());
  }
  fs::rename(tmp, path);
}

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void save_dataset(const Dataset& ds, const fs::path& dir) {
  fs::create_directories(dir);
  json ids = json::array();
  std::set<std::string> seen;
  for (const auto& s : ds.samples) {
    if (!seen.insert(s.sample_id).second) throw std::invalid_argument("duplicate sample id " + s.sample_id);
    if (s.gt_masks.resolution != ds.resolution) throw std::invalid_argument("sample " + s.sample_id + " has the wrong resolution");
    write_file_atomic(dir / (s.sample_id + ".json"), sample_to_json(s));
    ids.push_back(s.sample_id);
  }
  const json manifest = {{"resolution", ds.resolution}, {"samples", ids}};
  write_file_atomic(dir / "manifest.json", manifest.dump(1));
}

Dataset load_dataset(const fs::path& dir) {
  std::string text;
  try {
    text = read_file(dir / "manifest.json");
  } catch (const std::runtime_error& e) {
    throw DatasetError(e.what());
  }
  const json manifest = parse_text(text, "manifest");
  Dataset ds;
  ds.resolution = get_int(manifest, "resolution", "manifest");
  if (ds.resolution != 32 && ds.resolution != 64) fail("manifest", "resolution must be 32 or 64");
  if (!manifest.contains("samples") || !manifest.at("samples").is_array()) fail("manifest", "field \"samples\" missing or not an array");
  for (const auto& idj : manifest.at("samples")) {
    if (!idj.is_string()) fail("manifest", "sample id is not a string");
    const auto id = idj.get<std::string>();
    std::string body;
    try {
      body = read_file(dir / (id + ".json"));
    } catch (const std::runtime_error& e) {
      fail("sample " + id, e.what());
    }
    ds.samples.push_back(sample_from_json(body, id, ds.resolution));
  }
  return ds;
}

FoldSpec kfold_split(const Dataset& ds, int held_out) {
  if (held_out < kMinRooms || held_out > kMaxRooms) {
    throw std::invalid_argument("held-out room count must be in [5, 8], got " + std::to_string(held_out));
  }
  FoldSpec f;
  f.held_out_room_count = held_out;
  for (const auto& s : ds.samples) {
    (s.diagram.room_count() == held_out ? f.test_ids : f.train_ids).push_back(s.sample_id);
  }
  if (f.test_ids.empty()) throw std::invalid_argument("no samples with " + std::to_string(held_out) + " rooms");
  if (f.train_ids.empty()) throw std::invalid_argument("no training samples outside the held-out group");
  return f;
}

std::vector<const Sample*> select(const Dataset& ds, const std::vector<std::string>& ids) {
  std::unordered_map<std::string, const Sample*> by_id;
  for (const auto& s : ds.samples) by_id.emplace(s.sample_id, &s);
  std::vector<const Sample*> out;
  for (const auto& id : ids) {
    auto it = by_id.find(id);
    if (it == by_id.end()) throw std::invalid_argument("unknown sample id " + id);
    out.push_back(it->second);
  }
  return out;
}

}  // namespace layoutgen::data
