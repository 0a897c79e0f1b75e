#include "layoutgen/model/checkpoint.hpp"

#include <bit>
#include <cstring>

#include "json.hpp"
#include "layoutgen/data/dataset.hpp"

namespace layoutgen::model {

using num::Tensor;
using nlohmann::json;

static_assert(std::endian::native == std::endian::little, "checkpoint I/O assumes a little-endian host");

namespace {

template <typename T>
void put(std::string& out, T v) {
  char buf[sizeof(T)];
  std::memcpy(buf, &v, sizeof(T));
  out.append(buf, sizeof(T));
}

class Reader {
 public:
  explicit Reader(const std::string& b) : bytes_(b) {}
  template <typename T>
  T get(const char* what) {
    need(sizeof(T), what);
    T v;
    std::memcpy(&v, bytes_.data() + pos_, sizeof(T));
    pos_ += sizeof(T);
    return v;
  }
  std::string str(std::size_t n, const char* what) {
    need(n, what);
    std::string s = bytes_.substr(pos_, n);
    pos_ += n;
    return s;
  }
  void floats(std::span<float> dst, const char* what) {
    need(dst.size() * sizeof(float), what);
    std::memcpy(dst.data(), bytes_.data() + pos_, dst.size() * sizeof(float));
    pos_ += dst.size() * sizeof(float);
  }
  bool done() const { return pos_ == bytes_.size(); }

 private:
  void need(std::size_t n, const char* what) {
    if (bytes_.size() - pos_ < n) throw CheckpointError(std::string("checkpoint truncated reading ") + what);
  }
  const std::string& bytes_;
  std::size_t pos_ = 0;
};

}  // namespace

std::string encode_tensors(const NamedTensors& tensors) {
  std::string out = "LGPP";
  put<std::uint32_t>(out, kCheckpointVersion);
  put<std::uint32_t>(out, static_cast<std::uint32_t>(tensors.size()));
  for (const auto& [name, t] : tensors) {
    if (name.size() > 0xffff) throw CheckpointError("tensor name too long: " + name);
    put<std::uint16_t>(out, static_cast<std::uint16_t>(name.size()));
    out += name;
    put<std::uint8_t>(out, static_cast<std::uint8_t>(t.rank()));
    for (int d : t.shape()) put<std::uint32_t>(out, static_cast<std::uint32_t>(d));
    out.append(reinterpret_cast<const char*>(t.data().data()), t.numel() * sizeof(float));
  }
  return out;
}

NamedTensors decode_tensors(const std::string& bytes) {
  Reader r(bytes);
  if (r.str(4, "magic") != "LGPP") throw CheckpointError("not a checkpoint (bad magic)");
  if (const auto v = r.get<std::uint32_t>("version"); v != kCheckpointVersion) {
    throw CheckpointError("unsupported checkpoint version " + std::to_string(v));
  }
  const auto count = r.get<std::uint32_t>("tensor count");
  NamedTensors out;
  for (std::uint32_t i = 0; i < count; ++i) {
    std::string name = r.str(r.get<std::uint16_t>("name length"), "name");
    const int rank = r.get<std::uint8_t>("rank");
    num::Shape shape;
    for (int k = 0; k < rank; ++k) {
      const auto d = r.get<std::uint32_t>("dims");
      if (d == 0 || d > (1u << 28)) throw CheckpointError("bad dimension in tensor " + name);
      shape.push_back(static_cast<int>(d));
    }
    Tensor t(shape);
    r.floats(t.data(), "tensor data");
    out.emplace_back(std::move(name), std::move(t));
  }
  if (!r.done()) throw CheckpointError("trailing bytes after checkpoint tensors");
  return out;
}

void save_tensors(const std::filesystem::path& path, const NamedTensors& tensors) {
  data::write_file_atomic(path, encode_tensors(tensors));
}

NamedTensors load_tensors(const std::filesystem::path& path) {
  std::string bytes;
  try {
    bytes = data::read_file(path);
  } catch (const std::runtime_error& e) {
    throw CheckpointError(e.what());
  }
  return decode_tensors(bytes);
}

std::string config_to_json(const ModelConfig& cfg) {
  const json j = {{"resolution", cfg.resolution},
                  {"base_channels", cfg.base_channels},
                  {"noise_dim", cfg.noise_dim},
                  {"mpn_rounds_per_scale", cfg.mpn_rounds_per_scale},
                  {"pooling", to_string(cfg.pooling)},
                  {"leaky_alpha", cfg.leaky_alpha}};
  return j.dump(1);
}

ModelConfig config_from_json(const std::string& text) {
  ModelConfig cfg;
  try {
    const json j = json::parse(text);
    cfg.resolution = j.at("resolution").get<int>();
    cfg.base_channels = j.at("base_channels").get<int>();
    cfg.noise_dim = j.at("noise_dim").get<int>();
    cfg.mpn_rounds_per_scale = j.at("mpn_rounds_per_scale").get<int>();
    cfg.pooling = pooling_from_string(j.at("pooling").get<std::string>());
    cfg.leaky_alpha = j.at("leaky_alpha").get<float>();
  } catch (const json::exception& e) {
    throw CheckpointError(std::string("bad model config: ") + e.what());
  }
  cfg.validate();
  return cfg;
}

NamedTensors named(const ParamSet& p, const std::string& prefix) {
  NamedTensors out;
  for (std::size_t i = 0; i < p.size(); ++i) out.emplace_back(prefix + p.names()[i], p.tensors()[i]);
  return out;
}

void assign(ParamSet& dst, const NamedTensors& src, const std::string& prefix) {
  std::size_t matched = 0;
  for (const auto& [name, t] : src) {
    if (!name.starts_with(prefix)) continue;
    const auto local = name.substr(prefix.size());
    if (!dst.contains(local)) throw CheckpointError("unexpected tensor " + name);
    auto target = dst.get(local);
    if (target.shape() != t.shape()) {
      throw CheckpointError("shape mismatch for " + name + ": " + num::to_string(t.shape()) + " vs " +
                            num::to_string(target.shape()));
    }
    std::copy(t.data().begin(), t.data().end(), target.data().begin());
    ++matched;
  }
  if (matched != dst.size()) throw CheckpointError("checkpoint is missing tensors with prefix " + prefix);
}

void save_model(const std::filesystem::path& path, const ModelConfig& cfg, const ModelParams& p) {
  NamedTensors all = named(p.generator, "g.");
  for (auto& e : named(p.discriminator, "d.")) all.push_back(std::move(e));
  save_tensors(path, all);
  auto side = path;
  side += ".json";
  data::write_file_atomic(side, config_to_json(cfg));
}

std::pair<ModelConfig, ModelParams> load_model(const std::filesystem::path& path) {
  auto side = path;
  side += ".json";
  std::string text;
  try {
    text = data::read_file(side);
  } catch (const std::runtime_error& e) {
    throw CheckpointError(e.what());
  }
  const ModelConfig cfg = config_from_json(text);
  ModelParams p = init_params(cfg, 0);
  const auto tensors = load_tensors(path);
  assign(p.generator, tensors, "g.");
  assign(p.discriminator, tensors, "d.");
  return {cfg, std::move(p)};
}

}  // namespace layoutgen::model
