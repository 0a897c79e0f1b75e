#pragma once

#include <filesystem>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "layoutgen/model/config.hpp"
#include "layoutgen/model/params.hpp"

namespace layoutgen::model {

struct CheckpointError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

using NamedTensors = std::vector<std::pair<std::string, num::Tensor>>;

inline constexpr std::uint32_t kCheckpointVersion = 1;

/// Binary tensor file: "LGPP", u32 version, u32 count, then per tensor a u16
/// name length, the name, u8 rank, u32 dims and f32 data (little-endian).
std::string encode_tensors(const NamedTensors& tensors);
NamedTensors decode_tensors(const std::string& bytes);
void save_tensors(const std::filesystem::path& path, const NamedTensors& tensors);
NamedTensors load_tensors(const std::filesystem::path& path);

std::string config_to_json(const ModelConfig& cfg);
ModelConfig config_from_json(const std::string& text);

/// Generator and discriminator parameters under "g." / "d." prefixes, with
/// the ModelConfig in `<path>.json`.
void save_model(const std::filesystem::path& path, const ModelConfig& cfg, const ModelParams& p);
std::pair<ModelConfig, ModelParams> load_model(const std::filesystem::path& path);

/// Copies values from `src` into `dst`; names and shapes must match exactly.
void assign(ParamSet& dst, const NamedTensors& src, const std::string& prefix);
NamedTensors named(const ParamSet& p, const std::string& prefix);

}  // namespace layoutgen::model
