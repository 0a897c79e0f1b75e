#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "layoutgen/model/config.hpp"
#include "layoutgen/numerics/tensor.hpp"

namespace layoutgen::model {

/// Ordered named parameter tensors. Order and names are a pure function of
/// the ModelConfig, which keeps checkpoints compatible.
class ParamSet {
 public:
  void add(std::string name, num::Tensor t);
  const num::Tensor& get(const std::string& name) const;
  bool contains(const std::string& name) const { return index_.contains(name); }

  std::size_t size() const { return tensors_.size(); }
  const std::vector<std::string>& names() const { return names_; }
  std::vector<num::Tensor>& tensors() { return tensors_; }
  std::span<const num::Tensor> tensors() const { return tensors_; }
  std::size_t parameter_count() const;

  /// Independent copy with fresh storage.
  ParamSet clone() const;

 private:
  std::vector<std::string> names_;
  std::vector<num::Tensor> tensors_;
  std::unordered_map<std::string, std::size_t> index_;
};

struct ModelParams {
  ParamSet generator;
  ParamSet discriminator;
};

/// Uniform weights with bound sqrt(1 / fan_in), zero biases.
ModelParams init_params(const ModelConfig& cfg, std::uint64_t seed);

}  // namespace layoutgen::model
