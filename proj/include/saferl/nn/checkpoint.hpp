#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "json.hpp"
#include "saferl/nn/gaussian_policy.hpp"
#include "saferl/nn/mlp.hpp"

namespace saferl::nn {

struct Tensor {
  std::vector<int> shape;
  std::vector<double> data;
};

// Named tensors plus free-form metadata. Serialized as versioned JSON with
// an FNV-1a checksum over the raw bit patterns; loading verifies shapes and
// the checksum and round-trips every double bit-exactly.
struct Checkpoint {
  std::map<std::string, Tensor> tensors;
  nlohmann::json metadata;

  void put_mlp(const std::string& prefix, const Mlp& net);
  Mlp take_mlp(const std::string& prefix) const;
  void put_policy(const std::string& prefix, const GaussianPolicy& pi);
  GaussianPolicy take_policy(const std::string& prefix) const;
  void put_vector(const std::string& name, const std::vector<double>& v);
  std::vector<double> take_vector(const std::string& name) const;

  nlohmann::json to_json() const;
  static Checkpoint from_json(const nlohmann::json& j);

  void save(const std::string& path) const;
  static Checkpoint load(const std::string& path);
};

std::uint64_t tensor_checksum(const std::map<std::string, Tensor>& tensors);

}  // namespace saferl::nn
