#include "saferl/nn/checkpoint.hpp"

#include <cstdio>
#include <cstring>
#include <fstream>

#include "saferl/util/errors.hpp"

namespace saferl::nn {

namespace {

constexpr int kFormatVersion = 1;

std::uint64_t fnv1a(std::uint64_t hash, const void* data, std::size_t n) {
  const auto* bytes = static_cast<const unsigned char*>(data);
  for (std::size_t i = 0; i < n; ++i) {
    hash ^= bytes[i];
    hash *= 0x100000001b3ULL;
  }
  return hash;
}

std::size_t shape_elems(const std::vector<int>& shape) {
  std::size_t n = 1;
  for (int d : shape) n *= static_cast<std::size_t>(d);
  return n;
}

}  // namespace

std::uint64_t tensor_checksum(const std::map<std::string, Tensor>& tensors) {
  std::uint64_t hash = 0xcbf29ce484222325ULL;
  for (const auto& [name, t] : tensors) {
    hash = fnv1a(hash, name.data(), name.size());
    for (int d : t.shape) {
      const auto v = static_cast<std::uint64_t>(d);
      hash = fnv1a(hash, &v, sizeof(v));
    }
    for (double x : t.data) {
      std::uint64_t bits;
      std::memcpy(&bits, &x, sizeof(bits));
      hash = fnv1a(hash, &bits, sizeof(bits));
    }
  }
  return hash;
}

void Checkpoint::put_mlp(const std::string& prefix, const Mlp& net) {
  Tensor widths;
  widths.shape = {static_cast<int>(net.widths.size())};
  widths.data.assign(net.widths.begin(), net.widths.end());
  tensors[prefix + ".widths"] = std::move(widths);
  for (std::size_t l = 0; l < net.layer_count(); ++l) {
    Tensor w, b;
    w.shape = {net.widths[l + 1], net.widths[l]};
    w.data = net.weights[l];
    b.shape = {net.widths[l + 1]};
    b.data = net.biases[l];
    const std::string idx = std::to_string(l);
    tensors[prefix + ".w" + idx] = std::move(w);
    tensors[prefix + ".b" + idx] = std::move(b);
  }
}

Mlp Checkpoint::take_mlp(const std::string& prefix) const {
  const auto it = tensors.find(prefix + ".widths");
  if (it == tensors.end()) {
    throw InputError("checkpoint: missing network " + prefix);
  }
  Mlp net;
  for (double w : it->second.data) net.widths.push_back(static_cast<int>(w));
  for (std::size_t l = 0; l + 1 < net.widths.size(); ++l) {
    const std::string idx = std::to_string(l);
    net.weights.push_back(tensors.at(prefix + ".w" + idx).data);
    net.biases.push_back(tensors.at(prefix + ".b" + idx).data);
  }
  net.validate();
  return net;
}

void Checkpoint::put_policy(const std::string& prefix,
                            const GaussianPolicy& pi) {
  put_mlp(prefix + ".mean", pi.mean_net);
  put_vector(prefix + ".log_std", pi.log_std);
}

GaussianPolicy Checkpoint::take_policy(const std::string& prefix) const {
  GaussianPolicy pi;
  pi.mean_net = take_mlp(prefix + ".mean");
  pi.log_std = take_vector(prefix + ".log_std");
  if (pi.log_std.size() != static_cast<std::size_t>(pi.act_dim())) {
    throw InputError("checkpoint: log_std width mismatch for " + prefix);
  }
  return pi;
}

void Checkpoint::put_vector(const std::string& name,
                            const std::vector<double>& v) {
  Tensor t;
  t.shape = {static_cast<int>(v.size())};
  t.data = v;
  tensors[name] = std::move(t);
}

std::vector<double> Checkpoint::take_vector(const std::string& name) const {
  const auto it = tensors.find(name);
  if (it == tensors.end()) {
    throw InputError("checkpoint: missing tensor " + name);
  }
  return it->second.data;
}

nlohmann::json Checkpoint::to_json() const {
  nlohmann::json jt = nlohmann::json::object();
  for (const auto& [name, t] : tensors) {
    jt[name] = {{"shape", t.shape}, {"data", t.data}};
  }
  char checksum[32];
  std::snprintf(checksum, sizeof(checksum), "%016llx",
                static_cast<unsigned long long>(tensor_checksum(tensors)));
  return nlohmann::json{{"format_version", kFormatVersion},
                        {"checksum", checksum},
                        {"metadata", metadata},
                        {"tensors", jt}};
}

Checkpoint Checkpoint::from_json(const nlohmann::json& j) {
  Checkpoint ck;
  try {
    if (j.at("format_version").get<int>() != kFormatVersion) {
      throw InputError("checkpoint: unsupported format version");
    }
    ck.metadata = j.value("metadata", nlohmann::json::object());
    for (const auto& [name, jt] : j.at("tensors").items()) {
      Tensor t;
      t.shape = jt.at("shape").get<std::vector<int>>();
      t.data = jt.at("data").get<std::vector<double>>();
      if (t.data.size() != shape_elems(t.shape)) {
        throw InputError("checkpoint: tensor " + name +
                         " data does not match its shape");
      }
      ck.tensors[name] = std::move(t);
    }
    char expect[32];
    std::snprintf(expect, sizeof(expect), "%016llx",
                  static_cast<unsigned long long>(
                      tensor_checksum(ck.tensors)));
    if (j.at("checksum").get<std::string>() != expect) {
      throw FaultError("checkpoint: checksum mismatch");
    }
  } catch (const nlohmann::json::exception& e) {
    throw InputError(std::string("checkpoint json: ") + e.what());
  }
  return ck;
}

void Checkpoint::save(const std::string& path) const {
  std::ofstream out(path);
  if (!out) throw InputError("checkpoint: cannot write " + path);
  out << to_json().dump();
  out << '\n';
}

Checkpoint Checkpoint::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InputError("checkpoint: cannot read " + path);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw InputError(std::string("checkpoint parse: ") + e.what());
  }
  return from_json(j);
}

}  // namespace saferl::nn
