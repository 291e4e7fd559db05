#pragma once

// Weight-file serialization. Format: magic "SSNW", u16 version (1), u32
// tensor count; per tensor: u16 name length, UTF-8 name, u8 rank, u32
// dims[], raw little-endian f32 payload. Round trips are bit-exact; writes
// go through a temp file and rename on success.

#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include "skyseg/network.hpp"

namespace skyseg {

struct NamedTensorF {
  std::string name;
  Shape dims;
  std::vector<float> data;
};

void save_weights(const std::filesystem::path& path,
                  const std::vector<NamedTensorF>& tensors);
std::vector<NamedTensorF> load_weights(const std::filesystem::path& path);

template <class T>
std::vector<NamedTensorF> snapshot(const ParamRegistry<T>& reg) {
  std::vector<NamedTensorF> out;
  for (const auto& [name, t] : reg.params()) {
    NamedTensorF nt{name, t.dims(), {}};
    nt.data.assign(t.data().begin(), t.data().end());
    out.push_back(std::move(nt));
  }
  return out;
}

// Loads values into an already-built registry; every stored tensor must
// match a parameter by name and shape, and every parameter must be stored.
template <class T>
void restore(ParamRegistry<T>& reg, const std::vector<NamedTensorF>& tensors) {
  auto& ps = reg.params();
  if (tensors.size() != ps.size())
    throw FormatError("weights: file has " + std::to_string(tensors.size()) +
                      " tensors, network has " + std::to_string(ps.size()));
  for (std::size_t i = 0; i < ps.size(); ++i) {
    const auto& nt = tensors[i];
    auto& [name, t] = ps[i];
    if (nt.name != name)
      throw FormatError("weights: tensor " + std::to_string(i) + " is '" + nt.name +
                        "', expected '" + name + "'");
    if (nt.dims != t.dims())
      throw FormatError("weights: shape mismatch for " + name + ": " +
                        shape_str(nt.dims) + " vs " + shape_str(t.dims()));
    auto data = t.mutable_data();
    for (std::size_t j = 0; j < data.size(); ++j) data[j] = T(nt.data[j]);
  }
}

template <class T>
void save_network(const std::filesystem::path& path, const Network<T>& net) {
  save_weights(path, snapshot(net.params));
}

template <class T>
void load_network(const std::filesystem::path& path, Network<T>& net) {
  restore(net.params, load_weights(path));
}

}  // namespace skyseg
