// Copyright (c) 2026 The oats authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cmath>
#include <filesystem>
#include <fstream>
#include <stdexcept>
#include <string>
#include <unordered_set>
#include <vector>

#include <nlohmann/json.hpp>

#include "oats/matrix.hpp"
#include "oats/tensor.hpp"

namespace oats {

enum class Activation { Identity, Relu, Gelu };

struct LayerSpec {
  std::string name;
  int d_out = 0;
  int d_in = 0;
  std::string weight;  // tensor name in the weights archive
  std::string bias;    // optional, empty means none
};

/// A block is a chain of linear layers. The block's activation function is
/// applied after every layer; a residual block adds its input to its output
/// (input and output dims must match).
struct BlockSpec {
  std::vector<LayerSpec> layers;
  Activation activation = Activation::Identity;
  bool residual = false;
};

struct ModelGraph {
  std::vector<BlockSpec> blocks;

  std::vector<const LayerSpec*> all_layers() const {
    std::vector<const LayerSpec*> out;
    for (const auto& b : blocks)
      for (const auto& l : b.layers) out.push_back(&l);
    return out;
  }

  int input_dim() const {
    for (const auto& b : blocks)
      if (!b.layers.empty()) return b.layers.front().d_in;
    return 0;
  }

  void validate(const TensorArchive& weights) const {
    std::unordered_set<std::string> seen;
    int chain = -1;
    for (const auto& block : blocks) {
      const int block_in = chain;
      for (const auto& l : block.layers) {
        if (l.name.empty()) throw std::invalid_argument("graph: layer with empty name");
        if (!seen.insert(l.name).second)
          throw std::invalid_argument("graph: duplicate layer name \"" + l.name + "\"");
        if (l.d_out <= 0 || l.d_in <= 0)
          throw std::invalid_argument("graph: layer \"" + l.name + "\" has non-positive dims");
        if (chain >= 0 && l.d_in != chain)
          throw std::invalid_argument("graph: layer \"" + l.name + "\" expects d_in " +
                                      std::to_string(l.d_in) + " but previous output is " +
                                      std::to_string(chain));
        const NamedTensor& w = weights.at(l.weight);
        if (w.shape.size() != 2 || w.shape[0] != static_cast<std::size_t>(l.d_out) ||
            w.shape[1] != static_cast<std::size_t>(l.d_in))
          throw std::invalid_argument("graph: weight tensor \"" + l.weight +
                                      "\" shape does not match layer \"" + l.name + "\"");
        if (!l.bias.empty()) {
          const NamedTensor& b = weights.at(l.bias);
          if (b.shape.size() != 1 || b.shape[0] != static_cast<std::size_t>(l.d_out))
            throw std::invalid_argument("graph: bias tensor \"" + l.bias +
                                        "\" shape does not match layer \"" + l.name + "\"");
        }
        chain = l.d_out;
      }
      if (block.residual && block_in >= 0 && chain != block_in)
        throw std::invalid_argument("graph: residual block input/output dims differ");
    }
  }
};

inline float apply_activation(Activation a, float x) {
  switch (a) {
    case Activation::Identity: return x;
    case Activation::Relu: return x > 0.0f ? x : 0.0f;
    case Activation::Gelu:
      return static_cast<float>(0.5 * static_cast<double>(x) *
                                (1.0 + std::erf(static_cast<double>(x) * 0.7071067811865475)));
  }
  return x;
}

inline void apply_activation_inplace(Activation a, DenseMatrix& x) {
  if (a == Activation::Identity) return;
  for (float& v : x.data) v = apply_activation(a, v);
}

namespace detail {

inline Activation activation_from(const std::string& s) {
  if (s == "identity") return Activation::Identity;
  if (s == "relu") return Activation::Relu;
  if (s == "gelu") return Activation::Gelu;
  throw std::invalid_argument("graph: unknown activation \"" + s + "\"");
}

inline std::string activation_name(Activation a) {
  switch (a) {
    case Activation::Identity: return "identity";
    case Activation::Relu: return "relu";
    case Activation::Gelu: return "gelu";
  }
  return "?";
}

}  // namespace detail

inline nlohmann::json to_json(const ModelGraph& g) {
  nlohmann::json blocks = nlohmann::json::array();
  for (const auto& b : g.blocks) {
    nlohmann::json jb;
    jb["activation"] = detail::activation_name(b.activation);
    jb["residual"] = b.residual;
    nlohmann::json layers = nlohmann::json::array();
    for (const auto& l : b.layers) {
      nlohmann::json jl;
      jl["name"] = l.name;
      jl["d_out"] = l.d_out;
      jl["d_in"] = l.d_in;
      jl["weight"] = l.weight;
      if (!l.bias.empty()) jl["bias"] = l.bias;
      layers.push_back(std::move(jl));
    }
    jb["layers"] = std::move(layers);
    blocks.push_back(std::move(jb));
  }
  return nlohmann::json{{"blocks", std::move(blocks)}};
}

inline ModelGraph graph_from_json(const nlohmann::json& j) {
  ModelGraph g;
  for (const auto& jb : j.at("blocks")) {
    BlockSpec b;
    if (jb.contains("activation")) b.activation = detail::activation_from(jb["activation"].get<std::string>());
    if (jb.contains("residual")) b.residual = jb["residual"].get<bool>();
    for (const auto& jl : jb.at("layers")) {
      LayerSpec l;
      l.name = jl.at("name").get<std::string>();
      l.d_out = jl.at("d_out").get<int>();
      l.d_in = jl.at("d_in").get<int>();
      l.weight = jl.contains("weight") ? jl["weight"].get<std::string>() : l.name + ".weight";
      if (jl.contains("bias")) l.bias = jl["bias"].get<std::string>();
      b.layers.push_back(std::move(l));
    }
    g.blocks.push_back(std::move(b));
  }
  return g;
}

inline ModelGraph load_graph(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open graph file \"" + path.string() + "\"");
  nlohmann::json j;
  in >> j;
  return graph_from_json(j);
}

}  // namespace oats
