// Copyright (c) 2026 The oats authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <cstring>
#include <map>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "oats/dtypes.hpp"

namespace oats {

/// A named, shaped dense array. The payload is kept as raw little-endian
/// bytes in the declared dtype; conversion happens only on request.
struct NamedTensor {
  std::string name;
  Dtype dtype = Dtype::F32;
  std::vector<std::size_t> shape;
  std::vector<std::uint8_t> data;

  std::size_t numel() const {
    std::size_t n = 1;
    for (std::size_t d : shape) n *= d;
    return n;
  }

  std::size_t byte_size() const { return numel() * dtype_size(dtype); }

  void validate() const {
    if (name.empty()) throw std::invalid_argument("tensor has empty name");
    if (data.size() != byte_size())
      throw std::invalid_argument("tensor \"" + name + "\": payload is " +
                                  std::to_string(data.size()) + " bytes, shape implies " +
                                  std::to_string(byte_size()));
  }

  /// Widening copy of the payload into f32 scalars.
  std::vector<float> as_f32() const {
    const std::size_t n = numel();
    std::vector<float> out(n);
    switch (dtype) {
      case Dtype::F32:
        std::memcpy(out.data(), data.data(), n * 4);
        break;
      case Dtype::F16:
        for (std::size_t i = 0; i < n; ++i) {
          std::uint16_t h;
          std::memcpy(&h, data.data() + 2 * i, 2);
          out[i] = f16_to_f32(h);
        }
        break;
      case Dtype::BF16:
        for (std::size_t i = 0; i < n; ++i) {
          std::uint16_t b;
          std::memcpy(&b, data.data() + 2 * i, 2);
          out[i] = bf16_to_f32(b);
        }
        break;
    }
    return out;
  }

  /// Builds a tensor from f32 scalars, narrowing (round-to-nearest-even)
  /// when `store` is a 16-bit type.
  static NamedTensor from_f32(std::string name, std::vector<std::size_t> shape,
                              std::span<const float> values, Dtype store = Dtype::F32) {
    NamedTensor t;
    t.name = std::move(name);
    t.dtype = store;
    t.shape = std::move(shape);
    if (t.numel() != values.size())
      throw std::invalid_argument("tensor \"" + t.name + "\": shape/value count mismatch");
    t.data.resize(values.size() * dtype_size(store));
    switch (store) {
      case Dtype::F32:
        std::memcpy(t.data.data(), values.data(), values.size() * 4);
        break;
      case Dtype::F16:
        for (std::size_t i = 0; i < values.size(); ++i) {
          const std::uint16_t h = f32_to_f16(values[i]);
          std::memcpy(t.data.data() + 2 * i, &h, 2);
        }
        break;
      case Dtype::BF16:
        for (std::size_t i = 0; i < values.size(); ++i) {
          const std::uint16_t b = f32_to_bf16(values[i]);
          std::memcpy(t.data.data() + 2 * i, &b, 2);
        }
        break;
    }
    return t;
  }

  friend bool operator==(const NamedTensor& a, const NamedTensor& b) {
    return a.name == b.name && a.dtype == b.dtype && a.shape == b.shape && a.data == b.data;
  }
};

/// Value-preserving widening to f32; f32 input is returned unchanged.
inline NamedTensor to_f32(const NamedTensor& t) {
  if (t.dtype == Dtype::F32) return t;
  return NamedTensor::from_f32(t.name, t.shape, t.as_f32(), Dtype::F32);
}

/// An insertion-ordered collection of uniquely named tensors plus a
/// string-to-string metadata map. Immutable once loaded; writers own
/// their archive exclusively.
class TensorArchive {
 public:
  std::map<std::string, std::string> metadata;

  void add(NamedTensor t) {
    t.validate();
    if (index_.contains(t.name))
      throw std::invalid_argument("duplicate tensor name \"" + t.name + "\"");
    index_.emplace(t.name, tensors_.size());
    tensors_.push_back(std::move(t));
  }

  bool contains(std::string_view name) const { return index_.contains(std::string(name)); }

  const NamedTensor& at(std::string_view name) const {
    auto it = index_.find(std::string(name));
    if (it == index_.end())
      throw std::out_of_range("no tensor named \"" + std::string(name) + "\"");
    return tensors_[it->second];
  }

  const std::vector<NamedTensor>& tensors() const { return tensors_; }
  std::size_t size() const { return tensors_.size(); }

  friend bool operator==(const TensorArchive& a, const TensorArchive& b) {
    return a.tensors_ == b.tensors_ && a.metadata == b.metadata;
  }

 private:
  std::vector<NamedTensor> tensors_;
  std::unordered_map<std::string, std::size_t> index_;
};

}  // namespace oats
