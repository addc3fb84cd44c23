// Copyright (c) 2026 The oats authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <bit>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <string_view>

namespace oats {

/// Scalar storage types supported by the tensor archive.
enum class Dtype { F32, F16, BF16 };

constexpr std::size_t dtype_size(Dtype d) noexcept {
  return d == Dtype::F32 ? 4u : 2u;
}

inline std::string_view dtype_name(Dtype d) {
  switch (d) {
    case Dtype::F32: return "F32";
    case Dtype::F16: return "F16";
    case Dtype::BF16: return "BF16";
  }
  return "?";
}

inline Dtype dtype_from_name(std::string_view s) {
  if (s == "F32") return Dtype::F32;
  if (s == "F16") return Dtype::F16;
  if (s == "BF16") return Dtype::BF16;
  throw std::invalid_argument("unsupported dtype \"" + std::string(s) + "\"");
}

inline bool dtype_known(std::string_view s) {
  return s == "F32" || s == "F16" || s == "BF16";
}

/// binary16 -> binary32. Exact (widening), covers subnormals, inf and nan.
inline float f16_to_f32(std::uint16_t h) {
  const std::uint32_t sign = static_cast<std::uint32_t>(h & 0x8000u) << 16;
  const std::uint32_t exp = (h >> 10) & 0x1Fu;
  const std::uint32_t man = h & 0x3FFu;
  if (exp == 0) {
    if (man == 0) return std::bit_cast<float>(sign);
    // subnormal: value = man * 2^-24, exactly representable in f32
    float v = static_cast<float>(man) * 0x1.0p-24f;
    return sign ? -v : v;
  }
  if (exp == 31) {  // inf / nan
    return std::bit_cast<float>(sign | 0x7F800000u | (man << 13));
  }
  return std::bit_cast<float>(sign | ((exp + 112u) << 23) | (man << 13));
}

/// binary32 -> binary16 with round-to-nearest-even.
inline std::uint16_t f32_to_f16(float f) {
  const std::uint32_t x = std::bit_cast<std::uint32_t>(f);
  const std::uint16_t sign = static_cast<std::uint16_t>((x >> 16) & 0x8000u);
  const std::uint32_t abs = x & 0x7FFFFFFFu;
  if (abs >= 0x7F800000u) {  // inf or nan
    if (abs == 0x7F800000u) return sign | 0x7C00u;
    return sign | 0x7E00u | static_cast<std::uint16_t>((abs >> 13) & 0x1FFu);
  }
  if (abs >= 0x47800000u) return sign | 0x7C00u;  // >= 65536 rounds to inf
  if (abs <= 0x33000000u) return sign;            // <= 2^-25 rounds to zero
  const std::uint32_t exp = abs >> 23;
  if (abs < 0x38800000u) {
    // f16 subnormal: round mantissa (with implicit bit) into 2^-24 units
    const std::uint32_t m = (abs & 0x7FFFFFu) | 0x800000u;
    const std::uint32_t shift = 126u - exp;  // in [14, 24]
    std::uint32_t q = m >> shift;
    const std::uint32_t rem = m & ((1u << shift) - 1u);
    const std::uint32_t half = 1u << (shift - 1u);
    q += (rem > half) || (rem == half && (q & 1u));
    return sign | static_cast<std::uint16_t>(q);
  }
  // normal: rebias, round low 13 mantissa bits; carry may bump the exponent
  // (including the overflow into the inf encoding, which is correct RNE)
  const std::uint32_t man = abs & 0x7FFFFFu;
  std::uint32_t out = ((exp - 112u) << 10) | (man >> 13);
  const std::uint32_t rem = man & 0x1FFFu;
  out += (rem > 0x1000u) || (rem == 0x1000u && (out & 1u));
  return sign | static_cast<std::uint16_t>(out);
}

/// bfloat16 -> binary32. Exact (bf16 is a truncated f32).
inline float bf16_to_f32(std::uint16_t b) {
  return std::bit_cast<float>(static_cast<std::uint32_t>(b) << 16);
}

/// binary32 -> bfloat16 with round-to-nearest-even.
inline std::uint16_t f32_to_bf16(float f) {
  std::uint32_t u = std::bit_cast<std::uint32_t>(f);
  if ((u & 0x7FFFFFFFu) > 0x7F800000u) {
    // nan: keep sign and high payload bits, force quiet
    return static_cast<std::uint16_t>((u >> 16) | 0x0040u);
  }
  u += 0x7FFFu + ((u >> 16) & 1u);
  return static_cast<std::uint16_t>(u >> 16);
}

}  // namespace oats
