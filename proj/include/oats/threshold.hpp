// Copyright (c) 2026 The oats authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <stdexcept>
#include <variant>
#include <vector>

#include "oats/matrix.hpp"

namespace oats {

/// Keep the k largest magnitudes of the whole matrix.
struct LayerWise {
  long k = 0;
};
/// Keep the floor(k / rows) largest magnitudes of each row; the remainder
/// k - rows*floor(k/rows) is dropped, not redistributed.
struct RowWise {
  long k = 0;
};
/// Keep the n largest magnitudes in every contiguous group of m entries
/// along each row. Requires cols divisible by m.
struct NofM {
  int n = 0;
  int m = 0;
};

using SparsityPattern = std::variant<LayerWise, RowWise, NofM>;

inline void validate_pattern(const SparsityPattern& p, int rows, int cols) {
  const long total = static_cast<long>(rows) * cols;
  if (const auto* lw = std::get_if<LayerWise>(&p)) {
    if (lw->k < 0) throw std::invalid_argument("LayerWise: k must be >= 0");
    (void)total;
  } else if (const auto* rw = std::get_if<RowWise>(&p)) {
    if (rw->k < 0) throw std::invalid_argument("RowWise: k must be >= 0");
  } else {
    const auto& nm = std::get<NofM>(p);
    if (nm.n <= 0 || nm.m <= 0 || nm.n > nm.m)
      throw std::invalid_argument("NofM: need 0 < n <= m");
    if (cols % nm.m != 0)
      throw std::invalid_argument("NofM: cols (" + std::to_string(cols) +
                                  ") not divisible by m (" + std::to_string(nm.m) + ")");
  }
}

/// Number of mask bits the pattern produces on a rows x cols matrix.
inline long pattern_budget(const SparsityPattern& p, int rows, int cols) {
  const long total = static_cast<long>(rows) * cols;
  if (const auto* lw = std::get_if<LayerWise>(&p)) return std::min(lw->k, total);
  if (const auto* rw = std::get_if<RowWise>(&p)) {
    if (rows == 0) return 0;
    const long per_row = std::min(rw->k / rows, static_cast<long>(cols));
    return per_row * rows;
  }
  const auto& nm = std::get<NofM>(p);
  if (cols == 0) return 0;
  return static_cast<long>(rows) * (cols / nm.m) * nm.n;
}

/// A thresholded matrix: `values` is the input with non-kept entries zeroed,
/// `mask` records the kept positions (popcount equals the pattern budget).
struct MaskedMatrix {
  DenseMatrix values;
  std::vector<std::uint8_t> mask;

  long nnz() const {
    long c = 0;
    for (std::uint8_t b : mask) c += b;
    return c;
  }
};

namespace detail {

// Keeps the `keep` largest-magnitude indices of `idx` (ties: lowest index
// wins) by partial selection, then marks them in the mask.
inline void select_largest(const float* values, std::vector<std::int64_t>& idx, long keep,
                           std::vector<std::uint8_t>& mask) {
  if (keep <= 0) return;
  if (keep >= static_cast<long>(idx.size())) {
    for (std::int64_t i : idx) mask[static_cast<std::size_t>(i)] = 1;
    return;
  }
  auto better = [values](std::int64_t a, std::int64_t b) {
    const float ma = std::fabs(values[a]), mb = std::fabs(values[b]);
    return ma != mb ? ma > mb : a < b;
  };
  std::nth_element(idx.begin(), idx.begin() + keep, idx.end(), better);
  for (long i = 0; i < keep; ++i) mask[static_cast<std::size_t>(idx[static_cast<std::size_t>(i)])] = 1;
}

}  // namespace detail

/// Projects A onto the pattern's constraint set: the Frobenius-nearest
/// matrix whose support satisfies the pattern. Kept entries are copied
/// bit-for-bit; equal magnitudes are broken by lowest row-major index.
inline MaskedMatrix hard_threshold(const DenseMatrix& a, const SparsityPattern& p) {
  validate_pattern(p, a.rows, a.cols);
  MaskedMatrix out;
  out.mask.assign(a.size(), 0);

  if (const auto* lw = std::get_if<LayerWise>(&p)) {
    std::vector<std::int64_t> idx(a.size());
    std::iota(idx.begin(), idx.end(), 0);
    detail::select_largest(a.data.data(), idx, std::min(lw->k, static_cast<long>(a.size())), out.mask);
  } else if (const auto* rw = std::get_if<RowWise>(&p)) {
    const long per_row = a.rows > 0 ? std::min(rw->k / a.rows, static_cast<long>(a.cols)) : 0;
    std::vector<std::int64_t> idx(static_cast<std::size_t>(a.cols));
    for (int i = 0; i < a.rows; ++i) {
      const std::int64_t base = static_cast<std::int64_t>(i) * a.cols;
      std::iota(idx.begin(), idx.end(), base);
      detail::select_largest(a.data.data(), idx, per_row, out.mask);
    }
  } else {
    const auto& nm = std::get<NofM>(p);
    std::vector<std::int64_t> idx(static_cast<std::size_t>(nm.m));
    for (int i = 0; i < a.rows; ++i) {
      for (int g = 0; g < a.cols / nm.m; ++g) {
        const std::int64_t base = static_cast<std::int64_t>(i) * a.cols + static_cast<std::int64_t>(g) * nm.m;
        idx.resize(static_cast<std::size_t>(nm.m));
        std::iota(idx.begin(), idx.end(), base);
        detail::select_largest(a.data.data(), idx, nm.n, out.mask);
      }
    }
  }

  out.values = DenseMatrix(a.rows, a.cols);
  for (std::size_t i = 0; i < a.size(); ++i)
    if (out.mask[i]) out.values.data[i] = a.data[i];
  return out;
}

}  // namespace oats
