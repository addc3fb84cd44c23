// Copyright (c) 2026 The oats authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <span>
#include <stdexcept>
#include <thread>
#include <vector>

#include "oats/threshold.hpp"

namespace oats::kernels {

/// y[b,:] = x[b,:] * W^T + bias, W is d_out x d_in row-major.
/// Four independent accumulators per dot product (ILP and less rounding drift).
inline void dense_apply(const float* w, const float* x, float* y, int batch, int d_out, int d_in,
                        const float* bias = nullptr) {
  for (int b = 0; b < batch; ++b) {
    const float* xb = x + static_cast<std::size_t>(b) * d_in;
    float* yb = y + static_cast<std::size_t>(b) * d_out;
    for (int o = 0; o < d_out; ++o) {
      const float* wr = w + static_cast<std::size_t>(o) * d_in;
      float a0 = 0.0f, a1 = 0.0f, a2 = 0.0f, a3 = 0.0f;
      int j = 0;
      for (; j + 4 <= d_in; j += 4) {
        a0 += wr[j] * xb[j];
        a1 += wr[j + 1] * xb[j + 1];
        a2 += wr[j + 2] * xb[j + 2];
        a3 += wr[j + 3] * xb[j + 3];
      }
      for (; j < d_in; ++j) a0 += wr[j] * xb[j];
      yb[o] = (a0 + a1) + (a2 + a3) + (bias ? bias[o] : 0.0f);
    }
  }
}

/// Canonical CSR: strictly increasing indices within each row,
/// non-decreasing indptr, nnz = indptr[rows].
struct CsrMatrix {
  int rows = 0, cols = 0;
  std::vector<std::int64_t> indptr;
  std::vector<std::int32_t> indices;
  std::vector<float> values;

  long nnz() const { return indptr.empty() ? 0 : static_cast<long>(indptr.back()); }

  void validate() const {
    if (static_cast<int>(indptr.size()) != rows + 1)
      throw std::invalid_argument("csr: indptr length must be rows+1");
    if (indptr.front() != 0) throw std::invalid_argument("csr: indptr[0] must be 0");
    if (indices.size() != values.size() ||
        static_cast<std::int64_t>(values.size()) != indptr.back())
      throw std::invalid_argument("csr: nnz bookkeeping mismatch");
    for (int i = 0; i < rows; ++i) {
      if (indptr[static_cast<std::size_t>(i) + 1] < indptr[static_cast<std::size_t>(i)])
        throw std::invalid_argument("csr: indptr must be non-decreasing");
      for (std::int64_t p = indptr[static_cast<std::size_t>(i)]; p < indptr[static_cast<std::size_t>(i) + 1]; ++p) {
        const std::int32_t c = indices[static_cast<std::size_t>(p)];
        if (c < 0 || c >= cols) throw std::invalid_argument("csr: column index out of range");
        if (p > indptr[static_cast<std::size_t>(i)] && c <= indices[static_cast<std::size_t>(p) - 1])
          throw std::invalid_argument("csr: indices must be strictly increasing within a row");
      }
    }
  }
};

/// CSR from a thresholded matrix. Masked positions are stored even when the
/// value is exactly zero, so nnz always equals the pattern budget.
inline CsrMatrix csr_from_masked(const MaskedMatrix& m) {
  CsrMatrix out;
  out.rows = m.values.rows;
  out.cols = m.values.cols;
  out.indptr.resize(static_cast<std::size_t>(out.rows) + 1, 0);
  const long count = m.nnz();
  out.indices.reserve(static_cast<std::size_t>(count));
  out.values.reserve(static_cast<std::size_t>(count));
  for (int i = 0; i < out.rows; ++i) {
    for (int j = 0; j < out.cols; ++j) {
      const std::size_t flat = static_cast<std::size_t>(i) * out.cols + j;
      if (m.mask[flat]) {
        out.indices.push_back(j);
        out.values.push_back(m.values.data[flat]);
      }
    }
    out.indptr[static_cast<std::size_t>(i) + 1] = static_cast<std::int64_t>(out.indices.size());
  }
  return out;
}

inline void csr_apply(const CsrMatrix& s, const float* x, float* y, int batch,
                      const float* bias = nullptr) {
  const std::int32_t* idx = s.indices.data();
  const float* val = s.values.data();
  for (int b = 0; b < batch; ++b) {
    const float* xb = x + static_cast<std::size_t>(b) * s.cols;
    float* yb = y + static_cast<std::size_t>(b) * s.rows;
    for (int o = 0; o < s.rows; ++o) {
      float a0 = bias ? bias[o] : 0.0f, a1 = 0.0f, a2 = 0.0f, a3 = 0.0f;
      std::int64_t p = s.indptr[static_cast<std::size_t>(o)];
      const std::int64_t end = s.indptr[static_cast<std::size_t>(o) + 1];
      for (; p + 4 <= end; p += 4) {
        a0 += val[p] * xb[idx[p]];
        a1 += val[p + 1] * xb[idx[p + 1]];
        a2 += val[p + 2] * xb[idx[p + 2]];
        a3 += val[p + 3] * xb[idx[p + 3]];
      }
      for (; p < end; ++p) a0 += val[p] * xb[idx[p]];
      yb[o] = (a0 + a1) + (a2 + a3);
    }
  }
}

/// n:m structured storage: per row and group of m columns, exactly n kept
/// values plus their within-group column offsets.
struct NmPacked {
  int rows = 0, cols = 0, n = 0, m = 0;
  std::vector<float> values;          // rows * (cols/m) * n
  std::vector<std::uint8_t> offsets;  // same length, each < m

  long nnz() const { return static_cast<long>(values.size()); }
};

inline NmPacked pack_nm(const MaskedMatrix& src, int n, int m) {
  if (src.values.cols % m != 0) throw std::invalid_argument("pack_nm: cols not divisible by m");
  NmPacked out;
  out.rows = src.values.rows;
  out.cols = src.values.cols;
  out.n = n;
  out.m = m;
  const int groups = out.cols / m;
  out.values.reserve(static_cast<std::size_t>(out.rows) * groups * n);
  out.offsets.reserve(out.values.capacity());
  for (int i = 0; i < out.rows; ++i) {
    for (int g = 0; g < groups; ++g) {
      int kept = 0;
      for (int t = 0; t < m; ++t) {
        const std::size_t flat = static_cast<std::size_t>(i) * out.cols + static_cast<std::size_t>(g) * m + t;
        if (src.mask[flat]) {
          out.values.push_back(src.values.data[flat]);
          out.offsets.push_back(static_cast<std::uint8_t>(t));
          ++kept;
        }
      }
      if (kept != n) throw std::invalid_argument("pack_nm: mask does not hold exactly n per group");
    }
  }
  return out;
}

inline void nm_apply(const NmPacked& s, const float* x, float* y, int batch,
                     const float* bias = nullptr) {
  const int groups = s.cols / s.m;
  for (int b = 0; b < batch; ++b) {
    const float* xb = x + static_cast<std::size_t>(b) * s.cols;
    float* yb = y + static_cast<std::size_t>(b) * s.rows;
    for (int o = 0; o < s.rows; ++o) {
      float acc = bias ? bias[o] : 0.0f;
      const std::size_t row_base = static_cast<std::size_t>(o) * groups * s.n;
      for (int g = 0; g < groups; ++g) {
        const float* xg = xb + static_cast<std::size_t>(g) * s.m;
        const std::size_t p = row_base + static_cast<std::size_t>(g) * s.n;
        for (int t = 0; t < s.n; ++t) acc += s.values[p + t] * xg[s.offsets[p + t]];
      }
      yb[o] = acc;
    }
  }
}

/// y = x * S^T + (x * SVt^T) * U^T + bias.
/// u is d_out x r row-major; svt is r x d_in row-major.
inline void sparse_lowrank_apply(const CsrMatrix& s, const float* u, const float* svt, int r,
                                 const float* x, float* y, int batch,
                                 const float* bias = nullptr) {
  csr_apply(s, x, y, batch, bias);
  if (r == 0) return;
  std::vector<float> t(static_cast<std::size_t>(batch) * r);
  dense_apply(svt, x, t.data(), batch, r, s.cols);
  for (int b = 0; b < batch; ++b) {
    const float* tb = t.data() + static_cast<std::size_t>(b) * r;
    float* yb = y + static_cast<std::size_t>(b) * s.rows;
    for (int o = 0; o < s.rows; ++o) {
      const float* ur = u + static_cast<std::size_t>(o) * r;
      float acc = 0.0f;
      for (int j = 0; j < r; ++j) acc += ur[j] * tb[j];
      yb[o] += acc;
    }
  }
}

/// Splits output rows across `threads` workers; each row is still computed
/// by one worker, so results are bitwise identical to the serial kernels.
template <typename RowRangeFn>
inline void parallel_rows(int rows, int threads, RowRangeFn&& fn) {
  if (threads <= 1 || rows < 2 * threads) {
    fn(0, rows);
    return;
  }
  std::vector<std::thread> pool;
  pool.reserve(static_cast<std::size_t>(threads));
  const int chunk = (rows + threads - 1) / threads;
  for (int t = 0; t < threads; ++t) {
    const int lo = t * chunk;
    const int hi = std::min(rows, lo + chunk);
    if (lo >= hi) break;
    pool.emplace_back([&fn, lo, hi] { fn(lo, hi); });
  }
  for (auto& th : pool) th.join();
}

inline void dense_apply_parallel(const float* w, const float* x, float* y, int batch, int d_out,
                                 int d_in, int threads, const float* bias = nullptr) {
  parallel_rows(d_out, threads, [&](int lo, int hi) {
    for (int b = 0; b < batch; ++b) {
      const float* xb = x + static_cast<std::size_t>(b) * d_in;
      float* yb = y + static_cast<std::size_t>(b) * d_out;
      for (int o = lo; o < hi; ++o) {
        const float* wr = w + static_cast<std::size_t>(o) * d_in;
        float a0 = 0.0f, a1 = 0.0f, a2 = 0.0f, a3 = 0.0f;
        int j = 0;
        for (; j + 4 <= d_in; j += 4) {
          a0 += wr[j] * xb[j];
          a1 += wr[j + 1] * xb[j + 1];
          a2 += wr[j + 2] * xb[j + 2];
          a3 += wr[j + 3] * xb[j + 3];
        }
        for (; j < d_in; ++j) a0 += wr[j] * xb[j];
        yb[o] = (a0 + a1) + (a2 + a3) + (bias ? bias[o] : 0.0f);
      }
    }
  });
}

inline void csr_apply_parallel(const CsrMatrix& s, const float* x, float* y, int batch,
                               int threads, const float* bias = nullptr) {
  const std::int32_t* idx = s.indices.data();
  const float* val = s.values.data();
  parallel_rows(s.rows, threads, [&, idx, val](int lo, int hi) {
    for (int b = 0; b < batch; ++b) {
      const float* xb = x + static_cast<std::size_t>(b) * s.cols;
      float* yb = y + static_cast<std::size_t>(b) * s.rows;
      for (int o = lo; o < hi; ++o) {
        float a0 = bias ? bias[o] : 0.0f, a1 = 0.0f, a2 = 0.0f, a3 = 0.0f;
        std::int64_t p = s.indptr[static_cast<std::size_t>(o)];
        const std::int64_t end = s.indptr[static_cast<std::size_t>(o) + 1];
        for (; p + 4 <= end; p += 4) {
          a0 += val[p] * xb[idx[p]];
          a1 += val[p + 1] * xb[idx[p + 1]];
          a2 += val[p + 2] * xb[idx[p + 2]];
          a3 += val[p + 3] * xb[idx[p + 3]];
        }
        for (; p < end; ++p) a0 += val[p] * xb[idx[p]];
        yb[o] = (a0 + a1) + (a2 + a3);
      }
    }
  });
}

}  // namespace oats::kernels
