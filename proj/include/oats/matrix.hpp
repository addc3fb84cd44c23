// Copyright (c) 2026 The oats authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

namespace oats {

/// Row-major dense f32 matrix.
struct DenseMatrix {
  int rows = 0;
  int cols = 0;
  std::vector<float> data;

  DenseMatrix() = default;
  DenseMatrix(int r, int c) : rows(r), cols(c), data(static_cast<std::size_t>(r) * c, 0.0f) {
    if (r < 0 || c < 0) throw std::invalid_argument("negative matrix dimension");
  }
  DenseMatrix(int r, int c, std::vector<float> d) : rows(r), cols(c), data(std::move(d)) {
    if (data.size() != static_cast<std::size_t>(r) * c)
      throw std::invalid_argument("matrix buffer size does not match rows*cols");
  }

  float& at(int i, int j) { return data[static_cast<std::size_t>(i) * cols + j]; }
  float at(int i, int j) const { return data[static_cast<std::size_t>(i) * cols + j]; }
  std::size_t size() const { return data.size(); }

  friend bool operator==(const DenseMatrix& a, const DenseMatrix& b) {
    return a.rows == b.rows && a.cols == b.cols && a.data == b.data;
  }
};

inline bool all_finite(const DenseMatrix& a) {
  for (float v : a.data)
    if (!std::isfinite(v)) return false;
  return true;
}

/// Sum of squared entries, accumulated in f64.
inline double frob_norm_sq(const DenseMatrix& a) {
  double acc = 0.0;
  for (float v : a.data) acc += static_cast<double>(v) * static_cast<double>(v);
  return acc;
}

inline DenseMatrix subtract(const DenseMatrix& a, const DenseMatrix& b) {
  if (a.rows != b.rows || a.cols != b.cols)
    throw std::invalid_argument("subtract: shape mismatch");
  DenseMatrix out(a.rows, a.cols);
  for (std::size_t i = 0; i < a.data.size(); ++i) out.data[i] = a.data[i] - b.data[i];
  return out;
}

inline DenseMatrix add(const DenseMatrix& a, const DenseMatrix& b) {
  if (a.rows != b.rows || a.cols != b.cols) throw std::invalid_argument("add: shape mismatch");
  DenseMatrix out(a.rows, a.cols);
  for (std::size_t i = 0; i < a.data.size(); ++i) out.data[i] = a.data[i] + b.data[i];
  return out;
}

inline DenseMatrix transpose(const DenseMatrix& a) {
  DenseMatrix out(a.cols, a.rows);
  for (int i = 0; i < a.rows; ++i)
    for (int j = 0; j < a.cols; ++j) out.at(j, i) = a.at(i, j);
  return out;
}

/// C = A * B, A is m x k, B is k x n.
inline DenseMatrix matmul(const DenseMatrix& a, const DenseMatrix& b) {
  if (a.cols != b.rows) throw std::invalid_argument("matmul: inner dimension mismatch");
  DenseMatrix c(a.rows, b.cols);
  for (int i = 0; i < a.rows; ++i) {
    float* crow = c.data.data() + static_cast<std::size_t>(i) * c.cols;
    for (int k = 0; k < a.cols; ++k) {
      const float aik = a.at(i, k);
      if (aik == 0.0f) continue;
      const float* brow = b.data.data() + static_cast<std::size_t>(k) * b.cols;
      for (int j = 0; j < b.cols; ++j) crow[j] += aik * brow[j];
    }
  }
  return c;
}

/// C = A * B^T, A is m x k, B is n x k.
inline DenseMatrix matmul_transb(const DenseMatrix& a, const DenseMatrix& b) {
  if (a.cols != b.cols) throw std::invalid_argument("matmul_transb: inner dimension mismatch");
  DenseMatrix c(a.rows, b.rows);
  for (int i = 0; i < a.rows; ++i) {
    const float* arow = a.data.data() + static_cast<std::size_t>(i) * a.cols;
    for (int j = 0; j < b.rows; ++j) {
      const float* brow = b.data.data() + static_cast<std::size_t>(j) * b.cols;
      float acc = 0.0f;
      for (int k = 0; k < a.cols; ++k) acc += arow[k] * brow[k];
      c.at(i, j) = acc;
    }
  }
  return c;
}

}  // namespace oats
