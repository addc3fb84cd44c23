// Copyright (c) 2026 The oats authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <random>
#include <stdexcept>
#include <vector>

#include "oats/matrix.hpp"

namespace oats {

enum class ScalingMode { SecondMoment, RobustMedian, Identity };

/// Streaming per-feature statistics of calibration activations. Second
/// moments accumulate in f64; robust mode additionally keeps a bounded
/// reservoir of |x| samples per feature. Single writer.
class ActivationMoments {
 public:
  static constexpr std::size_t kReservoirCap = 65536;

  explicit ActivationMoments(int d_in, bool keep_samples = false,
                             std::uint64_t seed = 0x6f617473ULL)
      : d_in_(d_in), sum_sq_(static_cast<std::size_t>(d_in), 0.0), keep_samples_(keep_samples),
        gen_(seed) {
    if (d_in <= 0) throw std::invalid_argument("ActivationMoments: d_in must be positive");
    if (keep_samples_) samples_.resize(static_cast<std::size_t>(d_in));
  }

  /// Folds a B x d_in activation block into the statistics.
  void accumulate(const DenseMatrix& x) {
    if (x.cols != d_in_)
      throw std::invalid_argument("accumulate: activations have " + std::to_string(x.cols) +
                                  " features, expected " + std::to_string(d_in_));
    if (!all_finite(x)) throw std::invalid_argument("accumulate: non-finite activations");
    for (int b = 0; b < x.rows; ++b) {
      const float* row = x.data.data() + static_cast<std::size_t>(b) * d_in_;
      const std::uint64_t t = rows_seen_ + 1;
      for (int j = 0; j < d_in_; ++j) {
        const double v = static_cast<double>(row[j]);
        sum_sq_[static_cast<std::size_t>(j)] += v * v;
        if (keep_samples_) {
          auto& res = samples_[static_cast<std::size_t>(j)];
          const float av = std::fabs(row[j]);
          if (res.size() < kReservoirCap) {
            res.push_back(av);
          } else {
            const std::uint64_t slot = gen_() % t;
            if (slot < kReservoirCap) res[static_cast<std::size_t>(slot)] = av;
          }
        }
      }
      ++rows_seen_;
    }
  }

  int d_in() const { return d_in_; }
  std::uint64_t count() const { return rows_seen_; }
  const std::vector<double>& sum_sq() const { return sum_sq_; }
  bool has_samples() const { return keep_samples_; }
  const std::vector<std::vector<float>>& samples() const { return samples_; }

 private:
  int d_in_;
  std::vector<double> sum_sq_;
  bool keep_samples_;
  std::vector<std::vector<float>> samples_;
  std::uint64_t rows_seen_ = 0;
  std::mt19937_64 gen_;
};

/// The diagonal D and its clamped elementwise inverse. Immutable once built.
struct ScalingDiag {
  std::vector<float> d;
  std::vector<float> d_inv;
  ScalingMode mode = ScalingMode::Identity;
  float clamp_floor = 0.0f;

  int dim() const { return static_cast<int>(d.size()); }

  static ScalingDiag identity(int d_in) {
    ScalingDiag s;
    s.d.assign(static_cast<std::size_t>(d_in), 1.0f);
    s.d_inv.assign(static_cast<std::size_t>(d_in), 1.0f);
    s.mode = ScalingMode::Identity;
    s.clamp_floor = 1e-8f;
    return s;
  }
};

namespace detail {

inline float median_of(std::vector<float> v) {
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  if (n % 2 == 1) return v[n / 2];
  return static_cast<float>(0.5 * (static_cast<double>(v[n / 2 - 1]) + static_cast<double>(v[n / 2])));
}

inline void fill_clamped_inverse(ScalingDiag& s) {
  float dmax = 0.0f;
  for (float v : s.d) dmax = std::max(dmax, v);
  const float eps = dmax > 0.0f ? 1e-8f * dmax : 1e-12f;
  s.clamp_floor = eps;
  s.d_inv.resize(s.d.size());
  for (std::size_t j = 0; j < s.d.size(); ++j) s.d_inv[j] = 1.0f / std::max(s.d[j], eps);
}

}  // namespace detail

/// Builds D from accumulated statistics. SecondMoment takes sqrt of the
/// per-feature sum of squares (no normalization by row count: only relative
/// column magnitudes matter). RobustMedian takes the median of |x| samples.
inline ScalingDiag build_diag(const ActivationMoments& m, ScalingMode mode) {
  ScalingDiag s;
  s.mode = mode;
  const std::size_t d = static_cast<std::size_t>(m.d_in());
  if (mode == ScalingMode::Identity) {
    return ScalingDiag::identity(m.d_in());
  }
  if (m.count() == 0) throw std::invalid_argument("build_diag: no activations accumulated");
  s.d.resize(d);
  if (mode == ScalingMode::SecondMoment) {
    for (std::size_t j = 0; j < d; ++j) s.d[j] = static_cast<float>(std::sqrt(m.sum_sq()[j]));
  } else {
    if (!m.has_samples())
      throw std::invalid_argument("build_diag: RobustMedian needs sample-keeping moments");
    for (std::size_t j = 0; j < d; ++j) s.d[j] = detail::median_of(m.samples()[j]);
  }
  detail::fill_clamped_inverse(s);
  return s;
}

/// Column j of the result is column j of W times d[j].
inline DenseMatrix scale_weights(const DenseMatrix& w, const ScalingDiag& s) {
  if (w.cols != s.dim()) throw std::invalid_argument("scale_weights: shape mismatch");
  DenseMatrix out(w.rows, w.cols);
  for (int i = 0; i < w.rows; ++i)
    for (int j = 0; j < w.cols; ++j) out.at(i, j) = w.at(i, j) * s.d[static_cast<std::size_t>(j)];
  return out;
}

/// Column j of the result is column j of M times d_inv[j]. Zero entries stay
/// zero, so sparsity patterns survive the inverse transform.
inline DenseMatrix unscale(const DenseMatrix& m, const ScalingDiag& s) {
  if (m.cols != s.dim()) throw std::invalid_argument("unscale: shape mismatch");
  DenseMatrix out(m.rows, m.cols);
  for (int i = 0; i < m.rows; ++i)
    for (int j = 0; j < m.cols; ++j) out.at(i, j) = m.at(i, j) * s.d_inv[static_cast<std::size_t>(j)];
  return out;
}

}  // namespace oats
