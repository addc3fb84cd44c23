// Copyright (c) 2026 The oats authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cmath>
#include <cstdint>
#include <functional>
#include <stdexcept>
#include <vector>

#include "oats/matrix.hpp"
#include "oats/scaling.hpp"
#include "oats/svd.hpp"
#include "oats/threshold.hpp"

namespace oats {

enum class Granularity { LayerWise, RowWise };
enum class ThresholdOrder { SvdFirst, HardThresholdFirst };
enum class SparseStepScaling { Scaled, Unscaled };
enum class SvdMode { Exact, Randomized };

/// Integer (rank, nonzero) budget for one matrix, plus the sparsity pattern
/// the nonzeros are subject to.
struct LayerBudget {
  long r = 0;
  long k = 0;
  SparsityPattern pattern = LayerWise{0};
};

/// Splits a compression rate rho and rank ratio kappa into integer (r, k):
///   r = floor(kappa * (1-rho) * d_out*d_in / (d_out+d_in))
///   k = floor((1-kappa) * (1-rho) * d_out*d_in)
/// kappa = 0 gives r = 0, i.e. plain pruning of the scaled weights.
inline LayerBudget solve_budget(int d_out, int d_in, double rho, double kappa,
                                Granularity g = Granularity::LayerWise) {
  if (!(rho > 0.0 && rho < 1.0)) throw std::invalid_argument("solve_budget: rho must be in (0,1)");
  if (!(kappa >= 0.0 && kappa < 1.0))
    throw std::invalid_argument("solve_budget: kappa must be in [0,1)");
  if (d_out <= 0 || d_in <= 0) throw std::invalid_argument("solve_budget: dims must be positive");
  const double mn = static_cast<double>(d_out) * static_cast<double>(d_in);
  const double ratio = mn / (static_cast<double>(d_out) + static_cast<double>(d_in));
  LayerBudget b;
  b.r = static_cast<long>(std::floor(kappa * (1.0 - rho) * ratio));
  b.k = static_cast<long>(std::floor((1.0 - kappa) * (1.0 - rho) * mn));
  b.pattern = g == Granularity::LayerWise ? SparsityPattern(LayerWise{b.k})
                                          : SparsityPattern(RowWise{b.k});
  return b;
}

/// Budget for an n:m structured sparse term plus a low-rank term holding the
/// fraction kappa of all retained parameters:
///   nnz = d_out*d_in*n/m
///   r   = floor(kappa/(1-kappa) * (n/m) * d_out*d_in / (d_out+d_in))
inline LayerBudget budget_for_nm(int d_out, int d_in, int n, int m, double kappa) {
  if (n <= 0 || m <= 0 || n > m) throw std::invalid_argument("budget_for_nm: need 0 < n <= m");
  if (d_in % m != 0)
    throw std::invalid_argument("budget_for_nm: d_in (" + std::to_string(d_in) +
                                ") not divisible by m (" + std::to_string(m) + ")");
  if (!(kappa >= 0.0 && kappa < 1.0))
    throw std::invalid_argument("budget_for_nm: kappa must be in [0,1)");
  const double ratio = static_cast<double>(d_out) * d_in / (static_cast<double>(d_out) + d_in);
  LayerBudget b;
  b.k = static_cast<long>(d_out) * d_in / m * n;
  b.r = static_cast<long>(std::floor(kappa / (1.0 - kappa) * (static_cast<double>(n) / m) * ratio));
  b.pattern = NofM{n, m};
  return b;
}

/// Fraction of parameters removed by a budget on a d_out x d_in matrix.
inline double compression_rate(const LayerBudget& b, int d_out, int d_in) {
  const double mn = static_cast<double>(d_out) * d_in;
  const long nnz = pattern_budget(b.pattern, d_out, d_in);
  return 1.0 - (static_cast<double>(nnz) + static_cast<double>(b.r) * (d_out + d_in)) / mn;
}

struct DecomposeOptions {
  int iterations = 80;
  ThresholdOrder order = ThresholdOrder::SvdFirst;
  SparseStepScaling sparse_step = SparseStepScaling::Scaled;
  SvdMode svd_mode = SvdMode::Exact;
  std::uint64_t seed = 0;  // randomized SVD only
  double rel_tol = 0.0;    // early stop on relative objective change; 0 disables
  std::function<void(int, const MaskedMatrix&, const SvdTruncation&)> on_iteration;
};

struct DecompositionResult {
  MaskedMatrix s;
  SvdTruncation l;
  std::vector<double> objective_trace;  // ||Wd - S - L||_F^2 after each iteration, f64
  int iterations_run = 0;
};

namespace detail {

inline MaskedMatrix sparse_projection(const DenseMatrix& residual, const SparsityPattern& pattern,
                                      SparseStepScaling step, const ScalingDiag* scaling) {
  if (step == SparseStepScaling::Scaled) return hard_threshold(residual, pattern);
  // Support chosen on the unscaled residual (W D - L) D^-1; kept values stay
  // in scaled coordinates so the loop state is unchanged.
  MaskedMatrix picked = hard_threshold(unscale(residual, *scaling), pattern);
  MaskedMatrix out;
  out.mask = std::move(picked.mask);
  out.values = DenseMatrix(residual.rows, residual.cols);
  for (std::size_t i = 0; i < residual.size(); ++i)
    if (out.mask[i]) out.values.data[i] = residual.data[i];
  return out;
}

}  // namespace detail

/// Alternates between the rank projection (truncated SVD of Wd - S) and the
/// sparsity projection (hard threshold of Wd - L) for a fixed number of
/// iterations, starting from S = 0. `scaling` is only consulted by the
/// unscaled sparse-step variant.
inline DecompositionResult alternating_thresholding(const DenseMatrix& wd,
                                                    const LayerBudget& budget,
                                                    const DecomposeOptions& opts,
                                                    const ScalingDiag* scaling = nullptr) {
  if (opts.iterations < 1)
    throw std::invalid_argument("alternating_thresholding: iterations must be >= 1");
  if (!all_finite(wd)) throw std::invalid_argument("alternating_thresholding: non-finite input");
  if (budget.r < 0 || budget.r > std::min(wd.rows, wd.cols))
    throw std::invalid_argument("alternating_thresholding: rank budget out of range");
  validate_pattern(budget.pattern, wd.rows, wd.cols);
  if (opts.sparse_step == SparseStepScaling::Unscaled) {
    if (scaling == nullptr || scaling->dim() != wd.cols)
      throw std::invalid_argument("alternating_thresholding: unscaled sparse step needs a scaling diagonal");
  }

  const int r = static_cast<int>(budget.r);
  auto svd_step = [&](const DenseMatrix& a, int iter) {
    if (opts.svd_mode == SvdMode::Exact || r == 0) return truncated_svd(a, r);
    return truncated_svd_randomized(a, r, mix_seed(opts.seed ^ static_cast<std::uint64_t>(iter)));
  };

  DecompositionResult res;
  res.s.values = DenseMatrix(wd.rows, wd.cols);
  res.s.mask.assign(wd.size(), 0);
  res.l = truncated_svd(DenseMatrix(wd.rows, wd.cols), 0);
  DenseMatrix l_dense(wd.rows, wd.cols);

  for (int t = 1; t <= opts.iterations; ++t) {
    if (opts.order == ThresholdOrder::SvdFirst) {
      res.l = svd_step(subtract(wd, res.s.values), t);
      l_dense = reconstruct(res.l);
      res.s = detail::sparse_projection(subtract(wd, l_dense), budget.pattern, opts.sparse_step, scaling);
    } else {
      res.s = detail::sparse_projection(subtract(wd, l_dense), budget.pattern, opts.sparse_step, scaling);
      res.l = svd_step(subtract(wd, res.s.values), t);
      l_dense = reconstruct(res.l);
    }
    res.objective_trace.push_back(frob_norm_sq(subtract(subtract(wd, res.s.values), l_dense)));
    res.iterations_run = t;
    if (opts.on_iteration) opts.on_iteration(t, res.s, res.l);
    if (opts.rel_tol > 0.0 && t >= 2) {
      const double prev = res.objective_trace[static_cast<std::size_t>(t) - 2];
      const double cur = res.objective_trace[static_cast<std::size_t>(t) - 1];
      if (std::fabs(prev - cur) <= opts.rel_tol * std::max(res.objective_trace.front(), 1e-300))
        break;
    }
  }
  return res;
}

}  // namespace oats
