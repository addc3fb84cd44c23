// Copyright (c) 2026 The oats authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "oats/kernels.hpp"
#include "oats/matrix.hpp"
#include "oats/scaling.hpp"
#include "oats/svd.hpp"
#include "oats/threshold.hpp"

namespace oats {

/// Deployable compressed layer: the sparse term S*D^-1 in canonical CSR plus
/// the low-rank factors U and Sigma*Vt*D^-1. Applying it reproduces
/// (S + L) * D^-1 acting on the input.
struct SparseLowRankLayer {
  std::string name;
  int d_out = 0;
  int d_in = 0;
  kernels::CsrMatrix sparse;
  DenseMatrix u;    // d_out x r
  DenseMatrix svt;  // r x d_in
  std::vector<float> bias;  // empty when the layer has none

  int rank() const { return u.cols; }
  long nnz() const { return sparse.nnz(); }

  void validate() const {
    if (sparse.rows != d_out || sparse.cols != d_in)
      throw std::invalid_argument("layer \"" + name + "\": csr shape mismatch");
    sparse.validate();
    if (u.rows != d_out || svt.cols != d_in || u.cols != svt.rows)
      throw std::invalid_argument("layer \"" + name + "\": low-rank factor shape mismatch");
    if (!bias.empty() && static_cast<int>(bias.size()) != d_out)
      throw std::invalid_argument("layer \"" + name + "\": bias length mismatch");
  }

  /// Dense (S + L) * D^-1, mainly for oracles and inspection.
  DenseMatrix materialize() const {
    DenseMatrix w(d_out, d_in);
    for (int i = 0; i < d_out; ++i)
      for (std::int64_t p = sparse.indptr[static_cast<std::size_t>(i)];
           p < sparse.indptr[static_cast<std::size_t>(i) + 1]; ++p)
        w.at(i, sparse.indices[static_cast<std::size_t>(p)]) += sparse.values[static_cast<std::size_t>(p)];
    if (rank() > 0) {
      const DenseMatrix lr = matmul(u, svt);
      for (std::size_t i = 0; i < w.data.size(); ++i) w.data[i] += lr.data[i];
    }
    return w;
  }
};

/// Assembles the deployable layer from a scaled-coordinates decomposition:
/// CSR values are S * d_inv and the second factor is (sigma * Vt) * d_inv,
/// both plain per-column f32 multiplies.
inline SparseLowRankLayer make_sparse_low_rank_layer(std::string name, const MaskedMatrix& s,
                                                     const SvdTruncation& l,
                                                     const ScalingDiag& diag,
                                                     std::vector<float> bias = {}) {
  SparseLowRankLayer out;
  out.name = std::move(name);
  out.d_out = s.values.rows;
  out.d_in = s.values.cols;
  if (diag.dim() != out.d_in)
    throw std::invalid_argument("make_sparse_low_rank_layer: scaling dim mismatch");

  MaskedMatrix unscaled;
  unscaled.mask = s.mask;
  unscaled.values = unscale(s.values, diag);
  out.sparse = kernels::csr_from_masked(unscaled);

  const int r = l.rank();
  out.u = l.u;
  out.svt = DenseMatrix(r, out.d_in);
  for (int i = 0; i < r; ++i)
    for (int j = 0; j < out.d_in; ++j)
      out.svt.at(i, j) = l.singular_values[static_cast<std::size_t>(i)] * l.vt.at(i, j) *
                         diag.d_inv[static_cast<std::size_t>(j)];
  out.bias = std::move(bias);
  out.validate();
  return out;
}

/// y = x * S^T + (x * SVt^T) * U^T + bias; x is batch x d_in.
inline DenseMatrix apply_compressed(const SparseLowRankLayer& layer, const DenseMatrix& x) {
  if (x.cols != layer.d_in)
    throw std::invalid_argument("apply_compressed: input has " + std::to_string(x.cols) +
                                " features, layer expects " + std::to_string(layer.d_in));
  DenseMatrix y(x.rows, layer.d_out);
  kernels::sparse_lowrank_apply(layer.sparse, layer.u.data.data(), layer.svt.data.data(),
                                layer.rank(), x.data.data(), y.data.data(), x.rows,
                                layer.bias.empty() ? nullptr : layer.bias.data());
  return y;
}

/// Single-vector convenience overload.
inline std::vector<float> apply_compressed(const SparseLowRankLayer& layer,
                                           std::span<const float> x) {
  DenseMatrix xm(1, static_cast<int>(x.size()));
  std::copy(x.begin(), x.end(), xm.data.begin());
  return apply_compressed(layer, xm).data;
}

}  // namespace oats
