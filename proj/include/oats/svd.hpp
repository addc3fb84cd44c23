// Copyright (c) 2026 The oats authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <stdexcept>
#include <vector>

#include "oats/matrix.hpp"
#include "oats/rng.hpp"

namespace oats {

/// Best rank-r factors: A ~ U * diag(sigma) * Vt. An r = 0 truncation keeps
/// the source dimensions (u is m x 0, vt is 0 x n) and represents the zero
/// matrix.
struct SvdTruncation {
  DenseMatrix u;                       // m x r
  std::vector<float> singular_values;  // non-increasing, >= 0
  DenseMatrix vt;                      // r x n

  int rank() const { return static_cast<int>(singular_values.size()); }
};

namespace detail {

// Column-major f64 workspace for the Hestenes one-sided Jacobi iteration.
struct JacobiResult {
  std::vector<double> b;      // m x n, columns orthogonal on exit
  std::vector<double> v;      // n x n accumulated rotations
  std::vector<double> sigma;  // n column norms, unsorted
};

inline JacobiResult jacobi_orthogonalize(std::vector<double> b, int m, int n) {
  std::vector<double> v(static_cast<std::size_t>(n) * n, 0.0);
  for (int i = 0; i < n; ++i) v[static_cast<std::size_t>(i) * n + i] = 1.0;

  constexpr double kTol = 1e-15;
  constexpr int kMaxSweeps = 64;
  for (int sweep = 0; sweep < kMaxSweeps; ++sweep) {
    bool rotated = false;
    for (int p = 0; p < n - 1; ++p) {
      for (int q = p + 1; q < n; ++q) {
        double* cp = b.data() + static_cast<std::size_t>(p) * m;
        double* cq = b.data() + static_cast<std::size_t>(q) * m;
        double app = 0.0, aqq = 0.0, apq = 0.0;
        for (int i = 0; i < m; ++i) {
          app += cp[i] * cp[i];
          aqq += cq[i] * cq[i];
          apq += cp[i] * cq[i];
        }
        if (std::abs(apq) <= kTol * std::sqrt(app * aqq) || apq == 0.0) continue;
        rotated = true;
        const double zeta = (aqq - app) / (2.0 * apq);
        const double t = (zeta >= 0.0 ? 1.0 : -1.0) / (std::abs(zeta) + std::sqrt(1.0 + zeta * zeta));
        const double c = 1.0 / std::sqrt(1.0 + t * t);
        const double s = c * t;
        for (int i = 0; i < m; ++i) {
          const double bp = cp[i], bq = cq[i];
          cp[i] = c * bp - s * bq;
          cq[i] = s * bp + c * bq;
        }
        double* vp = v.data() + static_cast<std::size_t>(p) * n;
        double* vq = v.data() + static_cast<std::size_t>(q) * n;
        for (int i = 0; i < n; ++i) {
          const double wp = vp[i], wq = vq[i];
          vp[i] = c * wp - s * wq;
          vq[i] = s * wp + c * wq;
        }
      }
    }
    if (!rotated) break;
  }

  std::vector<double> sigma(n);
  for (int j = 0; j < n; ++j) {
    const double* cj = b.data() + static_cast<std::size_t>(j) * m;
    double nrm = 0.0;
    for (int i = 0; i < m; ++i) nrm += cj[i] * cj[i];
    sigma[static_cast<std::size_t>(j)] = std::sqrt(nrm);
  }
  return {std::move(b), std::move(v), std::move(sigma)};
}

// Fills column `col` of u (m x r, col-major) with a unit vector orthogonal to
// columns [0, col). Used when a requested factor exceeds the numerical rank.
inline void orthonormal_completion(std::vector<double>& u, int m, int col) {
  for (int cand = 0; cand < m; ++cand) {
    std::vector<double> w(static_cast<std::size_t>(m), 0.0);
    w[static_cast<std::size_t>(cand)] = 1.0;
    for (int j = 0; j < col; ++j) {
      const double* cj = u.data() + static_cast<std::size_t>(j) * m;
      double dot = 0.0;
      for (int i = 0; i < m; ++i) dot += w[static_cast<std::size_t>(i)] * cj[i];
      for (int i = 0; i < m; ++i) w[static_cast<std::size_t>(i)] -= dot * cj[i];
    }
    double nrm = 0.0;
    for (double x : w) nrm += x * x;
    nrm = std::sqrt(nrm);
    if (nrm > 0.5) {
      double* cc = u.data() + static_cast<std::size_t>(col) * m;
      for (int i = 0; i < m; ++i) cc[i] = w[static_cast<std::size_t>(i)] / nrm;
      return;
    }
  }
  throw std::runtime_error("svd: failed to complete orthonormal basis");
}

// Full SVD of a tall matrix (m >= n), truncated to rank r.
// Returns U (m x r), sigma (r), Vt (r x n) in f64 column-major pieces.
struct TruncatedF64 {
  std::vector<double> u;      // m x r col-major
  std::vector<double> sigma;  // r
  std::vector<double> vt;     // r x n row-major
};

inline TruncatedF64 svd_tall_truncated(const std::vector<double>& a_colmajor, int m, int n, int r) {
  JacobiResult jr = jacobi_orthogonalize(a_colmajor, m, n);

  std::vector<int> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](int x, int y) {
    return jr.sigma[static_cast<std::size_t>(x)] > jr.sigma[static_cast<std::size_t>(y)];
  });

  const double sig_max = jr.sigma[static_cast<std::size_t>(order[0])];
  const double zero_tol = sig_max * 1e-13 * std::max(m, n);

  TruncatedF64 out;
  out.u.assign(static_cast<std::size_t>(m) * r, 0.0);
  out.sigma.assign(static_cast<std::size_t>(r), 0.0);
  out.vt.assign(static_cast<std::size_t>(r) * n, 0.0);

  for (int j = 0; j < r; ++j) {
    const int src = order[static_cast<std::size_t>(j)];
    const double s = jr.sigma[static_cast<std::size_t>(src)];
    double* ucol = out.u.data() + static_cast<std::size_t>(j) * m;
    const double* bcol = jr.b.data() + static_cast<std::size_t>(src) * m;
    if (s > zero_tol) {
      out.sigma[static_cast<std::size_t>(j)] = s;
      for (int i = 0; i < m; ++i) ucol[i] = bcol[i] / s;
    } else {
      out.sigma[static_cast<std::size_t>(j)] = 0.0;
      orthonormal_completion(out.u, m, j);
    }
    const double* vcol = jr.v.data() + static_cast<std::size_t>(src) * n;
    for (int i = 0; i < n; ++i) out.vt[static_cast<std::size_t>(j) * n + i] = vcol[i];
  }
  return out;
}

// Deterministic sign convention: first nonzero entry of each U column is
// made non-negative (the matching Vt row flips with it).
inline void apply_sign_convention(TruncatedF64& t, int m, int n, int r) {
  for (int j = 0; j < r; ++j) {
    double* ucol = t.u.data() + static_cast<std::size_t>(j) * m;
    double lead = 0.0;
    for (int i = 0; i < m; ++i) {
      if (ucol[i] != 0.0) {
        lead = ucol[i];
        break;
      }
    }
    if (lead < 0.0) {
      for (int i = 0; i < m; ++i) ucol[i] = -ucol[i];
      double* vrow = t.vt.data() + static_cast<std::size_t>(j) * n;
      for (int i = 0; i < n; ++i) vrow[i] = -vrow[i];
    }
  }
}

inline SvdTruncation pack_truncation(const TruncatedF64& t, int m, int n, int r) {
  SvdTruncation out;
  out.u = DenseMatrix(m, r);
  out.vt = DenseMatrix(r, n);
  out.singular_values.resize(static_cast<std::size_t>(r));
  for (int j = 0; j < r; ++j) {
    out.singular_values[static_cast<std::size_t>(j)] = static_cast<float>(t.sigma[static_cast<std::size_t>(j)]);
    for (int i = 0; i < m; ++i) out.u.at(i, j) = static_cast<float>(t.u[static_cast<std::size_t>(j) * m + i]);
    for (int i = 0; i < n; ++i) out.vt.at(j, i) = static_cast<float>(t.vt[static_cast<std::size_t>(j) * n + i]);
  }
  return out;
}

inline void check_svd_args(const DenseMatrix& a, int r) {
  if (r < 0 || r > std::min(a.rows, a.cols))
    throw std::invalid_argument("truncated_svd: rank " + std::to_string(r) +
                                " out of range for " + std::to_string(a.rows) + "x" +
                                std::to_string(a.cols));
  if (!all_finite(a)) throw std::invalid_argument("truncated_svd: non-finite entries");
}

}  // namespace detail

/// Best rank-<=r Frobenius approximation via one-sided Jacobi in f64.
/// Wide inputs are handled by factoring the transpose and swapping roles.
inline SvdTruncation truncated_svd(const DenseMatrix& a, int r) {
  detail::check_svd_args(a, r);
  const int m = a.rows, n = a.cols;
  if (r == 0) {
    SvdTruncation empty;
    empty.u = DenseMatrix(m, 0);
    empty.vt = DenseMatrix(0, n);
    return empty;
  }

  const bool wide = m < n;
  const int wm = wide ? n : m;  // working matrix is wm x wn with wm >= wn
  const int wn = wide ? m : n;
  std::vector<double> work(static_cast<std::size_t>(wm) * wn);
  for (int i = 0; i < m; ++i)
    for (int j = 0; j < n; ++j) {
      const double v = static_cast<double>(a.at(i, j));
      if (wide)
        work[static_cast<std::size_t>(i) * wm + j] = v;  // column i of A^T
      else
        work[static_cast<std::size_t>(j) * wm + i] = v;  // column j of A
    }

  detail::TruncatedF64 t = detail::svd_tall_truncated(work, wm, wn, r);

  if (wide) {
    // A^T = U' S V'^T  =>  A = V' S U'^T: swap factors
    detail::TruncatedF64 sw;
    sw.sigma = t.sigma;
    sw.u.assign(static_cast<std::size_t>(m) * r, 0.0);   // V' is wn x r = m x r
    sw.vt.assign(static_cast<std::size_t>(r) * n, 0.0);  // U'^T is r x wm = r x n
    for (int j = 0; j < r; ++j) {
      for (int i = 0; i < m; ++i)
        sw.u[static_cast<std::size_t>(j) * m + i] = t.vt[static_cast<std::size_t>(j) * m + i];
      for (int i = 0; i < n; ++i)
        sw.vt[static_cast<std::size_t>(j) * n + i] = t.u[static_cast<std::size_t>(j) * wm + i];
    }
    t = std::move(sw);
  }

  detail::apply_sign_convention(t, m, n, r);
  return detail::pack_truncation(t, m, n, r);
}

namespace detail {

// Modified Gram-Schmidt on the columns of y (m x l, col-major, f64).
inline void orthonormalize_columns(std::vector<double>& y, int m, int l) {
  for (int j = 0; j < l; ++j) {
    double* cj = y.data() + static_cast<std::size_t>(j) * m;
    for (int k = 0; k < j; ++k) {
      const double* ck = y.data() + static_cast<std::size_t>(k) * m;
      double dot = 0.0;
      for (int i = 0; i < m; ++i) dot += cj[i] * ck[i];
      for (int i = 0; i < m; ++i) cj[i] -= dot * ck[i];
    }
    double nrm = 0.0;
    for (int i = 0; i < m; ++i) nrm += cj[i] * cj[i];
    nrm = std::sqrt(nrm);
    if (nrm > 1e-300) {
      for (int i = 0; i < m; ++i) cj[i] /= nrm;
    } else {
      orthonormal_completion(y, m, j);
    }
  }
}

}  // namespace detail

/// Randomized range-finder SVD: Gaussian sketch with oversampling 10 and two
/// power iterations, then an exact small SVD on the projected matrix.
/// Approximate by construction; intended for matrices where the exact path
/// is too slow.
inline SvdTruncation truncated_svd_randomized(const DenseMatrix& a, int r, std::uint64_t seed) {
  detail::check_svd_args(a, r);
  const int m = a.rows, n = a.cols;
  if (r == 0) return truncated_svd(a, 0);

  const int l = std::min(std::min(m, n), r + 10);
  Rng rng(seed);
  std::vector<double> omega(static_cast<std::size_t>(n) * l);
  for (double& v : omega) v = rng.normal();

  auto mul_a = [&](const std::vector<double>& x, int cols) {
    // returns A * X, X is n x cols col-major
    std::vector<double> y(static_cast<std::size_t>(m) * cols, 0.0);
    for (int c = 0; c < cols; ++c) {
      const double* xc = x.data() + static_cast<std::size_t>(c) * n;
      double* yc = y.data() + static_cast<std::size_t>(c) * m;
      for (int i = 0; i < m; ++i) {
        const float* arow = a.data.data() + static_cast<std::size_t>(i) * n;
        double acc = 0.0;
        for (int j = 0; j < n; ++j) acc += static_cast<double>(arow[j]) * xc[j];
        yc[i] = acc;
      }
    }
    return y;
  };
  auto mul_at = [&](const std::vector<double>& x, int cols) {
    // returns A^T * X, X is m x cols col-major
    std::vector<double> y(static_cast<std::size_t>(n) * cols, 0.0);
    for (int c = 0; c < cols; ++c) {
      const double* xc = x.data() + static_cast<std::size_t>(c) * m;
      double* yc = y.data() + static_cast<std::size_t>(c) * n;
      for (int i = 0; i < m; ++i) {
        const float* arow = a.data.data() + static_cast<std::size_t>(i) * n;
        const double xi = xc[i];
        for (int j = 0; j < n; ++j) yc[j] += static_cast<double>(arow[j]) * xi;
      }
    }
    return y;
  };

  std::vector<double> y = mul_a(omega, l);
  detail::orthonormalize_columns(y, m, l);
  for (int it = 0; it < 2; ++it) {
    std::vector<double> z = mul_at(y, l);
    detail::orthonormalize_columns(z, n, l);
    y = mul_a(z, l);
    detail::orthonormalize_columns(y, m, l);
  }

  // B = Q^T A is l x n; factor its transpose (n x l, tall since l <= n)
  std::vector<double> bt(static_cast<std::size_t>(n) * l, 0.0);  // col c = row c of B
  for (int c = 0; c < l; ++c) {
    const double* qc = y.data() + static_cast<std::size_t>(c) * m;
    for (int j = 0; j < n; ++j) {
      double acc = 0.0;
      for (int i = 0; i < m; ++i) acc += qc[i] * static_cast<double>(a.at(i, j));
      bt[static_cast<std::size_t>(c) * n + j] = acc;
    }
  }
  // B^T = W S Z^T  =>  B = Z S W^T, so A ~ (Q Z) S W^T
  detail::TruncatedF64 bts = detail::svd_tall_truncated(bt, n, l, std::min(r, l));
  const int rr = static_cast<int>(bts.sigma.size());

  detail::TruncatedF64 out;
  out.sigma = bts.sigma;
  out.u.assign(static_cast<std::size_t>(m) * rr, 0.0);
  out.vt.assign(static_cast<std::size_t>(rr) * n, 0.0);
  for (int j = 0; j < rr; ++j) {
    // U col j = Q * (Z col j); Z col j is row j of bts.vt (length l)
    double* ucol = out.u.data() + static_cast<std::size_t>(j) * m;
    for (int c = 0; c < l; ++c) {
      const double zc = bts.vt[static_cast<std::size_t>(j) * l + c];
      const double* qc = y.data() + static_cast<std::size_t>(c) * m;
      for (int i = 0; i < m; ++i) ucol[i] += qc[i] * zc;
    }
    // Vt row j = (W col j)^T
    for (int i = 0; i < n; ++i)
      out.vt[static_cast<std::size_t>(j) * n + i] = bts.u[static_cast<std::size_t>(j) * n + i];
  }
  detail::apply_sign_convention(out, m, n, rr);
  return detail::pack_truncation(out, m, n, rr);
}

/// Materializes U * diag(sigma) * Vt (f64 accumulation, f32 result).
inline DenseMatrix reconstruct(const SvdTruncation& t) {
  const int m = t.u.rows, n = t.vt.cols, r = t.rank();
  DenseMatrix out(m, n);
  std::vector<double> acc(static_cast<std::size_t>(n));
  for (int i = 0; i < m; ++i) {
    std::fill(acc.begin(), acc.end(), 0.0);
    for (int j = 0; j < r; ++j) {
      const double w = static_cast<double>(t.u.at(i, j)) *
                       static_cast<double>(t.singular_values[static_cast<std::size_t>(j)]);
      const float* vrow = t.vt.data.data() + static_cast<std::size_t>(j) * n;
      for (int c = 0; c < n; ++c) acc[static_cast<std::size_t>(c)] += w * static_cast<double>(vrow[c]);
    }
    for (int c = 0; c < n; ++c) out.at(i, c) = static_cast<float>(acc[static_cast<std::size_t>(c)]);
  }
  return out;
}

}  // namespace oats
