// Copyright (c) 2026 The oats authors
// SPDX-License-Identifier: Apache-2.0

#include <catch2/catch_amalgamated.hpp>

#include "oats/decompose.hpp"

#include "helpers.hpp"
#include "oracles.hpp"

using namespace oats;

TEST_CASE("budget split for a square matrix") {
  // floor(0.25 * 0.5 * 4096/128) = 4, floor(0.75 * 0.5 * 4096) = 1536
  const LayerBudget b = solve_budget(64, 64, 0.5, 0.25);
  const auto oracle = oracles::exact_budget(64, 64, 5, 10, 25, 100);
  CHECK(b.r == oracle.r);
  CHECK(b.k == oracle.k);
  CHECK(b.r == 4);
  CHECK(b.k == 1536);
}

TEST_CASE("budget split for a rectangular matrix") {
  const LayerBudget b = solve_budget(128, 64, 0.6, 0.3);
  const auto oracle = oracles::exact_budget(128, 64, 6, 10, 3, 10);
  CHECK(b.r == oracle.r);
  CHECK(b.k == oracle.k);
  CHECK(b.r == 5);
  CHECK(b.k == 2293);
}

TEST_CASE("zero rank ratio reduces to pure pruning") {
  const LayerBudget b = solve_budget(48, 32, 0.5, 0.0);
  CHECK(b.r == 0);
  CHECK(b.k == (48L * 32) / 2);
}

TEST_CASE("budgets match exact integer arithmetic on dyadic rates") {
  Rng rng(2024);
  for (int t = 0; t < 400; ++t) {
    const int d_out = static_cast<int>(rng.uniform_int(2, 300));
    const int d_in = static_cast<int>(rng.uniform_int(2, 300));
    const long rn = rng.uniform_int(1, 255);
    const long kn = rng.uniform_int(0, 255);
    const LayerBudget b = solve_budget(d_out, d_in, static_cast<double>(rn) / 256.0,
                                       static_cast<double>(kn) / 256.0);
    const auto oracle = oracles::exact_budget(d_out, d_in, rn, 256, kn, 256);
    CHECK(b.r == oracle.r);
    CHECK(b.k == oracle.k);
  }
}

TEST_CASE("n:m budgets") {
  SECTION("pure 2:8 compresses by exactly 75%") {
    const LayerBudget b = budget_for_nm(64, 64, 2, 8, 0.0);
    CHECK(b.r == 0);
    CHECK_THAT(compression_rate(b, 64, 64), Catch::Matchers::WithinAbs(0.75, 1e-12));
  }
  SECTION("2:8 with a quarter of retained parameters low-rank") {
    const LayerBudget b = budget_for_nm(256, 256, 2, 8, 0.25);
    CHECK(b.r == 10);  // floor((1/3) * 0.25 * 65536/512)
    CHECK(b.k == 16384);
    CHECK_THAT(compression_rate(b, 256, 256),
               Catch::Matchers::WithinAbs(1.0 - (16384.0 + 5120.0) / 65536.0, 1e-12));
  }
  SECTION("pure 2:4 compresses by half") {
    const LayerBudget b = budget_for_nm(32, 32, 2, 4, 0.0);
    CHECK_THAT(compression_rate(b, 32, 32), Catch::Matchers::WithinAbs(0.5, 1e-12));
  }
  SECTION("divisibility is enforced") {
    CHECK_THROWS_AS(budget_for_nm(32, 30, 2, 4, 0.0), std::invalid_argument);
  }
}

TEST_CASE("parameter ranges are validated") {
  CHECK_THROWS_AS(solve_budget(8, 8, 0.0, 0.2), std::invalid_argument);
  CHECK_THROWS_AS(solve_budget(8, 8, 1.0, 0.2), std::invalid_argument);
  CHECK_THROWS_AS(solve_budget(8, 8, 0.5, 1.0), std::invalid_argument);
  CHECK_THROWS_AS(solve_budget(8, 8, 0.5, -0.1), std::invalid_argument);
}

namespace {

DecomposeOptions opts_n(int n) {
  DecomposeOptions o;
  o.iterations = n;
  return o;
}

}  // namespace

TEST_CASE("an exactly low-rank input is a fixed point") {
  DenseMatrix wd(12, 10);
  Rng rng(5);
  for (int t = 0; t < 3; ++t) {
    std::vector<double> u(12), v(10);
    for (auto& x : u) x = rng.normal();
    for (auto& x : v) x = rng.normal();
    for (int i = 0; i < 12; ++i)
      for (int j = 0; j < 10; ++j)
        wd.at(i, j) += static_cast<float>(u[static_cast<std::size_t>(i)] * v[static_cast<std::size_t>(j)]);
  }
  LayerBudget budget{3, 20, LayerWise{20}};
  const DecompositionResult res = alternating_thresholding(wd, budget, opts_n(3));
  const double scale = frob_norm_sq(wd);
  CHECK(res.objective_trace[0] <= 1e-8 * scale);
  CHECK(res.objective_trace.back() <= 1e-8 * scale);
  CHECK(frob_norm_sq(res.s.values) <= 1e-8 * scale);
}

TEST_CASE("an input within the sparsity budget is absorbed by one threshold step") {
  DenseMatrix wd(6, 6);
  wd.at(1, 2) = 4.0f;
  wd.at(3, 0) = -2.0f;
  wd.at(5, 5) = 1.0f;
  LayerBudget budget{0, 5, LayerWise{5}};
  const DecompositionResult res = alternating_thresholding(wd, budget, opts_n(2));
  CHECK(res.l.rank() == 0);
  CHECK(res.s.values.data == wd.data);
  CHECK(res.objective_trace.back() == 0.0);
}

TEST_CASE("planted sparse plus low-rank structure is recovered") {
  for (std::uint64_t seed : {11ULL, 12ULL, 13ULL}) {
    const DenseMatrix wd = helpers::planted_matrix(16, 16, 2, 8, seed, 5.0, 0.0);
    LayerBudget budget{2, 8, LayerWise{8}};
    const DecompositionResult res = alternating_thresholding(wd, budget, opts_n(80));
    const double bound = 1e-6 * frob_norm_sq(wd);
    CHECK(res.objective_trace.back() <= bound);

    // the scalar reference loop converges to the same basin
    const auto ref = oracles::reference_alternating(wd, 2, 8, 80);
    CHECK(res.objective_trace.back() <= ref.trace.back() + 1e-9 * frob_norm_sq(wd));
  }
}

TEST_CASE("zero rank budget reduces bitwise to a single hard threshold") {
  const DenseMatrix wd = helpers::random_matrix(14, 10, 321);
  const SparsityPattern patterns[] = {LayerWise{40}, RowWise{40}, NofM{2, 5}};
  for (const auto& p : patterns) {
    LayerBudget budget{0, 40, p};
    const DecompositionResult res = alternating_thresholding(wd, budget, opts_n(7));
    const MaskedMatrix want = hard_threshold(wd, p);
    CHECK(res.s.values.data == want.values.data);
    CHECK(res.s.mask == want.mask);
  }
}

TEST_CASE("objective trace is non-increasing for all patterns and both orders") {
  Rng rng(888);
  for (int t = 0; t < 40; ++t) {
    const int m = static_cast<int>(rng.uniform_int(4, 24));
    const int n = static_cast<int>(rng.uniform_int(4, 24));
    const DenseMatrix wd = helpers::random_matrix(m, n, rng.next_u64());
    const int r = static_cast<int>(rng.uniform_int(0, std::min(m, n) / 2));
    const long k = rng.uniform_int(0, static_cast<long>(m) * n / 2);

    SparsityPattern pattern;
    switch (t % 3) {
      case 0: pattern = LayerWise{k}; break;
      case 1: pattern = RowWise{k}; break;
      default: pattern = NofM{1, 2}; break;
    }
    if (std::holds_alternative<NofM>(pattern) && n % 2 != 0) pattern = LayerWise{k};

    DecomposeOptions opts = opts_n(6);
    opts.order = t % 2 == 0 ? ThresholdOrder::SvdFirst : ThresholdOrder::HardThresholdFirst;
    const DecompositionResult res =
        alternating_thresholding(wd, LayerBudget{r, k, pattern}, opts);
    for (std::size_t i = 1; i < res.objective_trace.size(); ++i)
      CHECK(res.objective_trace[i] <= res.objective_trace[i - 1] + 1e-7 * res.objective_trace[0]);
  }
}

TEST_CASE("constraints hold at every iteration") {
  const DenseMatrix wd = helpers::random_matrix(12, 12, 909);
  LayerBudget budget{3, 30, RowWise{30}};
  DecomposeOptions opts = opts_n(5);
  int called = 0;
  opts.on_iteration = [&](int iter, const MaskedMatrix& s, const SvdTruncation& l) {
    ++called;
    CHECK(iter == called);
    CHECK(l.rank() <= 3);
    CHECK(s.nnz() == pattern_budget(budget.pattern, 12, 12));
  };
  alternating_thresholding(wd, budget, opts);
  CHECK(called == 5);
}

TEST_CASE("one extra iteration from a converged state barely moves the objective") {
  const DenseMatrix wd = helpers::planted_matrix(16, 16, 2, 8, 77, 5.0, 0.0);
  LayerBudget budget{2, 8, LayerWise{8}};
  const DecompositionResult a = alternating_thresholding(wd, budget, opts_n(80));
  const DecompositionResult b = alternating_thresholding(wd, budget, opts_n(81));
  const double rel = std::fabs(a.objective_trace.back() - b.objective_trace.back()) /
                     std::max(frob_norm_sq(wd), 1e-300);
  CHECK(rel < 1e-9);
}

TEST_CASE("both thresholding orders satisfy the same contracts") {
  const DenseMatrix wd = helpers::random_matrix(10, 10, 17);
  LayerBudget budget{2, 25, LayerWise{25}};
  for (ThresholdOrder order : {ThresholdOrder::SvdFirst, ThresholdOrder::HardThresholdFirst}) {
    DecomposeOptions opts = opts_n(10);
    opts.order = order;
    const DecompositionResult res = alternating_thresholding(wd, budget, opts);
    CHECK(res.l.rank() <= 2);
    CHECK(res.s.nnz() == 25);
    for (std::size_t i = 1; i < res.objective_trace.size(); ++i)
      CHECK(res.objective_trace[i] <= res.objective_trace[i - 1] + 1e-7 * res.objective_trace[0]);
  }
}

TEST_CASE("unscaled sparse step selects on unscaled magnitudes but keeps scaled values") {
  const int n = 8;
  const DenseMatrix w = helpers::random_matrix(6, n, 404);
  ScalingDiag diag;
  diag.d.resize(n);
  diag.d_inv.resize(n);
  Rng rng(405);
  for (int j = 0; j < n; ++j) {
    diag.d[static_cast<std::size_t>(j)] = static_cast<float>(0.5 + 4.0 * rng.uniform());
    diag.d_inv[static_cast<std::size_t>(j)] = 1.0f / diag.d[static_cast<std::size_t>(j)];
  }
  const DenseMatrix wd = scale_weights(w, diag);

  LayerBudget budget{0, 12, LayerWise{12}};
  DecomposeOptions opts = opts_n(1);
  opts.sparse_step = SparseStepScaling::Unscaled;
  const DecompositionResult res = alternating_thresholding(wd, budget, opts, &diag);

  // support = top-k of the *unscaled* weights; values stay in scaled coordinates
  const MaskedMatrix plain = hard_threshold(unscale(wd, diag), LayerWise{12});
  CHECK(res.s.mask == plain.mask);
  for (std::size_t i = 0; i < wd.size(); ++i)
    CHECK(res.s.values.data[i] == (res.s.mask[i] ? wd.data[i] : 0.0f));

  DecomposeOptions missing = opts;
  CHECK_THROWS_AS(alternating_thresholding(wd, budget, missing, nullptr), std::invalid_argument);
}

TEST_CASE("early stop honors the relative tolerance") {
  const DenseMatrix wd = helpers::planted_matrix(16, 16, 2, 8, 3, 5.0, 0.0);
  LayerBudget budget{2, 8, LayerWise{8}};
  DecomposeOptions opts = opts_n(80);
  opts.rel_tol = 1e-6;
  const DecompositionResult res = alternating_thresholding(wd, budget, opts);
  CHECK(res.iterations_run < 80);

  DecomposeOptions no_stop = opts_n(80);
  const DecompositionResult full = alternating_thresholding(wd, budget, no_stop);
  CHECK(full.iterations_run == 80);
}

TEST_CASE("non-finite inputs and infeasible budgets are rejected") {
  DenseMatrix bad(4, 4);
  bad.at(0, 0) = std::numeric_limits<float>::quiet_NaN();
  CHECK_THROWS_AS(alternating_thresholding(bad, LayerBudget{1, 4, LayerWise{4}}, opts_n(1)),
                  std::invalid_argument);
  const DenseMatrix ok = helpers::random_matrix(4, 4, 1);
  CHECK_THROWS_AS(alternating_thresholding(ok, LayerBudget{5, 4, LayerWise{4}}, opts_n(1)),
                  std::invalid_argument);
}
