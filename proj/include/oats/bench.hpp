// Copyright (c) 2026 The oats authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <functional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include <nlohmann/json.hpp>

#include "oats/decompose.hpp"
#include "oats/kernels.hpp"
#include "oats/matrix.hpp"
#include "oats/rng.hpp"
#include "oats/threshold.hpp"

namespace oats {

struct BenchConfig {
  std::vector<std::pair<int, int>> shapes = {{256, 256}, {1024, 1024}};
  int batch = 8;
  std::vector<double> rhos = {0.3, 0.4, 0.5};
  std::vector<double> kappas = {0.25};
  int repetitions = 5;
  int warmup = 2;
  std::uint64_t seed = 7;
  int threads = 0;  // > 0 adds row-parallel records with this worker count

  void validate() const {
    if (repetitions < 3) throw std::invalid_argument("bench: repetitions must be >= 3");
    if (warmup < 0) throw std::invalid_argument("bench: warmup must be >= 0");
    if (batch < 1) throw std::invalid_argument("bench: batch must be >= 1");
    if (shapes.empty()) throw std::invalid_argument("bench: no shapes configured");
    for (auto [o, i] : shapes)
      if (o <= 0 || i <= 0) throw std::invalid_argument("bench: non-positive shape");
    for (double r : rhos)
      if (!(r > 0.0 && r < 1.0)) throw std::invalid_argument("bench: rho must be in (0,1)");
    for (double k : kappas)
      if (!(k >= 0.0 && k < 1.0)) throw std::invalid_argument("bench: kappa must be in [0,1)");
  }
};

inline BenchConfig bench_config_from_json(const nlohmann::json& j) {
  BenchConfig c;
  if (j.contains("shapes")) {
    c.shapes.clear();
    for (const auto& s : j["shapes"]) c.shapes.emplace_back(s.at(0).get<int>(), s.at(1).get<int>());
  }
  if (j.contains("batch")) c.batch = j["batch"].get<int>();
  if (j.contains("rhos")) c.rhos = j["rhos"].get<std::vector<double>>();
  if (j.contains("kappas")) c.kappas = j["kappas"].get<std::vector<double>>();
  if (j.contains("repetitions")) c.repetitions = j["repetitions"].get<int>();
  if (j.contains("warmup")) c.warmup = j["warmup"].get<int>();
  if (j.contains("seed")) c.seed = j["seed"].get<std::uint64_t>();
  if (j.contains("threads")) c.threads = j["threads"].get<int>();
  c.validate();
  return c;
}

struct BenchRecord {
  std::string kernel;
  int d_out = 0, d_in = 0, batch = 0;
  double rho = 0.0, kappa = 0.0;
  long nnz = 0, r = 0;
  long long flops = 0;
  double ns_median = 0.0;
  double gflops = 0.0;
  double speedup_vs_dense = 1.0;
};

enum class KernelKind { Dense, Csr, NofM, SparseLowRank };

/// Exact multiply-add counts (2 flops per MAC):
///   dense            2 * d_out * d_in * batch
///   csr / n:m        2 * nnz * batch
///   sparse+low-rank  2 * (nnz + r * (d_out + d_in)) * batch
inline long long flop_count(KernelKind kind, int d_out, int d_in, int batch, long nnz, long r) {
  switch (kind) {
    case KernelKind::Dense:
      return 2LL * d_out * d_in * batch;
    case KernelKind::Csr:
    case KernelKind::NofM:
      return 2LL * nnz * batch;
    case KernelKind::SparseLowRank:
      return 2LL * (nnz + r * (static_cast<long long>(d_out) + d_in)) * batch;
  }
  return 0;
}

struct MachineInfo {
  std::string cpu = "unknown";
  unsigned hw_threads = 0;
};

inline MachineInfo machine_info() {
  MachineInfo mi;
  mi.hw_threads = std::thread::hardware_concurrency();
  std::ifstream cpuinfo("/proc/cpuinfo");
  std::string line;
  while (std::getline(cpuinfo, line)) {
    if (line.rfind("model name", 0) == 0) {
      const auto pos = line.find(':');
      if (pos != std::string::npos) {
        mi.cpu = line.substr(pos + 1);
        while (!mi.cpu.empty() && mi.cpu.front() == ' ') mi.cpu.erase(mi.cpu.begin());
      }
      break;
    }
  }
  return mi;
}

namespace detail {

/// Median ns per call. Short kernels are looped inside the timed region so
/// each sample spans at least ~200us.
inline double time_median_ns(const std::function<void()>& fn, int warmup, int repetitions) {
  using clock = std::chrono::steady_clock;
  for (int i = 0; i < warmup; ++i) fn();

  int inner = 1;
  for (;;) {
    const auto t0 = clock::now();
    for (int i = 0; i < inner; ++i) fn();
    const double ns = std::chrono::duration<double, std::nano>(clock::now() - t0).count();
    if (ns >= 2e5 || inner >= (1 << 20)) break;
    inner *= 4;
  }

  std::vector<double> samples(static_cast<std::size_t>(repetitions));
  for (int s = 0; s < repetitions; ++s) {
    const auto t0 = clock::now();
    for (int i = 0; i < inner; ++i) fn();
    samples[static_cast<std::size_t>(s)] =
        std::chrono::duration<double, std::nano>(clock::now() - t0).count() / inner;
  }
  std::sort(samples.begin(), samples.end());
  return samples[samples.size() / 2];
}

inline double rel_l2_err(const std::vector<float>& got, const std::vector<float>& want) {
  double num = 0.0, den = 0.0;
  for (std::size_t i = 0; i < got.size(); ++i) {
    const double d = static_cast<double>(got[i]) - static_cast<double>(want[i]);
    num += d * d;
    den += static_cast<double>(want[i]) * static_cast<double>(want[i]);
  }
  return den > 0.0 ? std::sqrt(num / den) : std::sqrt(num);
}

}  // namespace detail

/// Correctness-gated micro benchmark: every structured kernel must agree
/// with a dense apply of its materialized weights to 1e-5 relative before
/// any timing is recorded. Wall-clock numbers are reports, not promises.
inline std::vector<BenchRecord> run_bench(const BenchConfig& cfg) {
  cfg.validate();
  std::vector<BenchRecord> records;

  for (auto [d_out, d_in] : cfg.shapes) {
    Rng rng(derive_seed(cfg.seed, "bench", (static_cast<std::uint64_t>(d_out) << 20) ^ static_cast<std::uint64_t>(d_in)));
    DenseMatrix w(d_out, d_in);
    rng.fill_gaussian(w.data);
    DenseMatrix x(cfg.batch, d_in);
    rng.fill_gaussian(x.data);
    std::vector<float> y(static_cast<std::size_t>(cfg.batch) * d_out);
    std::vector<float> y_ref(y.size());

    kernels::dense_apply(w.data.data(), x.data.data(), y_ref.data(), cfg.batch, d_out, d_in);

    BenchRecord dense;
    dense.kernel = "dense";
    dense.d_out = d_out;
    dense.d_in = d_in;
    dense.batch = cfg.batch;
    dense.nnz = static_cast<long>(d_out) * d_in;
    dense.flops = flop_count(KernelKind::Dense, d_out, d_in, cfg.batch, dense.nnz, 0);
    dense.ns_median = detail::time_median_ns(
        [&] { kernels::dense_apply(w.data.data(), x.data.data(), y.data(), cfg.batch, d_out, d_in); },
        cfg.warmup, cfg.repetitions);
    dense.gflops = static_cast<double>(dense.flops) / dense.ns_median;
    dense.speedup_vs_dense = 1.0;
    records.push_back(dense);

    auto push_timed = [&](BenchRecord rec, const std::function<void()>& fn,
                          const DenseMatrix& materialized) {
      std::vector<float> ref(static_cast<std::size_t>(cfg.batch) * d_out);
      kernels::dense_apply(materialized.data.data(), x.data.data(), ref.data(), cfg.batch, d_out,
                           d_in);
      fn();
      const double err = detail::rel_l2_err(y, ref);
      if (err > 1e-5)
        throw std::runtime_error("bench: kernel \"" + rec.kernel +
                                 "\" disagrees with dense oracle (rel err " + std::to_string(err) + ")");
      rec.d_out = d_out;
      rec.d_in = d_in;
      rec.batch = cfg.batch;
      rec.ns_median = detail::time_median_ns(fn, cfg.warmup, cfg.repetitions);
      rec.gflops = static_cast<double>(rec.flops) / rec.ns_median;
      rec.speedup_vs_dense = dense.ns_median / rec.ns_median;
      records.push_back(std::move(rec));
    };

    for (double rho : cfg.rhos) {
      // unstructured pruning comparator: all retained parameters in the csr term
      const long k_all = static_cast<long>(std::floor((1.0 - rho) * static_cast<double>(d_out) * d_in));
      const MaskedMatrix pruned = hard_threshold(w, LayerWise{k_all});
      const kernels::CsrMatrix csr = kernels::csr_from_masked(pruned);
      BenchRecord rec;
      rec.kernel = "csr";
      rec.rho = rho;
      rec.nnz = csr.nnz();
      rec.flops = flop_count(KernelKind::Csr, d_out, d_in, cfg.batch, rec.nnz, 0);
      push_timed(rec, [&] { kernels::csr_apply(csr, x.data.data(), y.data(), cfg.batch); },
                 pruned.values);
      if (cfg.threads > 0) {
        BenchRecord par = rec;
        par.kernel = "csr_par" + std::to_string(cfg.threads);
        push_timed(par,
                   [&] { kernels::csr_apply_parallel(csr, x.data.data(), y.data(), cfg.batch, cfg.threads); },
                   pruned.values);
      }

      for (double kappa : cfg.kappas) {
        if (kappa == 0.0) continue;  // identical to the csr record
        const LayerBudget budget = solve_budget(d_out, d_in, rho, kappa, Granularity::RowWise);
        const MaskedMatrix sparse = hard_threshold(w, budget.pattern);
        const kernels::CsrMatrix scsr = kernels::csr_from_masked(sparse);
        DenseMatrix u(d_out, static_cast<int>(budget.r));
        DenseMatrix svt(static_cast<int>(budget.r), d_in);
        rng.fill_gaussian(u.data, 0.05);
        rng.fill_gaussian(svt.data, 0.05);
        DenseMatrix mat = sparse.values;
        if (budget.r > 0) {
          const DenseMatrix lr = matmul(u, svt);
          for (std::size_t i = 0; i < mat.data.size(); ++i) mat.data[i] += lr.data[i];
        }
        BenchRecord slr;
        slr.kernel = "sparse_lowrank";
        slr.rho = rho;
        slr.kappa = kappa;
        slr.nnz = scsr.nnz();
        slr.r = budget.r;
        slr.flops = flop_count(KernelKind::SparseLowRank, d_out, d_in, cfg.batch, slr.nnz, slr.r);
        push_timed(slr,
                   [&] {
                     kernels::sparse_lowrank_apply(scsr, u.data.data(), svt.data.data(),
                                                   static_cast<int>(budget.r), x.data.data(),
                                                   y.data(), cfg.batch);
                   },
                   mat);
      }
    }

    if (d_in % 4 == 0) {
      const MaskedMatrix nm_masked = hard_threshold(w, NofM{2, 4});
      const kernels::NmPacked packed = kernels::pack_nm(nm_masked, 2, 4);
      BenchRecord nm;
      nm.kernel = "nm_2_4";
      nm.rho = 0.5;
      nm.nnz = packed.nnz();
      nm.flops = flop_count(KernelKind::NofM, d_out, d_in, cfg.batch, nm.nnz, 0);
      push_timed(nm, [&] { kernels::nm_apply(packed, x.data.data(), y.data(), cfg.batch); },
                 nm_masked.values);
    }
  }
  return records;
}

inline constexpr const char* kBenchCsvHeader =
    "kernel,d_out,d_in,batch,rho,kappa,nnz,r,flops,ns_median,gflops,speedup_vs_dense";

inline std::string to_csv(const std::vector<BenchRecord>& records) {
  std::ostringstream out;
  out << kBenchCsvHeader << "\n";
  for (const auto& r : records) {
    out << r.kernel << ',' << r.d_out << ',' << r.d_in << ',' << r.batch << ',' << r.rho << ','
        << r.kappa << ',' << r.nnz << ',' << r.r << ',' << r.flops << ',' << r.ns_median << ','
        << r.gflops << ',' << r.speedup_vs_dense << "\n";
  }
  return out.str();
}

}  // namespace oats
