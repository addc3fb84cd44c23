// Copyright (c) 2026 The oats authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <chrono>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <vector>

#include "oats/archive_io.hpp"
#include "oats/decompose.hpp"
#include "oats/kernels.hpp"
#include "oats/model_graph.hpp"
#include "oats/plan.hpp"
#include "oats/report.hpp"
#include "oats/scaling.hpp"
#include "oats/sparse_layer.hpp"
#include "oats/tensor.hpp"

namespace oats {

/// One layer of a compressed model: either a sparse+low-rank replacement or
/// an excluded layer carried through verbatim (original tensors kept so the
/// artifact copy is byte-identical).
struct CompressedEntry {
  std::string name;
  bool excluded = false;
  SparseLowRankLayer slr;        // when !excluded
  NamedTensor original_weight;   // when excluded
  NamedTensor original_bias;     // when excluded and the layer has a bias
  bool has_bias = false;
  DenseMatrix dense_w;           // f32 view of an excluded layer, for forwards
  std::vector<float> bias_f32;
};

struct CompressedModel {
  ModelGraph graph;
  CompressionPlan plan;
  CompressionReport report;
  std::vector<CompressedEntry> entries;  // graph order

  const CompressedEntry& entry(const std::string& name) const {
    for (const auto& e : entries)
      if (e.name == name) return e;
    throw std::out_of_range("no compressed entry for layer \"" + name + "\"");
  }
};

namespace detail {

inline DenseMatrix dense_from_tensor(const NamedTensor& t) {
  if (t.shape.size() != 2)
    throw std::invalid_argument("tensor \"" + t.name + "\" is not 2-D");
  DenseMatrix m(static_cast<int>(t.shape[0]), static_cast<int>(t.shape[1]));
  m.data = t.as_f32();
  return m;
}

inline DenseMatrix dense_layer_apply(const DenseMatrix& w, const std::vector<float>& bias,
                                     const DenseMatrix& x) {
  DenseMatrix y(x.rows, w.rows);
  kernels::dense_apply(w.data.data(), x.data.data(), y.data.data(), x.rows, w.rows, w.cols,
                       bias.empty() ? nullptr : bias.data());
  return y;
}

inline void record_input(TensorArchive* rec, const std::string& layer, const DenseMatrix& x) {
  if (!rec) return;
  rec->add(NamedTensor::from_f32(layer + ".input",
                                 {static_cast<std::size_t>(x.rows), static_cast<std::size_t>(x.cols)},
                                 x.data));
}

}  // namespace detail

/// Runs calibration rows through the dense model; optionally records each
/// layer's input as `<layer>.input`.
inline DenseMatrix forward_dense(const ModelGraph& graph, const TensorArchive& weights,
                                 DenseMatrix x, TensorArchive* record_inputs = nullptr) {
  for (const auto& block : graph.blocks) {
    DenseMatrix block_in = block.residual ? x : DenseMatrix();
    for (const auto& l : block.layers) {
      detail::record_input(record_inputs, l.name, x);
      const DenseMatrix w = detail::dense_from_tensor(weights.at(l.weight));
      std::vector<float> bias;
      if (!l.bias.empty()) bias = weights.at(l.bias).as_f32();
      x = detail::dense_layer_apply(w, bias, x);
      apply_activation_inplace(block.activation, x);
    }
    if (block.residual) x = add(x, block_in);
  }
  return x;
}

/// Same walk through the compressed model.
inline DenseMatrix forward_compressed(const CompressedModel& model, DenseMatrix x,
                                      TensorArchive* record_inputs = nullptr) {
  std::size_t idx = 0;
  for (const auto& block : model.graph.blocks) {
    DenseMatrix block_in = block.residual ? x : DenseMatrix();
    for (const auto& l : block.layers) {
      detail::record_input(record_inputs, l.name, x);
      const CompressedEntry& e = model.entries.at(idx++);
      if (e.excluded)
        x = detail::dense_layer_apply(e.dense_w, e.bias_f32, x);
      else
        x = apply_compressed(e.slr, x);
      apply_activation_inplace(block.activation, x);
    }
    if (block.residual) x = add(x, block_in);
  }
  return x;
}

/// Compresses every included layer of the model, propagating the calibration
/// activations through already-compressed layers so each scaling diagonal
/// sees the inputs the deployed model will see. Deterministic for a fixed
/// plan seed.
inline CompressedModel compress_model(const TensorArchive& weights, const ModelGraph& graph,
                                      const TensorArchive& calib, const CompressionPlan& plan,
                                      TensorArchive* record_inputs = nullptr) {
  plan.validate();
  graph.validate(weights);
  const bool need_calib = plan.scaling_mode != ScalingMode::Identity;

  DenseMatrix x;
  if (need_calib) {
    if (!calib.contains("input"))
      throw std::invalid_argument("calibration archive is missing the \"input\" tensor");
    x = detail::dense_from_tensor(calib.at("input"));
    if (x.cols != graph.input_dim())
      throw std::invalid_argument("calibration input has " + std::to_string(x.cols) +
                                  " features, model expects " + std::to_string(graph.input_dim()));
  }

  CompressedModel model;
  model.graph = graph;
  model.plan = plan;
  model.report.mode = plan.kappa == 0.0 ? "wanda-equivalent" : "oats";
  model.report.requested_rho = plan.rho;
  model.report.kappa = plan.kappa;
  model.report.iterations = plan.iterations;

  std::uint64_t layer_index = 0;
  for (const auto& block : graph.blocks) {
    DenseMatrix block_in = (need_calib && block.residual) ? x : DenseMatrix();
    for (const auto& l : block.layers) {
      ++layer_index;
      if (need_calib) detail::record_input(record_inputs, l.name, x);

      CompressedEntry entry;
      entry.name = l.name;
      LayerReport lr;
      lr.name = l.name;
      lr.d_out = l.d_out;
      lr.d_in = l.d_in;

      const NamedTensor& wt = weights.at(l.weight);
      std::vector<float> bias;
      if (!l.bias.empty()) bias = weights.at(l.bias).as_f32();

      if (is_excluded(l.name, plan.exclude)) {
        entry.excluded = true;
        entry.original_weight = wt;
        entry.dense_w = detail::dense_from_tensor(wt);
        entry.bias_f32 = bias;
        if (!l.bias.empty()) {
          entry.original_bias = weights.at(l.bias);
          entry.has_bias = true;
        }
        lr.excluded = true;
        if (need_calib) {
          x = detail::dense_layer_apply(entry.dense_w, bias, x);
          apply_activation_inplace(block.activation, x);
        }
      } else {
        const auto t0 = std::chrono::steady_clock::now();
        const DenseMatrix w32 = detail::dense_from_tensor(wt);

        ScalingDiag diag;
        if (plan.scaling_mode == ScalingMode::Identity) {
          diag = ScalingDiag::identity(l.d_in);
        } else {
          ActivationMoments moments(l.d_in, plan.scaling_mode == ScalingMode::RobustMedian,
                                    derive_seed(plan.seed, l.name));
          moments.accumulate(x);
          diag = build_diag(moments, plan.scaling_mode);
        }

        const double rho_l = plan.rho_for(l.name);
        LayerBudget budget;
        switch (plan.pattern_kind) {
          case PatternKind::LayerWise:
            budget = solve_budget(l.d_out, l.d_in, rho_l, plan.kappa, Granularity::LayerWise);
            break;
          case PatternKind::RowWise:
            budget = solve_budget(l.d_out, l.d_in, rho_l, plan.kappa, Granularity::RowWise);
            break;
          case PatternKind::NofM:
            budget = budget_for_nm(l.d_out, l.d_in, plan.nm_n, plan.nm_m, plan.kappa);
            break;
        }
        if (budget.r > std::min(l.d_out, l.d_in))
          throw std::invalid_argument("layer \"" + l.name + "\": rank budget " +
                                      std::to_string(budget.r) + " infeasible for " +
                                      std::to_string(l.d_out) + "x" + std::to_string(l.d_in));

        DecomposeOptions opts;
        opts.iterations = plan.iterations;
        opts.order = plan.order;
        opts.sparse_step = plan.sparse_step;
        opts.svd_mode = plan.svd_mode;
        opts.seed = derive_seed(plan.seed, l.name, layer_index);
        opts.rel_tol = plan.tolerance;

        const DenseMatrix wd = scale_weights(w32, diag);
        DecompositionResult dec = alternating_thresholding(wd, budget, opts, &diag);
        entry.slr = make_sparse_low_rank_layer(l.name, dec.s, dec.l, diag, bias);

        lr.r = dec.l.rank();
        lr.k = budget.k;
        lr.nnz = entry.slr.nnz();
        lr.requested_rho = plan.pattern_kind == PatternKind::NofM
                               ? compression_rate(budget, l.d_out, l.d_in)
                               : rho_l;
        lr.achieved_rho = compression_rate(budget, l.d_out, l.d_in);
        lr.final_objective = dec.objective_trace.back();
        lr.iterations = dec.iterations_run;

        model.report.total_params += static_cast<long>(l.d_out) * l.d_in;
        model.report.retained_params += lr.nnz + lr.r * (static_cast<long>(l.d_out) + l.d_in);

        if (need_calib) {
          x = apply_compressed(entry.slr, x);
          apply_activation_inplace(block.activation, x);
        }
        lr.wall_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
      }
      model.entries.push_back(std::move(entry));
      model.report.layers.push_back(std::move(lr));
    }
    if (need_calib && block.residual) x = add(x, block_in);
  }

  if (model.report.total_params > 0)
    model.report.achieved_rho =
        1.0 - static_cast<double>(model.report.retained_params) / model.report.total_params;
  return model;
}

namespace detail {

// CSR index tensors are stored in f32, which is exact below 2^24.
constexpr long kF32ExactLimit = 1L << 24;

inline NamedTensor int_tensor_f32(const std::string& name, std::vector<std::size_t> shape,
                                  const auto& ints) {
  std::vector<float> vals(ints.size());
  for (std::size_t i = 0; i < ints.size(); ++i) {
    const long v = static_cast<long>(ints[i]);
    if (v < 0 || v >= kF32ExactLimit)
      throw std::runtime_error("artifact: integer " + std::to_string(v) + " in \"" + name +
                               "\" exceeds the f32-exact range");
    vals[i] = static_cast<float>(v);
  }
  return NamedTensor::from_f32(name, std::move(shape), vals);
}

inline std::vector<long> ints_from_f32(const NamedTensor& t) {
  const std::vector<float> vals = t.as_f32();
  std::vector<long> out(vals.size());
  for (std::size_t i = 0; i < vals.size(); ++i) out[i] = std::lround(vals[i]);
  return out;
}

}  // namespace detail

/// Serializes a compressed model into a tensor archive. Per included layer:
/// `<name>.csr.indptr|indices|values`, `<name>.lowrank.U`, `<name>.lowrank.SVt`
/// and optionally `<name>.bias`; excluded layers keep their original tensors.
/// The plan, report and graph ride along in `__metadata__` as JSON strings.
inline TensorArchive to_artifact(const CompressedModel& model) {
  TensorArchive a;
  a.metadata["format"] = "oats.compressed.v1";
  a.metadata["plan"] = to_json(model.plan).dump();
  // wall times vary run to run; the embedded report drops them so artifacts
  // stay bitwise reproducible (report.json keeps the timings)
  CompressionReport embedded = model.report;
  for (auto& l : embedded.layers) l.wall_ms = 0.0;
  a.metadata["report"] = to_json(embedded).dump();
  a.metadata["graph"] = to_json(model.graph).dump();

  for (const auto& e : model.entries) {
    if (e.excluded) {
      a.add(e.original_weight);
      if (e.has_bias) a.add(e.original_bias);
      continue;
    }
    const SparseLowRankLayer& s = e.slr;
    const std::size_t nnz = s.sparse.values.size();
    a.add(detail::int_tensor_f32(e.name + ".csr.indptr",
                                 {static_cast<std::size_t>(s.d_out) + 1}, s.sparse.indptr));
    a.add(detail::int_tensor_f32(e.name + ".csr.indices", {nnz}, s.sparse.indices));
    a.add(NamedTensor::from_f32(e.name + ".csr.values", {nnz}, s.sparse.values));
    a.add(NamedTensor::from_f32(e.name + ".lowrank.U",
                                {static_cast<std::size_t>(s.d_out), static_cast<std::size_t>(s.u.cols)},
                                s.u.data));
    a.add(NamedTensor::from_f32(e.name + ".lowrank.SVt",
                                {static_cast<std::size_t>(s.svt.rows), static_cast<std::size_t>(s.d_in)},
                                s.svt.data));
    if (!s.bias.empty())
      a.add(NamedTensor::from_f32(e.name + ".bias", {static_cast<std::size_t>(s.d_out)}, s.bias));
  }
  return a;
}

inline CompressedModel from_artifact(const TensorArchive& a) {
  const auto meta = [&](const char* key) -> const std::string& {
    auto it = a.metadata.find(key);
    if (it == a.metadata.end())
      throw std::runtime_error(std::string("artifact metadata missing \"") + key + "\"");
    return it->second;
  };
  CompressedModel model;
  model.plan = plan_from_json(nlohmann::json::parse(meta("plan")));
  model.report = report_from_json(nlohmann::json::parse(meta("report")));
  model.graph = graph_from_json(nlohmann::json::parse(meta("graph")));

  std::unordered_map<std::string, const LayerReport*> by_name;
  for (const auto& lr : model.report.layers) by_name[lr.name] = &lr;

  for (const LayerSpec* l : model.graph.all_layers()) {
    auto it = by_name.find(l->name);
    if (it == by_name.end())
      throw std::runtime_error("artifact report has no entry for layer \"" + l->name + "\"");
    CompressedEntry e;
    e.name = l->name;
    if (it->second->excluded) {
      e.excluded = true;
      e.original_weight = a.at(l->weight);
      e.dense_w = detail::dense_from_tensor(e.original_weight);
      if (!l->bias.empty()) {
        e.original_bias = a.at(l->bias);
        e.has_bias = true;
        e.bias_f32 = e.original_bias.as_f32();
      }
    } else {
      SparseLowRankLayer s;
      s.name = l->name;
      s.d_out = l->d_out;
      s.d_in = l->d_in;
      const std::vector<long> indptr = detail::ints_from_f32(a.at(l->name + ".csr.indptr"));
      s.sparse.rows = l->d_out;
      s.sparse.cols = l->d_in;
      s.sparse.indptr.assign(indptr.begin(), indptr.end());
      for (long v : detail::ints_from_f32(a.at(l->name + ".csr.indices")))
        s.sparse.indices.push_back(static_cast<std::int32_t>(v));
      s.sparse.values = a.at(l->name + ".csr.values").as_f32();
      const NamedTensor& ut = a.at(l->name + ".lowrank.U");
      s.u = detail::dense_from_tensor(ut);
      s.svt = detail::dense_from_tensor(a.at(l->name + ".lowrank.SVt"));
      if (a.contains(l->name + ".bias")) s.bias = a.at(l->name + ".bias").as_f32();
      s.validate();
      e.slr = std::move(s);
    }
    model.entries.push_back(std::move(e));
  }
  return model;
}

inline void write_compressed(const CompressedModel& model, const std::filesystem::path& path) {
  write_archive(to_artifact(model), path);
}

inline CompressedModel read_compressed(const std::filesystem::path& path) {
  return from_artifact(read_archive(path));
}

/// Per-layer relative output error on calibration inputs, plus the
/// end-to-end output error of the compressed forward pass.
struct ReconEval {
  struct LayerErr {
    std::string name;
    double rel_err = 0.0;
  };
  std::vector<LayerErr> layers;
  double aggregate = 0.0;
};

inline ReconEval eval_reconstruction(const TensorArchive& weights, const CompressedModel& model,
                                     const DenseMatrix& calib_x) {
  ReconEval out;
  TensorArchive recorded;
  const DenseMatrix y_dense = forward_dense(model.graph, weights, calib_x, &recorded);

  for (const LayerSpec* l : model.graph.all_layers()) {
    const CompressedEntry& e = model.entry(l->name);
    if (e.excluded) continue;
    const DenseMatrix x = detail::dense_from_tensor(recorded.at(l->name + ".input"));
    const DenseMatrix w = detail::dense_from_tensor(weights.at(l->weight));
    DenseMatrix ref(x.rows, l->d_out);
    kernels::dense_apply(w.data.data(), x.data.data(), ref.data.data(), x.rows, l->d_out, l->d_in);
    DenseMatrix got(x.rows, l->d_out);
    kernels::sparse_lowrank_apply(e.slr.sparse, e.slr.u.data.data(), e.slr.svt.data.data(),
                                  e.slr.rank(), x.data.data(), got.data.data(), x.rows);
    const double denom = std::sqrt(frob_norm_sq(ref));
    const double err = std::sqrt(frob_norm_sq(subtract(ref, got)));
    out.layers.push_back({l->name, denom > 0.0 ? err / denom : err});
  }

  const DenseMatrix y_comp = forward_compressed(model, calib_x);
  const double denom = std::sqrt(frob_norm_sq(y_dense));
  const double err = std::sqrt(frob_norm_sq(subtract(y_dense, y_comp)));
  out.aggregate = denom > 0.0 ? err / denom : err;
  return out;
}

}  // namespace oats
