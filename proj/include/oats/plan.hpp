// Copyright (c) 2026 The oats authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "oats/decompose.hpp"
#include "oats/scaling.hpp"

namespace oats {

enum class PatternKind { LayerWise, RowWise, NofM };

/// Every user-facing knob of a compression run. Plans live in JSON files so
/// runs stay reproducible and diffable.
struct CompressionPlan {
  double rho = 0.5;
  double kappa = 0.25;
  int iterations = 80;
  PatternKind pattern_kind = PatternKind::RowWise;
  int nm_n = 2;
  int nm_m = 4;
  ScalingMode scaling_mode = ScalingMode::SecondMoment;
  ThresholdOrder order = ThresholdOrder::SvdFirst;
  SparseStepScaling sparse_step = SparseStepScaling::Scaled;
  SvdMode svd_mode = SvdMode::Exact;
  std::map<std::string, double> per_layer_rho;
  std::vector<std::string> exclude = {"*embed*", "*head*"};
  std::uint64_t seed = 0;
  double tolerance = 0.0;  // early-stop threshold, 0 disables

  void validate() const {
    if (!(rho > 0.0 && rho < 1.0)) throw std::invalid_argument("plan: rho must be in (0,1)");
    if (!(kappa >= 0.0 && kappa < 1.0)) throw std::invalid_argument("plan: kappa must be in [0,1)");
    if (iterations < 1) throw std::invalid_argument("plan: iterations must be >= 1");
    if (pattern_kind == PatternKind::NofM && (nm_n <= 0 || nm_m <= 0 || nm_n > nm_m))
      throw std::invalid_argument("plan: n:m pattern needs 0 < n <= m");
    for (const auto& [name, r] : per_layer_rho)
      if (!(r > 0.0 && r < 1.0))
        throw std::invalid_argument("plan: per-layer rho for \"" + name + "\" must be in (0,1)");
  }

  double rho_for(const std::string& layer) const {
    auto it = per_layer_rho.find(layer);
    return it == per_layer_rho.end() ? rho : it->second;
  }

  /// Table-1 style presets: both run 80 iterations; phi3 uses kappa = 0.25,
  /// llama3 uses kappa = 0.30.
  void apply_preset(const std::string& preset) {
    if (preset == "phi3") {
      kappa = 0.25;
      iterations = 80;
    } else if (preset == "llama3") {
      kappa = 0.30;
      iterations = 80;
    } else {
      throw std::invalid_argument("unknown preset \"" + preset + "\" (expected phi3 or llama3)");
    }
  }
};

namespace detail {

inline std::string pattern_kind_name(PatternKind k) {
  switch (k) {
    case PatternKind::LayerWise: return "layer_wise";
    case PatternKind::RowWise: return "row_wise";
    case PatternKind::NofM: return "n_of_m";
  }
  return "?";
}

inline PatternKind pattern_kind_from(const std::string& s) {
  if (s == "layer_wise") return PatternKind::LayerWise;
  if (s == "row_wise") return PatternKind::RowWise;
  if (s == "n_of_m") return PatternKind::NofM;
  throw std::invalid_argument("plan: unknown pattern kind \"" + s + "\"");
}

inline std::string scaling_mode_name(ScalingMode m) {
  switch (m) {
    case ScalingMode::SecondMoment: return "second_moment";
    case ScalingMode::RobustMedian: return "robust_median";
    case ScalingMode::Identity: return "identity";
  }
  return "?";
}

inline ScalingMode scaling_mode_from(const std::string& s) {
  if (s == "second_moment") return ScalingMode::SecondMoment;
  if (s == "robust_median") return ScalingMode::RobustMedian;
  if (s == "identity") return ScalingMode::Identity;
  throw std::invalid_argument("plan: unknown scaling mode \"" + s + "\"");
}

}  // namespace detail

inline nlohmann::json to_json(const CompressionPlan& p) {
  nlohmann::json j;
  j["rho"] = p.rho;
  j["kappa"] = p.kappa;
  j["iterations"] = p.iterations;
  nlohmann::json pat;
  pat["kind"] = detail::pattern_kind_name(p.pattern_kind);
  if (p.pattern_kind == PatternKind::NofM) {
    pat["n"] = p.nm_n;
    pat["m"] = p.nm_m;
  }
  j["pattern"] = pat;
  j["scaling"] = detail::scaling_mode_name(p.scaling_mode);
  j["order"] = p.order == ThresholdOrder::SvdFirst ? "svd_first" : "hard_threshold_first";
  j["sparse_step"] = p.sparse_step == SparseStepScaling::Scaled ? "scaled" : "unscaled";
  j["svd"] = p.svd_mode == SvdMode::Exact ? "exact" : "randomized";
  j["per_layer_rho"] = p.per_layer_rho;
  j["exclude"] = p.exclude;
  j["seed"] = p.seed;
  j["tolerance"] = p.tolerance;
  return j;
}

inline CompressionPlan plan_from_json(const nlohmann::json& j) {
  CompressionPlan p;
  if (j.contains("rho")) p.rho = j["rho"].get<double>();
  if (j.contains("kappa")) p.kappa = j["kappa"].get<double>();
  if (j.contains("iterations")) p.iterations = j["iterations"].get<int>();
  if (j.contains("pattern")) {
    const auto& pat = j["pattern"];
    p.pattern_kind = detail::pattern_kind_from(pat.at("kind").get<std::string>());
    if (p.pattern_kind == PatternKind::NofM) {
      p.nm_n = pat.at("n").get<int>();
      p.nm_m = pat.at("m").get<int>();
    }
  }
  if (j.contains("scaling")) p.scaling_mode = detail::scaling_mode_from(j["scaling"].get<std::string>());
  if (j.contains("order")) {
    const std::string s = j["order"].get<std::string>();
    if (s == "svd_first")
      p.order = ThresholdOrder::SvdFirst;
    else if (s == "hard_threshold_first")
      p.order = ThresholdOrder::HardThresholdFirst;
    else
      throw std::invalid_argument("plan: unknown order \"" + s + "\"");
  }
  if (j.contains("sparse_step")) {
    const std::string s = j["sparse_step"].get<std::string>();
    if (s == "scaled")
      p.sparse_step = SparseStepScaling::Scaled;
    else if (s == "unscaled")
      p.sparse_step = SparseStepScaling::Unscaled;
    else
      throw std::invalid_argument("plan: unknown sparse_step \"" + s + "\"");
  }
  if (j.contains("svd")) {
    const std::string s = j["svd"].get<std::string>();
    if (s == "exact")
      p.svd_mode = SvdMode::Exact;
    else if (s == "randomized")
      p.svd_mode = SvdMode::Randomized;
    else
      throw std::invalid_argument("plan: unknown svd mode \"" + s + "\"");
  }
  if (j.contains("per_layer_rho"))
    p.per_layer_rho = j["per_layer_rho"].get<std::map<std::string, double>>();
  if (j.contains("exclude")) p.exclude = j["exclude"].get<std::vector<std::string>>();
  if (j.contains("seed")) p.seed = j["seed"].get<std::uint64_t>();
  if (j.contains("tolerance")) p.tolerance = j["tolerance"].get<double>();
  p.validate();
  return p;
}

inline CompressionPlan load_plan(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open plan file \"" + path.string() + "\"");
  nlohmann::json j;
  in >> j;
  return plan_from_json(j);
}

/// Glob-lite matching for exclusion patterns: '*' matches any run of
/// characters, everything else is literal.
inline bool name_matches(const std::string& name, const std::string& pattern) {
  std::size_t n = 0, p = 0, star = std::string::npos, mark = 0;
  while (n < name.size()) {
    if (p < pattern.size() && (pattern[p] == name[n])) {
      ++n;
      ++p;
    } else if (p < pattern.size() && pattern[p] == '*') {
      star = p++;
      mark = n;
    } else if (star != std::string::npos) {
      p = star + 1;
      n = ++mark;
    } else {
      return false;
    }
  }
  while (p < pattern.size() && pattern[p] == '*') ++p;
  return p == pattern.size();
}

inline bool is_excluded(const std::string& name, const std::vector<std::string>& patterns) {
  for (const auto& p : patterns)
    if (name_matches(name, p)) return true;
  return false;
}

}  // namespace oats
