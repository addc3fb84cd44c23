// Copyright (c) 2026 The oats authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <string>
#include <vector>

#include <nlohmann/json.hpp>

namespace oats {

struct LayerReport {
  std::string name;
  bool excluded = false;
  long d_out = 0;
  long d_in = 0;
  long r = 0;
  long k = 0;
  long nnz = 0;
  double requested_rho = 0.0;
  double achieved_rho = 0.0;
  double final_objective = 0.0;
  int iterations = 0;
  double wall_ms = 0.0;
};

struct CompressionReport {
  std::string mode = "oats";  // "wanda-equivalent" when kappa == 0
  double requested_rho = 0.0;
  double kappa = 0.0;
  int iterations = 0;
  long total_params = 0;      // parameters of included layers
  long retained_params = 0;   // nnz + r*(d_out+d_in) summed over included layers
  double achieved_rho = 0.0;  // 1 - retained/total over included layers
  std::vector<LayerReport> layers;
};

inline nlohmann::json to_json(const LayerReport& l) {
  return nlohmann::json{{"name", l.name},
                        {"excluded", l.excluded},
                        {"d_out", l.d_out},
                        {"d_in", l.d_in},
                        {"r", l.r},
                        {"k", l.k},
                        {"nnz", l.nnz},
                        {"requested_rho", l.requested_rho},
                        {"achieved_rho", l.achieved_rho},
                        {"final_objective", l.final_objective},
                        {"iterations", l.iterations},
                        {"wall_ms", l.wall_ms}};
}

inline nlohmann::json to_json(const CompressionReport& r) {
  nlohmann::json layers = nlohmann::json::array();
  for (const auto& l : r.layers) layers.push_back(to_json(l));
  return nlohmann::json{{"mode", r.mode},
                        {"requested_rho", r.requested_rho},
                        {"kappa", r.kappa},
                        {"iterations", r.iterations},
                        {"total_params", r.total_params},
                        {"retained_params", r.retained_params},
                        {"achieved_rho", r.achieved_rho},
                        {"layers", layers}};
}

inline LayerReport layer_report_from_json(const nlohmann::json& j) {
  LayerReport l;
  l.name = j.at("name").get<std::string>();
  l.excluded = j.at("excluded").get<bool>();
  l.d_out = j.at("d_out").get<long>();
  l.d_in = j.at("d_in").get<long>();
  l.r = j.at("r").get<long>();
  l.k = j.at("k").get<long>();
  l.nnz = j.at("nnz").get<long>();
  l.requested_rho = j.at("requested_rho").get<double>();
  l.achieved_rho = j.at("achieved_rho").get<double>();
  l.final_objective = j.at("final_objective").get<double>();
  l.iterations = j.at("iterations").get<int>();
  l.wall_ms = j.at("wall_ms").get<double>();
  return l;
}

inline CompressionReport report_from_json(const nlohmann::json& j) {
  CompressionReport r;
  r.mode = j.at("mode").get<std::string>();
  r.requested_rho = j.at("requested_rho").get<double>();
  r.kappa = j.at("kappa").get<double>();
  r.iterations = j.at("iterations").get<int>();
  r.total_params = j.at("total_params").get<long>();
  r.retained_params = j.at("retained_params").get<long>();
  r.achieved_rho = j.at("achieved_rho").get<double>();
  for (const auto& jl : j.at("layers")) r.layers.push_back(layer_report_from_json(jl));
  return r;
}

}  // namespace oats
