// Copyright (c) 2026 The oats authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <array>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <string>
#include <sys/wait.h>
#include <vector>

#include "oats/matrix.hpp"
#include "oats/model_graph.hpp"
#include "oats/rng.hpp"
#include "oats/tensor.hpp"

namespace helpers {

namespace fs = std::filesystem;

/// Fresh directory under the system temp root, removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    path_ = fs::temp_directory_path() / ("oats_test_" + tag + "_" + std::to_string(counter_++));
    fs::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    fs::remove_all(path_, ec);
  }
  const fs::path& path() const { return path_; }
  fs::path file(const std::string& name) const { return path_ / name; }

 private:
  fs::path path_;
  static inline int counter_ = 0;
};

inline std::vector<std::uint8_t> slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

struct CliResult {
  int exit_code = -1;
  std::string output;  // stdout + stderr
};

inline CliResult run_cli(const std::string& args) {
  const std::string cmd = std::string(OATS_CLI_PATH) + " " + args + " 2>&1";
  CliResult res;
  FILE* pipe = popen(cmd.c_str(), "r");
  if (!pipe) return res;
  std::array<char, 4096> buf;
  while (std::size_t n = std::fread(buf.data(), 1, buf.size(), pipe)) res.output.append(buf.data(), n);
  const int status = pclose(pipe);
  res.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  return res;
}

inline oats::DenseMatrix random_matrix(int rows, int cols, std::uint64_t seed, double scale = 1.0) {
  oats::DenseMatrix m(rows, cols);
  oats::Rng rng(seed);
  rng.fill_gaussian(m.data, scale);
  return m;
}

/// Weight with planted structure: dominant low-rank part, a few large sparse
/// spikes, and faint dense noise. This is the regime where splitting the
/// budget between a sparse and a low-rank term beats pruning alone.
inline oats::DenseMatrix planted_matrix(int rows, int cols, int rank, int spikes,
                                        std::uint64_t seed, double spike_mag = 5.0,
                                        double noise = 0.0) {
  oats::Rng rng(seed);
  oats::DenseMatrix m(rows, cols);
  std::vector<double> u(static_cast<std::size_t>(rows)), v(static_cast<std::size_t>(cols));
  for (int t = 0; t < rank; ++t) {
    const double sigma = 1.0 + rng.uniform();  // in [1, 2)
    for (auto& x : u) x = rng.normal() / std::sqrt(static_cast<double>(rows));
    for (auto& x : v) x = rng.normal() / std::sqrt(static_cast<double>(cols));
    for (int i = 0; i < rows; ++i)
      for (int j = 0; j < cols; ++j)
        m.at(i, j) += static_cast<float>(sigma * u[static_cast<std::size_t>(i)] * v[static_cast<std::size_t>(j)] *
                                         std::sqrt(static_cast<double>(rows) * cols));
    }
  for (int s = 0; s < spikes; ++s) {
    const int i = static_cast<int>(rng.uniform_int(0, rows - 1));
    const int j = static_cast<int>(rng.uniform_int(0, cols - 1));
    m.at(i, j) += static_cast<float>((rng.uniform() < 0.5 ? -1.0 : 1.0) * spike_mag);
  }
  if (noise > 0.0)
    for (float& x : m.data) x += static_cast<float>(rng.normal() * noise);
  return m;
}

/// Calibration block with a few high-magnitude feature columns.
inline oats::DenseMatrix outlier_activations(int rows, int cols, std::uint64_t seed,
                                             int outliers = 3, double outlier_scale = 16.0) {
  oats::Rng rng(seed);
  oats::DenseMatrix x(rows, cols);
  rng.fill_gaussian(x.data);
  for (int t = 0; t < outliers; ++t) {
    const int j = static_cast<int>(rng.uniform_int(0, cols - 1));
    for (int b = 0; b < rows; ++b) x.at(b, j) *= static_cast<float>(outlier_scale);
  }
  return x;
}

/// iid Gaussian bulk plus a moderate planted low-rank term: enough low-rank
/// structure that a rank budget pays off, without letting it dominate the
/// sparse selection dynamics.
inline oats::DenseMatrix structured_weight(int rows, int cols, int rank, std::uint64_t seed,
                                           double lowrank_sigma = 1.0) {
  oats::Rng rng(seed);
  oats::DenseMatrix m(rows, cols);
  rng.fill_gaussian(m.data);
  std::vector<double> u(static_cast<std::size_t>(rows)), v(static_cast<std::size_t>(cols));
  for (int t = 0; t < rank; ++t) {
    const double sigma = lowrank_sigma * (1.0 + rng.uniform()) * std::sqrt(static_cast<double>(rows) * cols);
    for (auto& x : u) x = rng.normal() / std::sqrt(static_cast<double>(rows));
    for (auto& x : v) x = rng.normal() / std::sqrt(static_cast<double>(cols));
    for (int i = 0; i < rows; ++i)
      for (int j = 0; j < cols; ++j)
        m.at(i, j) += static_cast<float>(sigma * u[static_cast<std::size_t>(i)] * v[static_cast<std::size_t>(j)]);
  }
  return m;
}

struct ToyModel {
  oats::TensorArchive weights;
  oats::ModelGraph graph;
  oats::TensorArchive calib;
};

/// Two-block MLP 32 -> 64 -> 32 with relu, structured weights and
/// outlier-heavy calibration inputs.
inline ToyModel make_toy_mlp(std::uint64_t seed, int batch = 512) {
  ToyModel m;
  const oats::DenseMatrix w1 = structured_weight(64, 32, 2, oats::derive_seed(seed, "w1"));
  const oats::DenseMatrix w2 = structured_weight(32, 64, 2, oats::derive_seed(seed, "w2"));
  m.weights.add(oats::NamedTensor::from_f32("fc1.weight", {64, 32}, w1.data));
  m.weights.add(oats::NamedTensor::from_f32("fc2.weight", {32, 64}, w2.data));
  std::vector<float> b1(64, 0.01f), b2(32, -0.01f);
  m.weights.add(oats::NamedTensor::from_f32("fc1.bias", {64}, b1));
  m.weights.add(oats::NamedTensor::from_f32("fc2.bias", {32}, b2));

  oats::BlockSpec blk1{{{"fc1", 64, 32, "fc1.weight", "fc1.bias"}}, oats::Activation::Relu, false};
  oats::BlockSpec blk2{{{"fc2", 32, 64, "fc2.weight", "fc2.bias"}}, oats::Activation::Relu, false};
  m.graph.blocks = {blk1, blk2};

  const oats::DenseMatrix x = outlier_activations(batch, 32, oats::derive_seed(seed, "calib"));
  m.calib.add(oats::NamedTensor::from_f32(
      "input", {static_cast<std::size_t>(batch), 32}, x.data));
  return m;
}

}  // namespace helpers
