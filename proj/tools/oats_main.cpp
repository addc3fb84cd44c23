// Copyright (c) 2026 The oats authors
// SPDX-License-Identifier: Apache-2.0
//
// Command-line front end: compress a model archive, inspect or evaluate a
// compressed artifact, and benchmark the apply kernels.

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "oats/oats.hpp"

namespace fs = std::filesystem;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitRuntime = 1;
constexpr int kExitUsage = 2;

int resolve_threads(int flag_value) {
  if (flag_value > 0) return flag_value;
  if (const char* env = std::getenv("OATS_THREADS")) {
    const int v = std::atoi(env);
    if (v > 0) return v;
  }
  return 0;
}

struct CompressArgs {
  std::string weights, graph, calib, plan, out, preset, report;
  int threads = 0;
};

int run_compress(const CompressArgs& args) {
  oats::CompressionPlan plan;
  try {
    plan = oats::load_plan(args.plan);
    if (!args.preset.empty()) plan.apply_preset(args.preset);
  } catch (const std::exception& e) {
    std::cerr << "error: bad plan: " << e.what() << "\n";
    return kExitUsage;
  }

  if (plan.scaling_mode != oats::ScalingMode::Identity && args.calib.empty()) {
    std::cerr << "error: --calib is required when the plan's scaling mode is not identity\n";
    return kExitUsage;
  }

  const oats::TensorArchive weights = oats::read_archive(args.weights);
  const oats::ModelGraph graph = oats::load_graph(args.graph);
  oats::TensorArchive calib;
  if (!args.calib.empty()) calib = oats::read_archive(args.calib);

  const oats::CompressedModel model = oats::compress_model(weights, graph, calib, plan);
  oats::write_compressed(model, args.out);

  const fs::path report_path = args.report.empty()
                                   ? fs::path(args.out).parent_path() / "report.json"
                                   : fs::path(args.report);
  std::ofstream rep(report_path);
  if (!rep) {
    std::cerr << "error: cannot write report to \"" << report_path.string() << "\"\n";
    return kExitRuntime;
  }
  rep << oats::to_json(model.report).dump(2) << "\n";

  std::cout << "compressed " << model.report.layers.size() << " layers (mode " << model.report.mode
            << ", achieved rho " << model.report.achieved_rho << ") -> " << args.out << "\n";
  return kExitOk;
}

void print_layer_line(const oats::LayerReport& l) {
  std::cout << "  " << std::left << std::setw(24) << l.name;
  if (l.excluded) {
    std::cout << "excluded\n";
    return;
  }
  std::cout << "r=" << std::setw(6) << l.r << "nnz=" << std::setw(10) << l.nnz
            << "rho=" << std::setw(10) << std::setprecision(4) << l.achieved_rho
            << "objective=" << std::setprecision(6) << l.final_objective << "\n";
}

int run_inspect(const std::string& artifact, const std::string& layer, bool as_json) {
  const oats::CompressedModel model = oats::read_compressed(artifact);
  const oats::CompressionReport& rep = model.report;

  if (!layer.empty()) {
    const oats::LayerReport* found = nullptr;
    for (const auto& l : rep.layers)
      if (l.name == layer) found = &l;
    if (!found) {
      std::cerr << "error: no layer named \"" << layer << "\"; available:";
      for (const auto& l : rep.layers) std::cerr << " " << l.name;
      std::cerr << "\n";
      return kExitRuntime;
    }
    if (as_json) {
      std::cout << oats::to_json(*found).dump(2) << "\n";
    } else {
      print_layer_line(*found);
    }
    return kExitOk;
  }

  if (as_json) {
    std::cout << oats::to_json(rep).dump(2) << "\n";
    return kExitOk;
  }
  std::cout << "mode: " << rep.mode << "\n"
            << "requested rho: " << rep.requested_rho << "  kappa: " << rep.kappa << "\n"
            << "achieved rho:  " << rep.achieved_rho << " (" << rep.retained_params << " / "
            << rep.total_params << " parameters retained)\n"
            << "layers:\n";
  for (const auto& l : rep.layers) print_layer_line(l);
  return kExitOk;
}

int run_eval_recon(const std::string& weights_path, const std::string& artifact,
                   const std::string& calib_path) {
  const oats::TensorArchive weights = oats::read_archive(weights_path);
  const oats::CompressedModel model = oats::read_compressed(artifact);
  const oats::TensorArchive calib = oats::read_archive(calib_path);
  if (!calib.contains("input")) {
    std::cerr << "error: calibration archive is missing the \"input\" tensor\n";
    return kExitRuntime;
  }
  oats::DenseMatrix x;
  const oats::NamedTensor t = oats::to_f32(calib.at("input"));
  x = oats::DenseMatrix(static_cast<int>(t.shape[0]), static_cast<int>(t.shape[1]), t.as_f32());

  const oats::ReconEval eval = oats::eval_reconstruction(weights, model, x);
  std::cout << "per-layer relative output error:\n";
  for (const auto& l : eval.layers)
    std::cout << "  " << std::left << std::setw(24) << l.name << std::setprecision(6) << l.rel_err
              << "\n";
  std::cout << "aggregate model output error: " << std::setprecision(6) << eval.aggregate << "\n";
  return kExitOk;
}

int run_bench_cmd(const std::string& config_path, const std::string& out_path, int threads) {
  oats::BenchConfig cfg;
  if (!config_path.empty()) {
    std::ifstream in(config_path);
    if (!in) {
      std::cerr << "error: cannot open bench config \"" << config_path << "\"\n";
      return kExitUsage;
    }
    nlohmann::json j;
    try {
      in >> j;
      cfg = oats::bench_config_from_json(j);
    } catch (const std::exception& e) {
      std::cerr << "error: bad bench config: " << e.what() << "\n";
      return kExitUsage;
    }
  }
  if (threads > 0) cfg.threads = threads;

  const oats::MachineInfo mi = oats::machine_info();
  std::cout << "machine: " << mi.cpu << " (" << mi.hw_threads << " hardware threads)\n";

  const std::vector<oats::BenchRecord> records = oats::run_bench(cfg);
  std::ofstream out(out_path);
  if (!out) {
    std::cerr << "error: cannot write CSV to \"" << out_path << "\"\n";
    return kExitRuntime;
  }
  out << oats::to_csv(records);
  std::ofstream meta(out_path + ".meta.txt");
  if (meta)
    meta << "cpu: " << mi.cpu << "\nhardware_threads: " << mi.hw_threads
         << "\nworkers: " << cfg.threads << "\n";
  std::cout << records.size() << " records -> " << out_path << "\n";
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"sparse + low-rank transformer weight compression"};
  app.require_subcommand(1);

  CompressArgs cargs;
  CLI::App* compress = app.add_subcommand("compress", "compress a model archive");
  compress->add_option("--weights", cargs.weights, "weights archive")->required();
  compress->add_option("--graph", cargs.graph, "model graph JSON")->required();
  compress->add_option("--calib", cargs.calib, "calibration activations archive");
  compress->add_option("--plan", cargs.plan, "compression plan JSON")->required();
  compress->add_option("--out", cargs.out, "output artifact path")->required();
  compress->add_option("--preset", cargs.preset, "phi3 or llama3 (sets iterations and kappa)");
  compress->add_option("--report", cargs.report, "report path (default: report.json next to --out)");
  compress->add_option("--threads", cargs.threads, "worker cap (or env OATS_THREADS)");

  std::string ins_artifact, ins_layer;
  bool ins_json = false;
  CLI::App* inspect = app.add_subcommand("inspect", "summarize a compressed artifact");
  inspect->add_option("--artifact", ins_artifact, "compressed artifact")->required();
  inspect->add_option("--layer", ins_layer, "only this layer");
  inspect->add_flag("--json", ins_json, "JSON output");

  std::string ev_weights, ev_artifact, ev_calib;
  CLI::App* evalr = app.add_subcommand("eval-recon", "relative output error vs the dense model");
  evalr->add_option("--weights", ev_weights, "original weights archive")->required();
  evalr->add_option("--artifact", ev_artifact, "compressed artifact")->required();
  evalr->add_option("--calib", ev_calib, "calibration activations archive")->required();

  std::string bench_config, bench_out;
  int bench_threads = 0;
  CLI::App* bench = app.add_subcommand("bench", "time the apply kernels");
  bench->add_option("--config", bench_config, "bench config JSON (built-in default when omitted)");
  bench->add_option("--out", bench_out, "output CSV path")->required();
  bench->add_option("--threads", bench_threads, "row-parallel worker count");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitUsage;
  }

  try {
    if (*compress) {
      cargs.threads = resolve_threads(cargs.threads);
      return run_compress(cargs);
    }
    if (*inspect) return run_inspect(ins_artifact, ins_layer, ins_json);
    if (*evalr) return run_eval_recon(ev_weights, ev_artifact, ev_calib);
    if (*bench) return run_bench_cmd(bench_config, bench_out, resolve_threads(bench_threads));
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitRuntime;
  }
  return kExitUsage;
}
