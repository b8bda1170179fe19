// SPDX-FileCopyrightText: Copyright (c) 2026 The hetersched Authors
// SPDX-License-Identifier: Apache-2.0
//
// hetersched <command> --workload <path> [options] --out <csv>

#include <cstdlib>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "hetersched/experiments.hpp"
#include "hetersched/workload_io.hpp"

namespace {

constexpr int kExitValidation = 2;
constexpr int kExitConfig = 3;

enum class LogLevel { Off, Info, Trace };

LogLevel log_level_from_env() {
  const char* v = std::getenv("HETERSCHED_LOG");
  if (v == nullptr) return LogLevel::Off;
  const std::string s(v);
  if (s.empty() || s == "off") return LogLevel::Off;
  if (s == "info") return LogLevel::Info;
  if (s == "trace") return LogLevel::Trace;
  throw hetersched::Error(hetersched::ErrorCode::ConfigError, "HETERSCHED_LOG must be off, info or trace");
}

std::vector<std::string> split(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  using namespace hetersched;

  CLI::App app{"Heterogeneous CPU-GPU pipeline scheduling simulator"};
  std::string command;
  std::string workload_path;
  std::string config_path;
  std::string policy = "pats";
  bool dl = false;
  bool prefetch = false;
  std::optional<unsigned> window;
  std::vector<unsigned> nodes;
  double estimate_error = 0.0;
  std::string low_set;
  std::string placement_mode = "closest";
  std::uint64_t seed = 1;
  std::optional<std::uint32_t> tiles;
  std::string out_path;
  unsigned window_min = 12;
  unsigned window_max = 19;
  std::vector<double> errors{0, 10, 20, 30, 40, 50, 60, 70, 80, 90, 100};
  unsigned seeds = 30;

  app.add_option("command", command, "simulate | compare | sweep-window | error-sweep | scale | placement")
      ->required()
      ->check(CLI::IsMember({"simulate", "compare", "sweep-window", "error-sweep", "scale", "placement"}));
  app.add_option("--workload", workload_path, "pipeline JSON")->required();
  app.add_option("--config", config_path, "cluster JSON (defaults to the built-in calibrated node)");
  app.add_option("--policy", policy, "fcfs | pats");
  app.add_flag("--dl", dl, "data-locality-conscious GPU assignment");
  app.add_flag("--prefetch", prefetch, "overlap transfers with computation");
  app.add_option("--window", window, "stage instances outstanding per worker");
  app.add_option("--nodes", nodes, "node count(s)")->delimiter(',');
  app.add_option("--estimate-error", estimate_error, "speedup estimate error in percent");
  app.add_option("--low-speedup-set", low_set, "comma-separated op ids whose estimates are raised");
  app.add_option("--placement", placement_mode, "os | closest");
  app.add_option("--seed", seed, "seed");
  app.add_option("--tiles", tiles, "override the workload's chunk count");
  app.add_option("--out", out_path, "output CSV")->required();
  app.add_option("--window-min", window_min, "sweep-window: first window");
  app.add_option("--window-max", window_max, "sweep-window: last window");
  app.add_option("--errors", errors, "error-sweep: percentages")->delimiter(',');
  app.add_option("--seeds", seeds, "placement: OS placement draws");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitConfig;
  }

  try {
    const LogLevel level = log_level_from_env();
    ExperimentPlan plan;
    plan.workload = load_workload(workload_path);
    plan.cluster = config_path.empty() ? default_cluster_config() : load_cluster_config(config_path);
    plan.policy = parse_policy(policy);
    plan.dl = dl;
    plan.prefetch = prefetch;
    plan.window = window;
    plan.nodes = nodes;
    plan.estimate_error = estimate_error;
    plan.low_speedup_set = split(low_set);
    plan.placement = parse_placement(placement_mode);
    plan.seed = seed;
    plan.tiles = tiles;
    plan.placement_seeds = seeds;
    if (level != LogLevel::Off) plan.log = [](const std::string& line) { std::cerr << line << '\n'; };
    plan.log_trace = level == LogLevel::Trace;
    if (plan.window && *plan.window < 1) throw Error(ErrorCode::ConfigError, "window must be >= 1");
    for (unsigned n : plan.nodes) {
      if (n < 1) throw Error(ErrorCode::ConfigError, "node counts must be >= 1");
    }

    std::ostringstream csv;
    if (command == "simulate") {
      cmd_simulate(plan, csv);
    } else if (command == "compare") {
      write_compare_csv(csv, compare_matrix(plan));
    } else if (command == "sweep-window") {
      write_window_csv(csv, plan.workload, sweep_window(plan, window_min, window_max));
    } else if (command == "error-sweep") {
      write_error_csv(csv, error_sweep(plan, errors));
    } else if (command == "scale") {
      write_scale_csv(csv, scale(plan));
    } else {
      write_placement_csv(csv, placement(plan));
    }

    std::ofstream out(out_path, std::ios::binary);
    if (!out) throw Error(ErrorCode::ConfigError, "cannot write '" + out_path + "'");
    out << csv.str();
    return 0;
  } catch (const Error& e) {
    std::cerr << "hetersched: " << e.what() << '\n';
    return e.is_validation() ? kExitValidation : kExitConfig;
  }
}
