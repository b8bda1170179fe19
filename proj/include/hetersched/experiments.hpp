// SPDX-FileCopyrightText: Copyright (c) 2026 The hetersched Authors
// SPDX-License-Identifier: Apache-2.0
//
// Experiment commands. Each command computes its rows first and writes them
// as CSV afterwards, so callers can check numbers without parsing output.

#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "hetersched/cluster.hpp"
#include "hetersched/sched.hpp"
#include "hetersched/simcore.hpp"
#include "hetersched/workflow.hpp"

namespace hetersched {

using LogFn = std::function<void(const std::string&)>;

struct ExperimentPlan {
  PipelineSpec workload;
  ClusterConfig cluster;
  Policy policy = Policy::Pats;
  bool dl = false;
  bool prefetch = false;
  std::optional<unsigned> window;
  std::vector<unsigned> nodes;
  double estimate_error = 0.0;
  std::vector<std::string> low_speedup_set;
  PlacementMode placement = PlacementMode::Closest;
  std::uint64_t seed = 1;
  std::optional<std::uint32_t> tiles;
  /// OS placement draws per GPU count.
  unsigned placement_seeds = 30;
  /// Progress lines; unset means silent.
  LogFn log;
  /// Also log every trace record (simulate only).
  bool log_trace = false;
};

/// Workload with the tile count override applied.
PipelineSpec effective_workload(const ExperimentPlan& plan);

struct RunOptions {
  Policy policy = Policy::Pats;
  bool dl = false;
  bool prefetch = false;
  unsigned window = 12;
  unsigned nodes = 1;
  /// Empty: estimates from the workload.
  std::vector<double> speedups;
  std::optional<GpuLinks> links;
  bool record_trace = false;
  std::optional<Tick> io_base;
};

ClusterRun run_once(const Workflow& wf, const ClusterConfig& cluster, const RunOptions& opt, std::uint64_t seed);

struct CompareRow {
  Policy policy;
  bool pipelined;
  bool dl;
  bool prefetch;
  Tick makespan;
  std::uint64_t transferred_bytes;
};

struct WindowRow {
  unsigned window;
  Policy policy;
  Tick makespan;
  /// Per stage: percent of operation instances run on GPUs.
  std::vector<double> gpu_pct;
  std::vector<Assignment> assignments;
  std::uint64_t multi_choice;
};

struct ErrorRow {
  double error_pct;
  Tick makespan;
  double vs_zero;
  double vs_fcfs;
};

struct ScaleRow {
  unsigned nodes;
  Policy policy;
  unsigned window;
  Tick makespan;
  double tiles_per_s;
  double efficiency;
  double comp_efficiency;
};

struct PlacementRow {
  unsigned gpus;
  PlacementMode mode;
  double makespan;  // mean over seeds for OS
  double gain_pct;  // CLOSEST relative to OS; 0 on OS rows
};

/// Simulate one configuration; writes the trace CSV and a summary line.
void cmd_simulate(const ExperimentPlan& plan, std::ostream& out);

std::vector<CompareRow> compare_matrix(const ExperimentPlan& plan);
void write_compare_csv(std::ostream& out, const std::vector<CompareRow>& rows);

std::vector<WindowRow> sweep_window(const ExperimentPlan& plan, unsigned first, unsigned last);
void write_window_csv(std::ostream& out, const PipelineSpec& spec, const std::vector<WindowRow>& rows);

std::vector<ErrorRow> error_sweep(const ExperimentPlan& plan, const std::vector<double>& pcts);
void write_error_csv(std::ostream& out, const std::vector<ErrorRow>& rows);

std::vector<ScaleRow> scale(const ExperimentPlan& plan);
void write_scale_csv(std::ostream& out, const std::vector<ScaleRow>& rows);

std::vector<PlacementRow> placement(const ExperimentPlan& plan);
void write_placement_csv(std::ostream& out, const std::vector<PlacementRow>& rows);

/// Fixed-precision rendering used in every CSV.
std::string fmt_double(double v, int digits = 6);

}  // namespace hetersched
