// SPDX-FileCopyrightText: Copyright (c) 2026 The hetersched Authors
// SPDX-License-Identifier: Apache-2.0
//
// Workload and cluster configuration files, random workload generation and
// the monolithic (non-pipelined) transform.

#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>

#include <json.hpp>

#include "hetersched/cluster.hpp"
#include "hetersched/workflow.hpp"

namespace hetersched {

/// Parses and validates a pipeline document. Throws Error{ParseError} for
/// malformed input and the validation codes of validate().
PipelineSpec parse_workload(const nlohmann::json& doc);
PipelineSpec parse_workload_text(std::string_view text);
PipelineSpec load_workload(const std::filesystem::path& path);

nlohmann::json workload_to_json(const PipelineSpec& spec);

/// Calibrated single-node defaults (a Keeneland-like node); the same values
/// ship in configs/keeneland.json.
ClusterConfig default_cluster_config();

/// Fields missing from the document keep default_cluster_config() values.
/// Throws Error{ParseError} or Error{ConfigError}.
ClusterConfig parse_cluster_config(const nlohmann::json& doc);
ClusterConfig load_cluster_config(const std::filesystem::path& path);

struct RandomWorkloadParams {
  unsigned ops = 10;
  unsigned stages = 1;
  double min_speedup = 1.0;
  double max_speedup = 40.0;
  /// Probability of an edge from each earlier op of the same stage.
  double density = 0.3;
  std::uint64_t seed = 1;
  std::uint32_t chunks = 1;
  double min_cpu_ms = 1.0;
  double max_cpu_ms = 20.0;
  std::uint64_t max_bytes = 0;
};

/// Seeded DAG workload; speedups are log-uniform in [min_speedup,
/// max_speedup]. Stages form a chain. Throws Error{ConfigError} when
/// min_speedup <= 0 or the range is inverted.
PipelineSpec gen_random_workload(const RandomWorkloadParams& p);

/// Merges each stage into one operation: costs and bytes are summed.
PipelineSpec non_pipelined(const PipelineSpec& spec);

/// Ids of the floor(n/2) operations with the smallest speedup estimates.
std::vector<std::string> default_low_speedup_set(const PipelineSpec& spec);

}  // namespace hetersched
