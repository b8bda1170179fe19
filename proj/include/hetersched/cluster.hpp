// SPDX-FileCopyrightText: Copyright (c) 2026 The hetersched Authors
// SPDX-License-Identifier: Apache-2.0
//
// Manager/Worker layer. The Manager hands stage instances to workers in
// creation order, at most `window` outstanding per worker; every worker runs
// its own NodeEngine and the global loop advances them on one timeline.

#pragma once

#include <cstdint>
#include <deque>
#include <optional>
#include <set>
#include <vector>

#include "hetersched/simcore.hpp"
#include "hetersched/workflow.hpp"

namespace hetersched {

/// Shared-filesystem read cost: io_base * (1 + gamma * (clients - 1)).
struct IoModel {
  Tick io_base = 0;
  double gamma = 0.0;

  Tick read_time(unsigned active_clients) const;
};

struct ClusterConfig {
  unsigned nodes = 1;
  /// Physical cores per node; one per GPU is taken by its controller thread.
  unsigned cpu_cores = 12;
  unsigned gpus = 3;
  /// Overrides the schedulable core count (cpu_cores - gpus).
  std::optional<unsigned> cpu_workers;
  unsigned window = 12;
  Tick manager_rtt = 100;
  IoModel io;
  /// Per-node engine settings; gpus and cpu_cores are filled in from above.
  NodeConfig node;
  /// Stage -> node list. Non-empty means per-stage worker sets, which are
  /// rejected: only full replication is supported.
  std::vector<std::vector<unsigned>> stage_nodes;

  unsigned schedulable_cores() const;
  /// Throws Error{ConfigError}.
  void validate() const;
  NodeConfig node_config() const;
};

struct Dispatch {
  unsigned worker = 0;
  std::uint32_t instance = 0;
};

/// Creation-order dispatcher with per-worker windows.
class Manager {
 public:
  Manager(std::vector<StageInstance> instances, unsigned workers, unsigned window);

  /// Worker request: assigns up to window - outstanding eligible instances
  /// in creation order. A worker left with free slots is queued and served
  /// first once something becomes eligible. Throws Error{NoWorkRemaining}
  /// when every instance has been dispatched.
  std::vector<std::uint32_t> dispatch(unsigned worker);

  /// Marks the instance done, unblocks same-chunk dependents and serves
  /// waiting workers (the completing one included).
  std::vector<Dispatch> on_stage_complete(unsigned worker, std::uint32_t instance);

  unsigned outstanding(unsigned worker) const { return outstanding_.at(worker); }
  unsigned window() const noexcept { return window_; }
  bool exhausted() const noexcept { return undispatched_ == 0; }
  bool all_done() const noexcept { return done_count_ == instances_.size(); }
  const StageInstance& instance(std::uint32_t id) const { return instances_.at(id); }
  std::span<const StageInstance> instances() const noexcept { return instances_; }
  /// Dispatch order so far.
  const std::vector<std::uint32_t>& dispatched() const noexcept { return dispatched_; }

 private:
  std::vector<std::uint32_t> fill(unsigned worker);

  std::vector<StageInstance> instances_;
  unsigned window_;
  std::vector<unsigned> outstanding_;
  std::vector<std::uint32_t> blocked_on_;
  std::vector<std::vector<std::uint32_t>> dependents_;
  std::set<std::pair<std::uint32_t, std::uint32_t>> eligible_;  // (order, id)
  std::deque<unsigned> waiting_;
  std::vector<bool> is_waiting_;
  std::vector<std::uint32_t> dispatched_;
  std::size_t undispatched_;
  std::size_t done_count_ = 0;
};

struct ClusterRun {
  Tick makespan = 0;
  std::uint64_t tiles = 0;
  double tiles_per_s = 0.0;
  /// Total time node I/O channels spent reading tiles.
  Tick io_time = 0;
  std::vector<NodeStats> node_stats;
  /// Per-node traces when node.record_trace is set.
  std::vector<ScheduleTrace> traces;
  /// Per-node mapping decisions, always recorded.
  std::vector<std::vector<Assignment>> assignments;
  std::vector<std::uint32_t> dispatch_order;
  /// Largest outstanding count observed on any worker.
  unsigned max_outstanding = 0;
};

/// Runs every chunk of the workflow through the cluster. `seed` drives cost
/// jitter only; placement comes from cfg.node.links.
ClusterRun simulate_cluster(const Workflow& wf, const ClusterConfig& cfg, const PolicyConfig& policy,
                            std::uint64_t seed);

struct ScaleSample {
  unsigned nodes = 0;
  Tick makespan = 0;
  std::uint64_t tiles = 0;
};

/// (base.makespan * base.nodes) / (run.makespan * run.nodes). Throws
/// Error{MismatchedWorkload} when the tile counts differ.
double efficiency(const ScaleSample& run, const ScaleSample& base);

}  // namespace hetersched
