// SPDX-FileCopyrightText: Copyright (c) 2026 The hetersched Authors
// SPDX-License-Identifier: Apache-2.0
//
// Deterministic single-node engine. Mapping follows the demand-driven
// recursion: at the next mapping time beta = max(tau, zeta) the device with
// the smallest predicted finish time receives one task chosen by the active
// policy, and the process repeats until every operation instance is mapped.

#pragma once

#include <cstdint>
#include <deque>
#include <iosfwd>
#include <optional>
#include <queue>
#include <span>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "hetersched/sched.hpp"
#include "hetersched/types.hpp"
#include "hetersched/workflow.hpp"

namespace hetersched {

/// CPU<->GPU copy cost. A copy of b > 0 bytes takes
/// (latency + ceil(b / bandwidth)) * (1 + alpha * (hops - 1) * sharers) ticks,
/// where sharers counts the GPUs behind the inter-socket link a remote
/// controller crosses.
struct TransferModel {
  Tick latency = 0;
  double bandwidth = 1.0;  // bytes per tick
  double hop_penalty = 0.0;

  double multiplier(unsigned hops, unsigned sharers = 1) const;
  Tick time(std::uint64_t bytes, unsigned hops = 1, unsigned sharers = 1) const;
};

enum class PlacementMode : std::uint8_t { Os, Closest };

const char* to_string(PlacementMode m);
PlacementMode parse_placement(std::string_view s);

/// Socket layout of a node as seen from the GPUs.
struct NodeTopology {
  unsigned sockets = 1;
  /// Socket whose I/O hub each GPU hangs off.
  std::vector<unsigned> gpu_home_socket;
  /// Hops from the home socket (>= 1).
  std::vector<unsigned> gpu_min_hops;

  /// Two sockets; GPU 0 on socket 0, the others on socket 1. All three GPUs
  /// are one hop from their home socket.
  static NodeTopology keeneland(unsigned gpus);
  static NodeTopology single_socket(unsigned gpus);
};

struct GpuLinks {
  std::vector<unsigned> hops;
  std::vector<unsigned> sharers;
};

/// CLOSEST binds each controller to its GPU's home socket. OS draws a socket
/// uniformly per controller from `seed`; a remote socket costs one extra hop.
GpuLinks apply_placement(PlacementMode mode, const NodeTopology& topo, std::uint64_t seed);

struct GpuChannels {
  Tick upload_free = 0;
  Tick compute_free = 0;
  Tick download_free = 0;
};

struct PhaseTimes {
  Tick upload_start = 0, upload_end = 0;
  Tick compute_start = 0, compute_end = 0;
  Tick download_start = 0, download_end = 0;
};

/// Places one GPU operation on the three channels. Without prefetch the
/// phases run back to back after every channel is free; with prefetch each
/// phase only waits for its own channel and the previous phase.
PhaseTimes schedule_gpu_phases(Tick upload, Tick compute, Tick download, GpuChannels& ch, bool prefetch,
                               Tick now);

struct TransferTimes {
  Tick upload = 0;
  Tick download = 0;
  std::uint64_t upload_bytes = 0;
  std::uint64_t download_bytes = 0;
};

/// Upload covers the non-resident share of the inputs; the download is
/// skipped when the output stays on the GPU for a later consumer.
TransferTimes transfer_time(const OperationSpec& op, double resident_input_fraction, bool defer_download,
                            const TransferModel& model, unsigned hops = 1, unsigned sharers = 1);

struct Device {
  std::uint32_t index = 0;
  DeviceKind kind = DeviceKind::CpuCore;
  unsigned link_hops = 0;
  unsigned link_sharers = 1;
  /// F: completion of all work assigned so far.
  Tick finish = 0;
  /// Earliest time the device accepts its next mapping. Equals `finish`
  /// except for GPUs in prefetch mode, which accept the next task once the
  /// current one starts computing.
  Tick available = 0;
  GpuChannels channels;
  Tick compute_time = 0;
  Tick transfer_time = 0;
  Tick wait_time = 0;
  std::uint64_t tasks = 0;
};

/// Predicted finish time of the device: busy plus idle time so far.
Tick finish_time(const Device& d);
/// zeta(t): t if some pending creation time is <= t, else the smallest
/// later one, else kNever.
Tick next_task_time(std::span<const Tick> pending_created, Tick t);
/// beta(t) = max(tau, zeta(t)), tau being the smallest device availability.
Tick next_mapping_time(std::span<const Device> devices, std::span<const Tick> pending_created, Tick t);
/// phi: smallest availability, ties to the lowest index. Precondition: non-empty.
std::uint32_t pick_processor(std::span<const Device> devices);

enum class TraceEvent : std::uint8_t {
  Map,
  UploadStart,
  UploadEnd,
  RunStart,
  RunEnd,
  DownloadStart,
  DownloadEnd,
  Complete,
  WritebackStart,
  WritebackEnd,
};

const char* to_string(TraceEvent e);

struct TraceRecord {
  Tick time = 0;
  TraceEvent event = TraceEvent::Map;
  InstanceId instance = 0;
  std::uint32_t op = 0;
  std::uint32_t chunk = 0;
  std::uint32_t device = 0;
  std::uint64_t seq = 0;
};

struct Assignment {
  InstanceId instance = 0;
  std::uint32_t device = 0;
  Tick time = 0;
  bool operator==(const Assignment&) const = default;
};

/// Ordered record of decisions and completions for one node.
struct ScheduleTrace {
  std::vector<TraceRecord> records;
  std::vector<Assignment> assignments;
  Tick makespan = 0;

  /// Records sorted by (time, emission order).
  std::vector<TraceRecord> sorted() const;
};

struct NodeConfig {
  unsigned gpus = 0;
  /// Schedulable CPU cores (controller cores already subtracted).
  unsigned cpu_cores = 1;
  TransferModel transfer;
  /// Per-GPU link layout; defaults to one hop, no sharing.
  GpuLinks links;
  /// CPU costs are scaled by 1 + cpu_contention * (cpu_cores - 1).
  double cpu_contention = 0.0;
  Tick sched_overhead = 0;
  bool prefetch = false;
  /// Relative per-(chunk, op) cost variation in [0, 1).
  double cost_jitter = 0.0;
  std::uint64_t jitter_seed = 0;
  /// Resident-data capacity per GPU in bytes; 0 = unbounded.
  std::uint64_t gpu_memory = 0;
  bool record_trace = false;

  unsigned device_count() const noexcept { return gpus + cpu_cores; }
};

struct PolicyConfig {
  SchedulerConfig sched;
  /// Estimates keyed by global op index; empty = taken from the workflow.
  std::vector<double> speedups;
  /// Replay: map exactly these (instance, device) pairs in order, each at
  /// max(device availability, c_i, previous mapping time).
  std::optional<std::vector<Assignment>> forced;
};

struct StageDone {
  std::uint32_t stage_instance = 0;
  Tick time = 0;
};

struct NodeStats {
  Tick makespan = 0;
  std::uint64_t ops_mapped = 0;
  std::uint64_t upload_bytes = 0;
  std::uint64_t download_bytes = 0;
  std::uint64_t uploads = 0;
  std::uint64_t downloads = 0;
  /// Per global op index: instances run on GPUs / on CPU cores.
  std::vector<std::uint64_t> gpu_ops;
  std::vector<std::uint64_t> cpu_ops;
  std::size_t max_queue = 0;
  std::uint64_t multi_choice_selections = 0;

  std::uint64_t transferred_bytes() const noexcept { return upload_bytes + download_bytes; }
};

class NodeEngine {
 public:
  NodeEngine(const Workflow& wf, NodeConfig cfg, PolicyConfig policy);

  /// Stage instance delivered to this worker; its initial operations get
  /// c_i = at.
  void deliver(const StageInstance& si, Tick at);

  /// beta for the current state, kNever when nothing is pending.
  Tick next_mapping_time() const;

  /// theta: maps one task at the next mapping time and returns the following
  /// mapping time. Throws Error{NoPendingWork}.
  Tick map_one();

  /// Maps until nothing is pending (Z(m)); returns the makespan.
  Tick run_to_completion();

  /// Stage instances whose last operation got mapped since the last call.
  std::vector<StageDone> take_stage_completions();

  bool has_pending() const noexcept { return !queue_.empty() || !future_.empty(); }
  Tick now() const noexcept { return now_; }
  Tick makespan() const;
  std::span<const Device> devices() const noexcept { return devices_; }
  const NodeStats& stats() const noexcept { return stats_; }
  const ScheduleTrace& trace() const noexcept { return trace_; }
  ScheduleTrace take_trace();
  const std::vector<Assignment>& assignments() const noexcept { return trace_.assignments; }
  const Workflow& workflow() const noexcept { return *wf_; }
  const NodeConfig& config() const noexcept { return cfg_; }

  /// Effective per-instance costs after contention scaling and jitter.
  Tick cpu_cost(std::uint32_t op, std::uint32_t chunk) const;
  Tick gpu_cost(std::uint32_t op, std::uint32_t chunk) const;

  const OperationInstance& instance(InstanceId id) const;
  /// Completion time of a mapped instance (when its output is usable).
  Tick completion(InstanceId id) const { return done_at_.at(id); }

 private:
  struct DataLoc {
    std::uint64_t bytes = 0;
    bool on_host = true;
    std::uint32_t gpu_mask = 0;
  };
  struct Recent {
    InstanceId id;
    Tick compute_end;
  };
  struct ExecState {
    std::size_t unmapped = 0;
    Tick done = 0;
  };
  struct LruEntry {
    std::uint64_t data;
    std::uint64_t bytes;
  };

  using FutureItem = std::pair<Tick, InstanceId>;

  void release_until(Tick t);
  void assign(InstanceId id, std::uint32_t device, Tick t);
  std::vector<InstanceId> reuse_candidates(std::uint32_t gpu, Tick t) const;
  double transfer_impact(InstanceId id, std::uint32_t gpu) const;
  std::vector<std::uint64_t> inputs_of(const OperationInstance& oi) const;
  std::uint64_t input_share(const OperationInstance& oi, std::size_t n_inputs, std::size_t k) const;
  StageExecution& exec_of(InstanceId id);
  const StageExecution& exec_of(InstanceId id) const;
  void record(Tick t, TraceEvent e, const OperationInstance& oi, std::uint32_t device);
  void make_resident(std::uint32_t gpu, std::uint64_t data, std::uint64_t bytes, Tick t);
  void touch(std::uint32_t gpu, std::uint64_t data);
  double jitter(std::uint32_t op, std::uint32_t chunk, std::uint64_t salt) const;

  const Workflow* wf_;
  NodeConfig cfg_;
  PolicyConfig policy_;
  std::vector<double> speedups_;
  std::vector<Tick> cpu_base_;
  std::vector<Tick> gpu_base_;
  std::vector<Device> devices_;
  std::deque<StageExecution> execs_;
  std::vector<ExecState> exec_state_;
  std::vector<std::uint32_t> exec_of_id_;
  std::vector<Tick> done_at_;
  std::priority_queue<FutureItem, std::vector<FutureItem>, std::greater<>> future_;
  ReadyQueue queue_;
  std::unordered_map<std::uint64_t, DataLoc> data_;
  std::vector<std::vector<Recent>> recent_;
  std::vector<std::deque<LruEntry>> lru_;
  std::vector<std::uint64_t> resident_bytes_;
  std::vector<StageDone> stage_done_;
  std::size_t forced_next_ = 0;
  Tick now_ = 0;
  std::uint64_t trace_seq_ = 0;
  NodeStats stats_;
  ScheduleTrace trace_;
};

/// Lower bound on any schedule: longest path through the stage and
/// operation DAGs weighting each op by min(cpu, gpu) effective cost.
Tick critical_path_bound(const NodeEngine& engine, std::span<const StageInstance> instances);

/// Replays a fixed assignment sequence on a fresh engine with every stage
/// instance delivered at its given time; returns the makespan.
Tick replay(const Workflow& wf, const NodeConfig& cfg, const SchedulerConfig& sched,
            std::span<const StageInstance> instances, std::span<const Tick> delivered,
            const std::vector<Assignment>& sequence);

/// CSV: time_us,event,op_id,chunk_id,device_id
void write_trace_csv(std::ostream& os, const Workflow& wf, const ScheduleTrace& trace);

}  // namespace hetersched
