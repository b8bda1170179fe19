// SPDX-FileCopyrightText: Copyright (c) 2026 The hetersched Authors
// SPDX-License-Identifier: Apache-2.0
//
// Worker-local scheduling policies. Every function here is a pure decision
// over explicit queue state; the simulator owns the state.

#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "hetersched/types.hpp"
#include "hetersched/workflow.hpp"

namespace hetersched {

enum class Policy : std::uint8_t { Fcfs, Pats };

const char* to_string(Policy p);
/// Accepts "fcfs" / "pats"; throws Error{ConfigError}.
Policy parse_policy(std::string_view s);

struct ReadyEntry {
  InstanceId id = kNoInstance;
  double speedup = 0.0;
  std::uint64_t seq = 0;
};

/// Ready operation instances. Both the FIFO order and the speedup order are
/// indexed, so each policy's pick is logarithmic; `order` decides which of
/// the two entries() reports.
class ReadyQueue {
 public:
  explicit ReadyQueue(Policy order = Policy::Fcfs) : order_(order) {}

  Policy order() const noexcept { return order_; }
  bool empty() const noexcept { return index_.empty(); }
  std::size_t size() const noexcept { return index_.size(); }
  bool contains(InstanceId id) const { return index_.contains(id); }

  /// Appends with the next insertion sequence number. Throws
  /// Error{DuplicateInstance}.
  void insert(InstanceId id, double speedup);
  ReadyEntry remove(InstanceId id);
  const ReadyEntry& at(InstanceId id) const;

  /// Smallest insertion seq. Throws Error{EmptyQueue}.
  const ReadyEntry& fifo_head() const;
  /// Largest speedup, earliest seq among ties.
  const ReadyEntry& max_speedup() const;
  /// Smallest speedup, earliest seq among ties.
  const ReadyEntry& min_speedup() const;

  /// Largest speedup among entries not in `excluded`; nullptr when none.
  const ReadyEntry* max_speedup_excluding(std::span<const InstanceId> excluded) const;

  /// Snapshot in policy order: (speedup desc, seq asc) for PATS, seq asc for FCFS.
  std::vector<ReadyEntry> entries() const;

 private:
  struct BySeq {
    bool operator()(const ReadyEntry& a, const ReadyEntry& b) const { return a.seq < b.seq; }
  };
  struct BySpeedup {
    bool operator()(const ReadyEntry& a, const ReadyEntry& b) const {
      if (a.speedup != b.speedup) return a.speedup > b.speedup;
      return a.seq < b.seq;
    }
  };

  Policy order_;
  std::uint64_t next_seq_ = 1;
  std::unordered_map<InstanceId, ReadyEntry> index_;
  std::set<ReadyEntry, BySeq> by_seq_;
  std::set<ReadyEntry, BySpeedup> by_speedup_;
};

/// Estimated GPU-vs-one-core speedup per operation id.
class SpeedupProfile {
 public:
  SpeedupProfile() = default;
  /// Speedup estimates taken from the workflow's operation specs.
  static SpeedupProfile from_workflow(const Workflow& wf);

  void set(const std::string& op_id, double speedup);
  /// Throws Error{UnknownOpId}.
  double at(std::string_view op_id) const;
  bool contains(std::string_view op_id) const;
  const std::map<std::string, double, std::less<>>& values() const noexcept { return values_; }

  /// Dense vector indexed by the workflow's global op index. Throws
  /// Error{UnknownOpId} if an operation is missing.
  std::vector<double> by_op_index(const Workflow& wf) const;

 private:
  std::map<std::string, double, std::less<>> values_;
};

/// Smallest positive value a perturbed estimate is clamped to.
inline constexpr double kSpeedupFloor = std::numeric_limits<double>::min();

/// Estimation-error injection: ops in `low_speedup_set` are scaled by
/// (1 + pct/100), all others by (1 - pct/100), clamped to kSpeedupFloor.
/// Throws Error{UnknownOpId} or Error{ConfigError} for pct outside [0,100].
SpeedupProfile perturb_profile(const SpeedupProfile& profile, double error_pct,
                               const std::vector<std::string>& low_speedup_set);

/// Inserts a ready instance keyed by its operation's estimate.
void insert_ready(ReadyQueue& queue, const OperationInstance& op, const Workflow& wf,
                  std::span<const double> speedups);

/// FIFO head regardless of device kind. Throws Error{EmptyQueue}.
InstanceId fcfs_select(ReadyQueue& queue, DeviceKind device);

/// GPU takes the largest estimated speedup, a CPU core the smallest.
InstanceId pats_select(ReadyQueue& queue, DeviceKind device);

using TransferImpactFn = std::function<double(InstanceId)>;

/// Data-locality-conscious pick for a GPU that just finished work.
/// `reuse` lists ready dependents whose inputs are resident on the GPU
/// (entries not in the queue are ignored). Without a profile the earliest
/// reusing entry wins; with one, the best reusing entry S_d beats the best
/// other entry S_q iff S_d >= S_q * (1 - transferImpact(S_q)).
InstanceId dl_select(ReadyQueue& queue, DeviceKind device, std::span<const InstanceId> reuse,
                     const TransferImpactFn& transfer_impact, bool use_profile);

struct SchedulerConfig {
  Policy policy = Policy::Fcfs;
  bool dl = false;
};

/// Dispatches to the configured policy.
InstanceId select(ReadyQueue& queue, DeviceKind device, const SchedulerConfig& cfg,
                  std::span<const InstanceId> reuse, const TransferImpactFn& transfer_impact);

}  // namespace hetersched
