// SPDX-FileCopyrightText: Copyright (c) 2026 The hetersched Authors
// SPDX-License-Identifier: Apache-2.0

#include "hetersched/sched.hpp"

#include <algorithm>
#include <cmath>

namespace hetersched {

const char* to_string(Policy p) { return p == Policy::Pats ? "pats" : "fcfs"; }

Policy parse_policy(std::string_view s) {
  if (s == "fcfs") return Policy::Fcfs;
  if (s == "pats") return Policy::Pats;
  throw Error(ErrorCode::ConfigError, "unknown policy '" + std::string(s) + "'");
}

void ReadyQueue::insert(InstanceId id, double speedup) {
  if (index_.contains(id)) throw Error(ErrorCode::DuplicateInstance, "instance " + std::to_string(id));
  ReadyEntry e{id, speedup, next_seq_++};
  index_.emplace(id, e);
  by_seq_.insert(e);
  by_speedup_.insert(e);
}

ReadyEntry ReadyQueue::remove(InstanceId id) {
  auto it = index_.find(id);
  if (it == index_.end()) throw Error(ErrorCode::UnknownReference, "instance " + std::to_string(id) + " not queued");
  ReadyEntry e = it->second;
  index_.erase(it);
  by_seq_.erase(e);
  by_speedup_.erase(e);
  return e;
}

const ReadyEntry& ReadyQueue::at(InstanceId id) const {
  auto it = index_.find(id);
  if (it == index_.end()) throw Error(ErrorCode::UnknownReference, "instance " + std::to_string(id) + " not queued");
  return it->second;
}

const ReadyEntry& ReadyQueue::fifo_head() const {
  if (empty()) throw Error(ErrorCode::EmptyQueue, "ready queue is empty");
  return *by_seq_.begin();
}

const ReadyEntry& ReadyQueue::max_speedup() const {
  if (empty()) throw Error(ErrorCode::EmptyQueue, "ready queue is empty");
  return *by_speedup_.begin();
}

const ReadyEntry& ReadyQueue::min_speedup() const {
  if (empty()) throw Error(ErrorCode::EmptyQueue, "ready queue is empty");
  const double lowest = by_speedup_.rbegin()->speedup;
  // First entry of the lowest-speedup run is its earliest seq.
  return *by_speedup_.lower_bound(ReadyEntry{kNoInstance, lowest, 0});
}

const ReadyEntry* ReadyQueue::max_speedup_excluding(std::span<const InstanceId> excluded) const {
  for (const auto& e : by_speedup_) {
    if (std::find(excluded.begin(), excluded.end(), e.id) == excluded.end()) return &e;
  }
  return nullptr;
}

std::vector<ReadyEntry> ReadyQueue::entries() const {
  if (order_ == Policy::Pats) return {by_speedup_.begin(), by_speedup_.end()};
  return {by_seq_.begin(), by_seq_.end()};
}

SpeedupProfile SpeedupProfile::from_workflow(const Workflow& wf) {
  SpeedupProfile p;
  for (const auto& op : wf.ops()) p.set(op.spec->id, op.spec->speedup_estimate());
  return p;
}

void SpeedupProfile::set(const std::string& op_id, double speedup) {
  if (!(speedup > 0.0)) throw Error(ErrorCode::NonPositiveCost, "speedup of '" + op_id + "'");
  values_[op_id] = speedup;
}

double SpeedupProfile::at(std::string_view op_id) const {
  auto it = values_.find(op_id);
  if (it == values_.end()) throw Error(ErrorCode::UnknownOpId, std::string(op_id));
  return it->second;
}

bool SpeedupProfile::contains(std::string_view op_id) const { return values_.find(op_id) != values_.end(); }

std::vector<double> SpeedupProfile::by_op_index(const Workflow& wf) const {
  std::vector<double> out(wf.op_count());
  for (std::size_t i = 0; i < wf.op_count(); ++i) out[i] = at(wf.op(static_cast<std::uint32_t>(i)).spec->id);
  return out;
}

SpeedupProfile perturb_profile(const SpeedupProfile& profile, double error_pct,
                               const std::vector<std::string>& low_speedup_set) {
  if (!(error_pct >= 0.0 && error_pct <= 100.0)) {
    throw Error(ErrorCode::ConfigError, "estimate error must lie in [0,100]");
  }
  for (const auto& id : low_speedup_set) {
    if (!profile.contains(id)) throw Error(ErrorCode::UnknownOpId, id);
  }
  const double f = error_pct / 100.0;
  SpeedupProfile out;
  for (const auto& [id, s] : profile.values()) {
    const bool low = std::find(low_speedup_set.begin(), low_speedup_set.end(), id) != low_speedup_set.end();
    const double v = low ? s * (1.0 + f) : s * (1.0 - f);
    out.set(id, std::max(v, kSpeedupFloor));
  }
  return out;
}

void insert_ready(ReadyQueue& queue, const OperationInstance& op, const Workflow& wf,
                  std::span<const double> speedups) {
  if (op.state != OpState::Ready) {
    throw Error(ErrorCode::InvalidStructure, "instance " + std::to_string(op.id) + " is not ready");
  }
  (void)wf;
  queue.insert(op.id, speedups[op.op]);
}

InstanceId fcfs_select(ReadyQueue& queue, DeviceKind) {
  const InstanceId id = queue.fifo_head().id;
  queue.remove(id);
  return id;
}

InstanceId pats_select(ReadyQueue& queue, DeviceKind device) {
  const InstanceId id = device == DeviceKind::Gpu ? queue.max_speedup().id : queue.min_speedup().id;
  queue.remove(id);
  return id;
}

InstanceId dl_select(ReadyQueue& queue, DeviceKind device, std::span<const InstanceId> reuse,
                     const TransferImpactFn& transfer_impact, bool use_profile) {
  if (device != DeviceKind::Gpu) {
    return use_profile ? pats_select(queue, device) : fcfs_select(queue, device);
  }
  if (queue.empty()) throw Error(ErrorCode::EmptyQueue, "ready queue is empty");

  // D: reusing candidates still queued, best first.
  const ReadyEntry* best_reuse = nullptr;
  std::vector<InstanceId> in_queue;
  for (InstanceId id : reuse) {
    if (!queue.contains(id)) continue;
    in_queue.push_back(id);
    const ReadyEntry& e = queue.at(id);
    if (best_reuse == nullptr) {
      best_reuse = &e;
    } else if (use_profile) {
      if (e.speedup > best_reuse->speedup || (e.speedup == best_reuse->speedup && e.seq < best_reuse->seq)) {
        best_reuse = &e;
      }
    } else if (e.seq < best_reuse->seq) {
      best_reuse = &e;
    }
  }

  if (!use_profile) {
    const InstanceId id = best_reuse ? best_reuse->id : queue.fifo_head().id;
    queue.remove(id);
    return id;
  }

  const ReadyEntry* best_other = queue.max_speedup_excluding(in_queue);
  InstanceId pick;
  if (best_reuse == nullptr) {
    pick = best_other->id;
  } else if (best_other == nullptr) {
    pick = best_reuse->id;
  } else {
    const double ti = transfer_impact ? transfer_impact(best_other->id) : 0.0;
    pick = best_reuse->speedup >= best_other->speedup * (1.0 - ti) ? best_reuse->id : best_other->id;
  }
  queue.remove(pick);
  return pick;
}

InstanceId select(ReadyQueue& queue, DeviceKind device, const SchedulerConfig& cfg,
                  std::span<const InstanceId> reuse, const TransferImpactFn& transfer_impact) {
  if (cfg.dl && device == DeviceKind::Gpu) {
    return dl_select(queue, device, reuse, transfer_impact, cfg.policy == Policy::Pats);
  }
  return cfg.policy == Policy::Pats ? pats_select(queue, device) : fcfs_select(queue, device);
}

}  // namespace hetersched
