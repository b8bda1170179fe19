// SPDX-FileCopyrightText: Copyright (c) 2026 The hetersched Authors
// SPDX-License-Identifier: Apache-2.0

#include "hetersched/workflow.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <unordered_set>

namespace hetersched {

namespace {

std::string join_path(const std::vector<std::string>& path) {
  std::string out;
  for (const auto& p : path) {
    if (!out.empty()) out += " -> ";
    out += p;
  }
  return out;
}

// Finds a cycle in a graph given as adjacency over names. Returns the cycle
// as a closed path, or an empty vector.
std::vector<std::string> find_cycle(const std::vector<std::string>& names,
                                    const std::vector<std::vector<std::size_t>>& edges) {
  enum class Mark : std::uint8_t { White, Grey, Black };
  std::vector<Mark> mark(names.size(), Mark::White);
  std::vector<std::size_t> stack;
  std::vector<std::string> cycle;

  std::function<bool(std::size_t)> visit = [&](std::size_t v) {
    mark[v] = Mark::Grey;
    stack.push_back(v);
    for (std::size_t w : edges[v]) {
      if (mark[w] == Mark::Grey) {
        auto it = std::find(stack.begin(), stack.end(), w);
        for (; it != stack.end(); ++it) cycle.push_back(names[*it]);
        cycle.push_back(names[w]);
        return true;
      }
      if (mark[w] == Mark::White && visit(w)) return true;
    }
    stack.pop_back();
    mark[v] = Mark::Black;
    return false;
  };

  for (std::size_t v = 0; v < names.size(); ++v) {
    if (mark[v] == Mark::White && visit(v)) return cycle;
  }
  return {};
}

}  // namespace

double OperationSpec::speedup_estimate() const {
  if (speedup) return *speedup;
  return static_cast<double>(cpu_cost) / static_cast<double>(gpu_cost);
}

void validate(const PipelineSpec& spec) {
  if (spec.stages.empty()) throw Error(ErrorCode::InvalidStructure, "pipeline has no stages");
  if (spec.chunk_count < 1) throw Error(ErrorCode::InvalidStructure, "chunk_count must be >= 1");

  std::unordered_map<std::string, std::size_t> stage_index;
  std::unordered_set<std::string> op_ids;
  for (std::size_t s = 0; s < spec.stages.size(); ++s) {
    const auto& st = spec.stages[s];
    if (!stage_index.emplace(st.id, s).second) {
      throw Error(ErrorCode::InvalidStructure, "duplicate stage id '" + st.id + "'");
    }
    if (st.ops.empty()) throw Error(ErrorCode::InvalidStructure, "stage '" + st.id + "' has no operations");
    for (const auto& op : st.ops) {
      if (!op_ids.insert(op.id).second) {
        throw Error(ErrorCode::InvalidStructure, "duplicate operation id '" + op.id + "'");
      }
      if (op.cpu_cost == 0 || op.gpu_cost == 0) {
        throw Error(ErrorCode::NonPositiveCost, "operation '" + op.id + "'");
      }
      if (op.speedup && !(*op.speedup > 0.0 && std::isfinite(*op.speedup))) {
        throw Error(ErrorCode::NonPositiveCost, "speedup of operation '" + op.id + "'");
      }
      if (op.transfer_impact && !(*op.transfer_impact >= 0.0 && *op.transfer_impact <= 1.0)) {
        throw Error(ErrorCode::InvalidStructure, "transfer_impact of '" + op.id + "' outside [0,1]");
      }
    }
  }

  // Operation DAG per stage.
  for (const auto& st : spec.stages) {
    std::unordered_map<std::string, std::size_t> local;
    std::vector<std::string> names;
    for (std::size_t i = 0; i < st.ops.size(); ++i) {
      local.emplace(st.ops[i].id, i);
      names.push_back(st.ops[i].id);
    }
    std::vector<std::vector<std::size_t>> edges(st.ops.size());
    for (std::size_t i = 0; i < st.ops.size(); ++i) {
      for (const auto& d : st.ops[i].deps) {
        auto it = local.find(d);
        if (it == local.end()) {
          throw Error(ErrorCode::UnknownReference,
                      "'" + d + "' (dependency of '" + st.ops[i].id + "' in stage '" + st.id + "')");
        }
        edges[i].push_back(it->second);
      }
    }
    if (auto cyc = find_cycle(names, edges); !cyc.empty()) {
      throw Error(ErrorCode::CycleDetected, "operation level: " + join_path(cyc));
    }
  }

  // Stage DAG.
  std::vector<std::string> names;
  std::vector<std::vector<std::size_t>> edges(spec.stages.size());
  for (std::size_t s = 0; s < spec.stages.size(); ++s) {
    names.push_back(spec.stages[s].id);
    for (const auto& d : spec.stages[s].stage_deps) {
      auto it = stage_index.find(d);
      if (it == stage_index.end()) {
        throw Error(ErrorCode::UnknownReference, "'" + d + "' (stage dependency of '" + spec.stages[s].id + "')");
      }
      edges[s].push_back(it->second);
    }
  }
  if (auto cyc = find_cycle(names, edges); !cyc.empty()) {
    throw Error(ErrorCode::CycleDetected, "stage level: " + join_path(cyc));
  }
}

Workflow::Workflow(PipelineSpec spec) : spec_(std::move(spec)) {
  validate(spec_);
  std::unordered_map<std::string, std::uint32_t> stage_index;
  for (std::uint32_t s = 0; s < spec_.stages.size(); ++s) stage_index.emplace(spec_.stages[s].id, s);

  stages_.resize(spec_.stages.size());
  for (std::uint32_t s = 0; s < spec_.stages.size(); ++s) {
    auto& st = stages_[s];
    const auto& ss = spec_.stages[s];
    st.spec = &ss;
    st.first_op = static_cast<std::uint32_t>(ops_.size());
    st.op_count = static_cast<std::uint32_t>(ss.ops.size());
    for (std::uint32_t i = 0; i < ss.ops.size(); ++i) {
      Op op;
      op.spec = &ss.ops[i];
      op.stage = s;
      op.local = i;
      by_id_.emplace(ss.ops[i].id, static_cast<std::uint32_t>(ops_.size()));
      ops_.push_back(std::move(op));
    }
  }
  for (auto& op : ops_) {
    for (const auto& d : op.spec->deps) {
      const std::uint32_t di = by_id_.at(d);
      op.deps.push_back(di);
    }
  }
  for (std::uint32_t i = 0; i < ops_.size(); ++i) {
    for (std::uint32_t d : ops_[i].deps) ops_[d].dependents.push_back(i);
  }
  for (std::uint32_t s = 0; s < stages_.size(); ++s) {
    for (const auto& d : spec_.stages[s].stage_deps) {
      const std::uint32_t ds = stage_index.at(d);
      stages_[s].stage_deps.push_back(ds);
      stages_[ds].dependents.push_back(s);
    }
    stages_[s].reads_input = stages_[s].stage_deps.empty();
  }
}

std::optional<std::uint32_t> Workflow::find_op(std::string_view id) const {
  auto it = by_id_.find(std::string(id));
  if (it == by_id_.end()) return std::nullopt;
  return it->second;
}

std::uint32_t Workflow::op_index(std::string_view id) const {
  if (auto i = find_op(id)) return *i;
  throw Error(ErrorCode::UnknownOpId, std::string(id));
}

std::vector<StageInstance> instantiate(const Workflow& wf, std::span<const std::uint32_t> chunks) {
  const auto stages = static_cast<std::uint32_t>(wf.stage_count());
  std::vector<StageInstance> out;
  out.reserve(chunks.size() * stages);
  for (std::size_t c = 0; c < chunks.size(); ++c) {
    const auto base = static_cast<std::uint32_t>(out.size());
    for (std::uint32_t s = 0; s < stages; ++s) {
      StageInstance si;
      si.id = base + s;
      si.order = si.id;
      si.chunk = chunks[c];
      si.stage = s;
      for (std::uint32_t d : wf.stage(s).stage_deps) si.depends_on.push_back(base + d);
      out.push_back(std::move(si));
    }
  }
  return out;
}

std::vector<StageInstance> instantiate(const Workflow& wf) {
  std::vector<std::uint32_t> chunks(wf.chunk_count());
  for (std::uint32_t c = 0; c < chunks.size(); ++c) chunks[c] = c;
  return instantiate(wf, chunks);
}

const char* to_string(OpState s) {
  switch (s) {
    case OpState::Blocked: return "blocked";
    case OpState::Ready: return "ready";
    case OpState::Uploading: return "uploading";
    case OpState::Running: return "running";
    case OpState::Downloading: return "downloading";
    case OpState::Done: return "done";
  }
  return "?";
}

StageExecution::StageExecution(const Workflow& wf, const StageInstance& si, InstanceId first_id, Tick now)
    : wf_(&wf),
      stage_instance_(si.id),
      chunk_(si.chunk),
      first_id_(first_id),
      delivered_(now) {
  const auto& st = wf.stage(si.stage);
  ops_.resize(st.op_count);
  pending_deps_.resize(st.op_count);
  latest_dep_done_.assign(st.op_count, now);
  remaining_ = st.op_count;
  for (std::uint32_t i = 0; i < st.op_count; ++i) {
    auto& oi = ops_[i];
    oi.id = first_id + i;
    oi.chunk = si.chunk;
    oi.stage_instance = si.id;
    oi.op = st.first_op + i;
    pending_deps_[i] = static_cast<std::uint32_t>(wf.op(oi.op).deps.size());
    if (pending_deps_[i] == 0) {
      oi.state = OpState::Ready;
      oi.created = now;
    }
  }
}

std::vector<InstanceId> StageExecution::ready() const {
  std::vector<InstanceId> out;
  for (const auto& oi : ops_) {
    if (oi.state == OpState::Ready) out.push_back(oi.id);
  }
  return out;
}

OperationInstance& StageExecution::mut(InstanceId id) {
  if (!contains(id)) throw Error(ErrorCode::UnknownReference, "instance " + std::to_string(id));
  return ops_[id - first_id_];
}

void StageExecution::advance(InstanceId id, OpState next) {
  auto& oi = mut(id);
  if (next < oi.state) {
    throw Error(ErrorCode::InvalidStructure, std::string("backward transition ") + to_string(oi.state) +
                                                 " -> " + to_string(next));
  }
  oi.state = next;
}

void StageExecution::assign(InstanceId id, std::uint32_t device) { mut(id).device = device; }

StageExecution::Completion StageExecution::complete(InstanceId id, Tick now) {
  auto& oi = mut(id);
  if (oi.state == OpState::Done) throw Error(ErrorCode::DoubleCompletion, "instance " + std::to_string(id));
  if (oi.state == OpState::Blocked) {
    throw Error(ErrorCode::InvalidStructure, "instance " + std::to_string(id) + " completed while blocked");
  }
  oi.state = OpState::Done;
  --remaining_;

  Completion out;
  const auto& op = wf_->op(oi.op);
  const auto base = wf_->stage(op.stage).first_op;
  for (std::uint32_t dep_global : op.dependents) {
    const std::uint32_t local = dep_global - base;
    latest_dep_done_[local] = std::max(latest_dep_done_[local], now);
    if (--pending_deps_[local] == 0) {
      auto& d = ops_[local];
      d.state = OpState::Ready;
      d.created = latest_dep_done_[local];
      out.newly_ready.push_back(d.id);
    }
  }
  out.stage_done = remaining_ == 0;
  return out;
}

StageExecution expand(const Workflow& wf, const StageInstance& si, InstanceId first_id, Tick now) {
  return StageExecution(wf, si, first_id, now);
}

}  // namespace hetersched
