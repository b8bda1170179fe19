// SPDX-FileCopyrightText: Copyright (c) 2026 The hetersched Authors
// SPDX-License-Identifier: Apache-2.0
//
// Abstract workflow (stages of fine-grain operations) and its concrete
// instantiation against data chunks.

#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "hetersched/types.hpp"

namespace hetersched {

/// One fine-grain operation. The (cpu_cost, gpu_cost) pair is the function
/// variant: one implementation per device kind.
struct OperationSpec {
  std::string id;
  std::string stage;
  std::vector<std::string> deps;
  Tick cpu_cost = 0;
  Tick gpu_cost = 0;
  std::uint64_t input_bytes = 0;
  std::uint64_t output_bytes = 0;
  std::optional<double> speedup;
  std::optional<double> transfer_impact;

  /// cpu_cost / gpu_cost unless overridden.
  double speedup_estimate() const;
};

struct StageSpec {
  std::string id;
  std::vector<OperationSpec> ops;
  std::vector<std::string> stage_deps;
};

struct PipelineSpec {
  std::string name;
  std::vector<StageSpec> stages;
  std::uint32_t chunk_count = 1;
};

/// Throws Error{CycleDetected | UnknownReference | NonPositiveCost |
/// InvalidStructure} on the first problem found.
void validate(const PipelineSpec& spec);

/// Validated, index-based view of a PipelineSpec. Operations are numbered
/// globally in stage order; dependency lists hold global indices.
class Workflow {
 public:
  struct Op {
    const OperationSpec* spec = nullptr;
    std::uint32_t stage = 0;
    std::uint32_t local = 0;
    std::vector<std::uint32_t> deps;
    std::vector<std::uint32_t> dependents;
  };
  struct Stage {
    const StageSpec* spec = nullptr;
    std::uint32_t first_op = 0;
    std::uint32_t op_count = 0;
    std::vector<std::uint32_t> stage_deps;
    std::vector<std::uint32_t> dependents;
    /// Source stages read their input chunk from storage.
    bool reads_input = false;
  };

  explicit Workflow(PipelineSpec spec);
  Workflow(const Workflow&) = delete;
  Workflow& operator=(const Workflow&) = delete;

  const PipelineSpec& spec() const noexcept { return spec_; }
  std::uint32_t chunk_count() const noexcept { return spec_.chunk_count; }
  std::size_t stage_count() const noexcept { return stages_.size(); }
  std::size_t op_count() const noexcept { return ops_.size(); }
  const Stage& stage(std::uint32_t s) const { return stages_.at(s); }
  const Op& op(std::uint32_t i) const { return ops_.at(i); }
  std::span<const Op> ops() const noexcept { return ops_; }
  std::span<const Stage> stages() const noexcept { return stages_; }

  /// Throws Error{UnknownOpId}.
  std::uint32_t op_index(std::string_view id) const;
  std::optional<std::uint32_t> find_op(std::string_view id) const;

  /// Sum over operations of instances per chunk.
  std::size_t ops_per_chunk() const noexcept { return ops_.size(); }

 private:
  PipelineSpec spec_;
  std::vector<Stage> stages_;
  std::vector<Op> ops_;
  std::unordered_map<std::string, std::uint32_t> by_id_;
};

enum class StageState : std::uint8_t { Pending, Assigned, Done };

/// (data chunk, processing stage) tuple dispatched by the Manager.
struct StageInstance {
  std::uint32_t id = 0;
  std::uint32_t chunk = 0;
  std::uint32_t stage = 0;
  StageState state = StageState::Pending;
  /// Position in creation order; equals id under full replication.
  std::uint32_t order = 0;
  /// Instance ids of the same chunk's upstream stages.
  std::vector<std::uint32_t> depends_on;
};

/// Full replication: |chunks| x |stages| instances in chunk-major order.
std::vector<StageInstance> instantiate(const Workflow& wf, std::span<const std::uint32_t> chunks);

/// Convenience overload for chunks 0..chunk_count-1.
std::vector<StageInstance> instantiate(const Workflow& wf);

enum class OpState : std::uint8_t { Blocked, Ready, Uploading, Running, Downloading, Done };

const char* to_string(OpState s);

/// (data chunk, operation) tuple; the unit mapped onto a device.
struct OperationInstance {
  InstanceId id = 0;
  std::uint32_t chunk = 0;
  std::uint32_t stage_instance = 0;
  std::uint32_t op = 0;
  /// c_i: when the instance became ready. Meaningful once state >= Ready.
  Tick created = 0;
  OpState state = OpState::Blocked;
  std::optional<std::uint32_t> device;
};

/// Operation instances of one stage instance and their dependency counters.
class StageExecution {
 public:
  struct Completion {
    std::vector<InstanceId> newly_ready;
    bool stage_done = false;
  };

  StageExecution(const Workflow& wf, const StageInstance& si, InstanceId first_id, Tick now);

  std::uint32_t stage_instance() const noexcept { return stage_instance_; }
  std::uint32_t chunk() const noexcept { return chunk_; }
  InstanceId first_id() const noexcept { return first_id_; }
  Tick delivered_at() const noexcept { return delivered_; }
  std::span<const OperationInstance> ops() const noexcept { return ops_; }
  bool contains(InstanceId id) const noexcept {
    return id >= first_id_ && id - first_id_ < ops_.size();
  }
  const OperationInstance& op(InstanceId id) const { return ops_.at(id - first_id_); }
  std::vector<InstanceId> ready() const;
  bool done() const noexcept { return remaining_ == 0; }

  /// Moves the instance forward in its lifecycle; backward moves throw.
  void advance(InstanceId id, OpState next);
  void assign(InstanceId id, std::uint32_t device);

  /// Marks id done at `now`. Dependents whose dependencies are all done
  /// become ready with c_i = max(now, latest dependency completion).
  Completion complete(InstanceId id, Tick now);

 private:
  OperationInstance& mut(InstanceId id);

  const Workflow* wf_;
  std::uint32_t stage_instance_;
  std::uint32_t chunk_;
  InstanceId first_id_;
  Tick delivered_;
  std::vector<OperationInstance> ops_;
  std::vector<std::uint32_t> pending_deps_;
  std::vector<Tick> latest_dep_done_;
  std::size_t remaining_;
};

/// Instantiates the stage's operations for a stage instance delivered at `now`.
StageExecution expand(const Workflow& wf, const StageInstance& si, InstanceId first_id, Tick now);

}  // namespace hetersched
