// SPDX-FileCopyrightText: Copyright (c) 2026 The hetersched Authors
// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include <sstream>

#include "hetersched/simcore.hpp"
#include "hetersched/workload_io.hpp"

using namespace hetersched;

namespace {

PipelineSpec chain_or_bag(unsigned n, bool chain, Tick cpu, Tick gpu) {
  PipelineSpec p;
  StageSpec s;
  s.id = "s";
  for (unsigned i = 0; i < n; ++i) {
    OperationSpec o;
    o.id = "op" + std::to_string(i);
    o.stage = "s";
    if (chain && i > 0) o.deps = {"op" + std::to_string(i - 1)};
    o.cpu_cost = cpu;
    o.gpu_cost = gpu;
    s.ops.push_back(o);
  }
  p.stages.push_back(s);
  return p;
}

Tick run(const Workflow& wf, const NodeConfig& cfg, Policy pol = Policy::Fcfs) {
  PolicyConfig pc;
  pc.sched.policy = pol;
  NodeEngine e(wf, cfg, pc);
  for (const auto& si : instantiate(wf)) e.deliver(si, 0);
  return e.run_to_completion();
}

Device dev(Tick available) {
  Device d;
  d.finish = d.available = available;
  return d;
}

}  // namespace

TEST(Transfer, ResidentInputsCostNothing) {
  TransferModel m{100, 4000.0, 0.1};
  EXPECT_EQ(m.time(0), 0u);
  OperationSpec op;
  op.input_bytes = 4000000;
  op.output_bytes = 10;
  const auto t = transfer_time(op, 1.0, true, m);
  EXPECT_EQ(t.upload, 0u);
  EXPECT_EQ(t.download, 0u);
}

TEST(Transfer, OneHop) {
  // 4 MB at 4 MB/ms with 0.1 ms latency.
  TransferModel m{ms_to_ticks(0.1), 4000000.0 / 1000.0, 0.1};
  EXPECT_EQ(m.time(4000000, 1), ms_to_ticks(1.1));
}

TEST(Transfer, TwoHops) {
  TransferModel m{ms_to_ticks(0.1), 4000.0, 0.1};
  EXPECT_EQ(m.time(4000000, 2), ms_to_ticks(1.21));
  EXPECT_DOUBLE_EQ(m.multiplier(2, 3), 1.3);
}

TEST(Phases, SequentialWithoutPrefetch) {
  GpuChannels ch;
  const auto p = schedule_gpu_phases(2, 10, 1, ch, false, 0);
  EXPECT_EQ(p.download_end, 13u);
  EXPECT_EQ(p.compute_start, 2u);
}

TEST(Phases, PrefetchWaitsForComputeChannel) {
  GpuChannels ch;
  ch.compute_free = 5;
  const auto p = schedule_gpu_phases(2, 10, 1, ch, true, 0);
  EXPECT_EQ(p.upload_end, 2u);
  EXPECT_EQ(p.compute_start, 5u);
  EXPECT_EQ(p.compute_end, 15u);
  EXPECT_EQ(p.download_end, 16u);
}

TEST(Phases, PrefetchOverlapsNextUpload) {
  GpuChannels ch;
  const auto a = schedule_gpu_phases(2, 10, 1, ch, true, 0);
  const auto b = schedule_gpu_phases(3, 4, 1, ch, true, 2);
  EXPECT_LT(b.upload_start, a.compute_end);
  EXPECT_EQ(b.compute_start, std::max(a.compute_end, b.upload_end));
  GpuChannels seq;
  schedule_gpu_phases(2, 10, 1, seq, false, 0);
  const auto c = schedule_gpu_phases(3, 4, 1, seq, false, 2);
  EXPECT_GE(c.upload_start, a.download_end);
}

TEST(FinishTime, EmptySumIsZero) {
  NodeConfig cfg;
  cfg.cpu_cores = 1;
  const Workflow wf(chain_or_bag(1, false, 5, 5));
  NodeEngine e(wf, cfg, PolicyConfig{});
  EXPECT_EQ(finish_time(e.devices()[0]), 0u);
}

TEST(FinishTime, SumOfOps) {
  NodeConfig cfg;
  cfg.cpu_cores = 1;
  PipelineSpec p = chain_or_bag(2, true, 5, 5);
  p.stages[0].ops[1].cpu_cost = 7;
  const Workflow wf(p);
  NodeEngine e(wf, cfg, PolicyConfig{});
  e.deliver(instantiate(wf)[0], 0);
  e.run_to_completion();
  EXPECT_EQ(finish_time(e.devices()[0]), 12u);
}

TEST(FinishTime, IdleTermCounts) {
  NodeConfig cfg;
  cfg.gpus = 1;
  cfg.cpu_cores = 0;
  cfg.transfer = TransferModel{3, 1e9, 0.0};
  PipelineSpec p = chain_or_bag(1, false, 100, 10);
  p.stages[0].ops[0].input_bytes = 1;
  const Workflow wf(p);
  NodeEngine e(wf, cfg, PolicyConfig{});
  e.deliver(instantiate(wf)[0], 0);
  e.run_to_completion();
  const Device& d = e.devices()[0];
  EXPECT_EQ(finish_time(d), 14u);  // upload of 1 byte = 3 + 1
  EXPECT_EQ(d.compute_time + d.transfer_time + d.wait_time, finish_time(d));
}

TEST(NextTaskTime, Branches) {
  const std::vector<Tick> ready{4, 9};
  EXPECT_EQ(next_task_time(ready, 4), 4u);
  const std::vector<Tick> later{9};
  EXPECT_EQ(next_task_time(later, 4), 9u);
  EXPECT_EQ(next_task_time({}, 4), kNever);
}

TEST(NextMappingTime, MaxOfDeviceAndTask) {
  const std::vector<Tick> task{5};
  std::vector<Device> d{dev(3)};
  EXPECT_EQ(next_mapping_time(d, task, 0), 5u);
  d = {dev(8)};
  EXPECT_EQ(next_mapping_time(d, task, 0), 8u);
  d = {dev(0), dev(0)};
  const std::vector<Tick> zero{0};
  EXPECT_EQ(next_mapping_time(d, zero, 0), 0u);
  EXPECT_EQ(next_mapping_time(d, {}, 0), kNever);
}

TEST(PickProcessor, ArgminLowestIndex) {
  std::vector<Device> d{dev(4), dev(2), dev(9)};
  EXPECT_EQ(pick_processor(d), 1u);
  d = {dev(3), dev(3)};
  EXPECT_EQ(pick_processor(d), 0u);
  d = {dev(7)};
  EXPECT_EQ(pick_processor(d), 0u);
}

TEST(Engine, PatsSendsHighSpeedupToGpu) {
  PipelineSpec p = chain_or_bag(2, false, 100, 10);
  p.stages[0].ops[1].cpu_cost = 20;  // B: speedup 2, A: speedup 10
  const Workflow wf(p);
  NodeConfig cfg;
  cfg.gpus = 1;
  cfg.cpu_cores = 1;
  for (Policy pol : {Policy::Pats, Policy::Fcfs}) {
    PolicyConfig pc;
    pc.sched.policy = pol;
    NodeEngine e(wf, cfg, pc);
    e.deliver(instantiate(wf)[0], 0);
    e.run_to_completion();
    ASSERT_EQ(e.assignments().size(), 2u);
    EXPECT_EQ(e.assignments()[0], (Assignment{0, 0, 0}));
    EXPECT_EQ(e.assignments()[1], (Assignment{1, 1, 0}));
  }
}

TEST(Engine, EmptyQueueWaitsForCreation) {
  const Workflow wf(chain_or_bag(1, false, 10, 10));
  NodeConfig cfg;
  cfg.cpu_cores = 1;
  NodeEngine e(wf, cfg, PolicyConfig{});
  e.deliver(instantiate(wf)[0], 40);
  EXPECT_EQ(e.next_mapping_time(), 40u);
  EXPECT_TRUE(e.assignments().empty());
  e.map_one();
  EXPECT_EQ(e.assignments()[0].time, 40u);
  EXPECT_THROW(e.map_one(), Error);
}

TEST(Engine, PerfectParallelism) {
  const Workflow wf(chain_or_bag(2, false, 10, 10));
  NodeConfig cfg;
  cfg.cpu_cores = 2;
  EXPECT_EQ(run(wf, cfg), 10u);
}

TEST(Engine, CriticalPath) {
  const Workflow wf(chain_or_bag(3, true, 10, 10));
  NodeConfig cfg;
  cfg.cpu_cores = 4;
  EXPECT_EQ(run(wf, cfg), 30u);
}

TEST(Engine, ContentionScalesCpuCosts) {
  const Workflow wf(chain_or_bag(1, false, 100, 10));
  NodeConfig cfg;
  cfg.cpu_cores = 3;
  cfg.cpu_contention = 0.1;
  NodeEngine e(wf, cfg, PolicyConfig{});
  EXPECT_EQ(e.cpu_cost(0, 0), 120u);
  EXPECT_EQ(e.gpu_cost(0, 0), 10u);
}

TEST(Engine, TraceCsvIsSortedAndDeterministic) {
  RandomWorkloadParams rp;
  rp.ops = 8;
  rp.chunks = 3;
  rp.max_bytes = 50000;
  const Workflow wf(gen_random_workload(rp));
  NodeConfig cfg;
  cfg.gpus = 2;
  cfg.cpu_cores = 3;
  cfg.transfer = TransferModel{5, 100.0, 0.0};
  cfg.record_trace = true;
  auto csv = [&] {
    PolicyConfig pc;
    pc.sched = SchedulerConfig{Policy::Pats, true};
    NodeEngine e(wf, cfg, pc);
    for (const auto& si : instantiate(wf)) e.deliver(si, 0);
    e.run_to_completion();
    std::ostringstream os;
    write_trace_csv(os, wf, e.trace());
    return os.str();
  };
  const std::string a = csv();
  EXPECT_EQ(a, csv());
  EXPECT_EQ(a.rfind("time_us,event,op_id,chunk_id,device_id\n", 0), 0u);
}

TEST(Engine, DlAvoidsRoundTrip) {
  PipelineSpec p = chain_or_bag(2, true, 1000, 10);
  for (auto& o : p.stages[0].ops) o.input_bytes = o.output_bytes = 10000;
  const Workflow wf(p);
  NodeConfig cfg;
  cfg.gpus = 1;
  cfg.cpu_cores = 0;
  cfg.transfer = TransferModel{0, 100.0, 0.0};
  auto bytes = [&](bool dl) {
    PolicyConfig pc;
    pc.sched.dl = dl;
    NodeEngine e(wf, cfg, pc);
    e.deliver(instantiate(wf)[0], 0);
    e.run_to_completion();
    return e.stats().transferred_bytes();
  };
  EXPECT_EQ(bytes(false), 40000u);
  EXPECT_EQ(bytes(true), 20000u);
}

TEST(Placement, ClosestUsesMinimumHops) {
  const auto l = apply_placement(PlacementMode::Closest, NodeTopology::keeneland(3), 5);
  EXPECT_EQ(l.hops, (std::vector<unsigned>{1, 1, 1}));
}

TEST(Placement, OsIsSeeded) {
  const auto topo = NodeTopology::keeneland(3);
  bool any_remote = false;
  for (std::uint64_t s = 0; s < 20; ++s) {
    const auto a = apply_placement(PlacementMode::Os, topo, s);
    EXPECT_EQ(a.hops, apply_placement(PlacementMode::Os, topo, s).hops);
    for (unsigned h : a.hops) {
      EXPECT_TRUE(h == 1 || h == 2);
      any_remote = any_remote || h == 2;
    }
  }
  EXPECT_TRUE(any_remote);
}

TEST(Placement, SingleSocketSameInBothModes) {
  const auto topo = NodeTopology::single_socket(3);
  for (std::uint64_t s = 0; s < 10; ++s) {
    EXPECT_EQ(apply_placement(PlacementMode::Os, topo, s).hops, apply_placement(PlacementMode::Closest, topo, s).hops);
  }
}

TEST(Placement, Parse) {
  EXPECT_EQ(parse_placement("os"), PlacementMode::Os);
  EXPECT_EQ(parse_placement("closest"), PlacementMode::Closest);
  EXPECT_THROW(parse_placement("numa"), Error);
}
