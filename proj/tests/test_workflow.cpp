// SPDX-FileCopyrightText: Copyright (c) 2026 The hetersched Authors
// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include <filesystem>

#include "hetersched/workload_io.hpp"

using namespace hetersched;

namespace {

OperationSpec op(std::string id, std::vector<std::string> deps, Tick cpu = 10, Tick gpu = 2) {
  OperationSpec o;
  o.id = std::move(id);
  o.deps = std::move(deps);
  o.cpu_cost = cpu;
  o.gpu_cost = gpu;
  return o;
}

PipelineSpec one_stage(std::vector<OperationSpec> ops, std::uint32_t chunks = 1) {
  PipelineSpec p;
  p.name = "t";
  p.chunk_count = chunks;
  StageSpec s;
  s.id = "s";
  for (auto& o : ops) o.stage = "s";
  s.ops = std::move(ops);
  p.stages.push_back(std::move(s));
  return p;
}

ErrorCode code_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "no error thrown";
  return ErrorCode::ConfigError;
}

PipelineSpec diamond() {
  return one_stage({op("A", {}), op("B", {"A"}), op("C", {"A"}), op("D", {"B", "C"})});
}

}  // namespace

TEST(Validate, SingleOpIsValid) { EXPECT_NO_THROW(validate(one_stage({op("A", {})}))); }

TEST(Validate, TwoCycle) {
  EXPECT_EQ(code_of([] { validate(one_stage({op("A", {"B"}), op("B", {"A"})})); }), ErrorCode::CycleDetected);
}

TEST(Validate, UnknownDependency) {
  EXPECT_EQ(code_of([] { validate(one_stage({op("A", {"Z"})})); }), ErrorCode::UnknownReference);
}

TEST(Validate, ZeroCost) {
  EXPECT_EQ(code_of([] { validate(one_stage({op("A", {}, 0, 3)})); }), ErrorCode::NonPositiveCost);
}

TEST(Validate, EmptyStagesRejected) {
  PipelineSpec p;
  EXPECT_EQ(code_of([&] { validate(p); }), ErrorCode::InvalidStructure);
}

TEST(Validate, StageCycle) {
  PipelineSpec p = one_stage({op("A", {})});
  StageSpec t;
  t.id = "t";
  t.ops = {op("B", {})};
  t.ops[0].stage = "t";
  t.stage_deps = {"s"};
  p.stages[0].stage_deps = {"t"};
  p.stages.push_back(t);
  EXPECT_EQ(code_of([&] { validate(p); }), ErrorCode::CycleDetected);
}

TEST(Instantiate, ChunkMajorOrder) {
  PipelineSpec p = one_stage({op("A", {})}, 3);
  StageSpec t;
  t.id = "t";
  t.ops = {op("B", {})};
  t.ops[0].stage = "t";
  t.stage_deps = {"s"};
  p.stages.push_back(t);
  const Workflow wf(p);
  const auto inst = instantiate(wf);
  ASSERT_EQ(inst.size(), 6u);
  for (std::uint32_t i = 0; i < 6; ++i) {
    EXPECT_EQ(inst[i].id, i);
    EXPECT_EQ(inst[i].chunk, i / 2);
    EXPECT_EQ(inst[i].stage, i % 2);
  }
  EXPECT_TRUE(inst[0].depends_on.empty());
  EXPECT_EQ(inst[1].depends_on, std::vector<std::uint32_t>{0});
}

TEST(Instantiate, SingleInstance) {
  const Workflow wf(one_stage({op("A", {})}));
  EXPECT_EQ(instantiate(wf).size(), 1u);
}

TEST(Instantiate, TileCountScales) {
  PipelineSpec p = load_workload(std::filesystem::path(HETERSCHED_SOURCE_DIR) / "pipelines" / "wsi.json");
  p.chunk_count = 36848;
  const Workflow wf(p);
  EXPECT_EQ(instantiate(wf).size(), 73696u);
}

TEST(Expand, ChainHasOneReadyOp) {
  const Workflow wf(one_stage({op("A", {}), op("B", {"A"}), op("C", {"B"})}));
  const auto si = instantiate(wf)[0];
  const StageExecution ex = expand(wf, si, 0, 100);
  EXPECT_EQ(ex.ready(), std::vector<InstanceId>{0});
  EXPECT_EQ(ex.op(0).created, 100u);
  EXPECT_EQ(ex.op(1).state, OpState::Blocked);
  EXPECT_EQ(ex.op(2).state, OpState::Blocked);
}

TEST(Expand, DiamondRoots) {
  const Workflow wf(diamond());
  const StageExecution ex = expand(wf, instantiate(wf)[0], 0, 0);
  EXPECT_EQ(ex.ready(), std::vector<InstanceId>{0});
}

TEST(Complete, DiamondReleasesBothBranches) {
  const Workflow wf(diamond());
  StageExecution ex = expand(wf, instantiate(wf)[0], 0, 0);
  const auto r = ex.complete(0, 5);
  EXPECT_EQ(r.newly_ready, (std::vector<InstanceId>{1, 2}));
  EXPECT_EQ(ex.op(1).created, 5u);
  EXPECT_EQ(ex.op(2).created, 5u);
  EXPECT_FALSE(r.stage_done);
  EXPECT_TRUE(ex.complete(1, 7).newly_ready.empty());
  const auto last = ex.complete(2, 6);
  EXPECT_EQ(last.newly_ready, std::vector<InstanceId>{3});
  EXPECT_EQ(ex.op(3).created, 7u);
  EXPECT_TRUE(ex.complete(3, 9).stage_done);
}

TEST(Complete, ChainReleasesOnlySuccessor) {
  const Workflow wf(one_stage({op("A", {}), op("B", {"A"}), op("C", {"B"})}));
  StageExecution ex = expand(wf, instantiate(wf)[0], 10, 0);
  EXPECT_EQ(ex.complete(10, 3).newly_ready, std::vector<InstanceId>{11});
}

TEST(Complete, DoubleCompletion) {
  const Workflow wf(one_stage({op("A", {})}));
  StageExecution ex = expand(wf, instantiate(wf)[0], 0, 0);
  ex.complete(0, 1);
  EXPECT_EQ(code_of([&] { ex.complete(0, 2); }), ErrorCode::DoubleCompletion);
}

TEST(Lifecycle, BackwardMoveThrows) {
  const Workflow wf(one_stage({op("A", {})}));
  StageExecution ex = expand(wf, instantiate(wf)[0], 0, 0);
  ex.advance(0, OpState::Running);
  EXPECT_ANY_THROW(ex.advance(0, OpState::Ready));
}

TEST(LoadWorkload, WsiShape) {
  const PipelineSpec p = load_workload(std::filesystem::path(HETERSCHED_SOURCE_DIR) / "pipelines" / "wsi.json");
  const Workflow wf(p);
  EXPECT_EQ(wf.stage_count(), 2u);
  EXPECT_EQ(wf.op_count(), 9u);
  EXPECT_EQ(wf.stage(1).stage_deps, std::vector<std::uint32_t>{0});
  EXPECT_TRUE(wf.stage(0).reads_input);
}

TEST(LoadWorkload, WsiProfileShape) {
  const Workflow wf(load_workload(std::filesystem::path(HETERSCHED_SOURCE_DIR) / "pipelines" / "wsi.json"));
  const auto& morph = *wf.op(wf.op_index("MorphOpen")).spec;
  EXPECT_NEAR(morph.speedup_estimate(), 1.13, 0.01);
  const double feat = wf.op(wf.op_index("FeaturesComp")).spec->speedup_estimate();
  for (const auto& o : wf.ops()) {
    if (o.stage == 0) EXPECT_LT(o.spec->speedup_estimate(), feat) << o.spec->id;
  }
  // Morph. Open: small share of CPU time, large share of GPU time.
  double cpu = 0, gpu = 0;
  for (const auto& o : wf.ops()) {
    cpu += static_cast<double>(o.spec->cpu_cost);
    gpu += static_cast<double>(o.spec->gpu_cost);
  }
  EXPECT_NEAR(static_cast<double>(morph.cpu_cost) / cpu, 0.04, 0.01);
  EXPECT_NEAR(static_cast<double>(morph.gpu_cost) / gpu, 0.23, 0.02);
  EXPECT_NEAR(cpu / gpu, 6.5, 0.3);
}

TEST(ParseWorkload, NegativeCost) {
  const char* doc = R"({"stages":[{"id":"s","ops":[{"id":"A","cpu_ms":-1,"gpu_ms":1}]}]})";
  EXPECT_EQ(code_of([&] { parse_workload_text(doc); }), ErrorCode::NonPositiveCost);
}

TEST(ParseWorkload, EmptyStages) {
  EXPECT_EQ(code_of([] { parse_workload_text(R"({"stages":[]})"); }), ErrorCode::InvalidStructure);
}

TEST(ParseWorkload, Malformed) {
  EXPECT_EQ(code_of([] { parse_workload_text("{"); }), ErrorCode::ParseError);
  EXPECT_EQ(code_of([] { parse_workload_text(R"({"stages":[{"ops":[]}]})"); }), ErrorCode::ParseError);
}

TEST(ParseWorkload, RoundTrip) {
  const PipelineSpec p = load_workload(std::filesystem::path(HETERSCHED_SOURCE_DIR) / "pipelines" / "wsi.json");
  const PipelineSpec q = parse_workload(workload_to_json(p));
  EXPECT_EQ(workload_to_json(q).dump(), workload_to_json(p).dump());
}

TEST(RandomWorkload, SeedReproducible) {
  RandomWorkloadParams p;
  p.seed = 1;
  p.ops = 15;
  EXPECT_EQ(workload_to_json(gen_random_workload(p)).dump(), workload_to_json(gen_random_workload(p)).dump());
  p.seed = 2;
  RandomWorkloadParams q = p;
  q.seed = 1;
  EXPECT_NE(workload_to_json(gen_random_workload(p)).dump(), workload_to_json(gen_random_workload(q)).dump());
}

TEST(RandomWorkload, DensityZeroIsBagOfTasks) {
  RandomWorkloadParams p;
  p.density = 0.0;
  p.ops = 12;
  for (const auto& s : gen_random_workload(p).stages) {
    for (const auto& o : s.ops) EXPECT_TRUE(o.deps.empty());
  }
}

TEST(RandomWorkload, SpeedupsInRange) {
  RandomWorkloadParams p;
  p.ops = 40;
  p.min_speedup = 2;
  p.max_speedup = 8;
  const Workflow wf(gen_random_workload(p));
  for (const auto& o : wf.ops()) {
    EXPECT_GE(o.spec->speedup_estimate(), 2.0 * 0.99);
    EXPECT_LE(o.spec->speedup_estimate(), 8.0 * 1.01);
  }
}

TEST(RandomWorkload, InvalidRange) {
  RandomWorkloadParams p;
  p.min_speedup = 0;
  EXPECT_EQ(code_of([&] { gen_random_workload(p); }), ErrorCode::ConfigError);
  p.min_speedup = 5;
  p.max_speedup = 4;
  EXPECT_EQ(code_of([&] { gen_random_workload(p); }), ErrorCode::ConfigError);
}

TEST(NonPipelined, SumsCostsAndBytes) {
  auto a = op("A", {}, 10, 2);
  a.input_bytes = 100;
  auto b = op("B", {"A"}, 20, 5);
  b.output_bytes = 50;
  const PipelineSpec m = non_pipelined(one_stage({a, b}, 4));
  ASSERT_EQ(m.stages.size(), 1u);
  ASSERT_EQ(m.stages[0].ops.size(), 1u);
  EXPECT_EQ(m.stages[0].ops[0].cpu_cost, 30u);
  EXPECT_EQ(m.stages[0].ops[0].gpu_cost, 7u);
  EXPECT_EQ(m.stages[0].ops[0].input_bytes + m.stages[0].ops[0].output_bytes, 150u);
  EXPECT_EQ(m.chunk_count, 4u);
}

TEST(LowSpeedupSet, LowerHalf) {
  auto a = op("A", {}, 10, 10);
  auto b = op("B", {}, 10, 1);
  auto c = op("C", {}, 10, 5);
  auto d = op("D", {}, 30, 10);
  auto set = default_low_speedup_set(one_stage({a, b, c, d}));
  std::sort(set.begin(), set.end());
  EXPECT_EQ(set, (std::vector<std::string>{"A", "C"}));
}

TEST(Units, MillisecondsRoundHalfUp) {
  EXPECT_EQ(ms_to_ticks(1.1), 1100u);
  EXPECT_EQ(ms_to_ticks(0.0005), 1u);
  EXPECT_EQ(round_ticks(2.4999), 2u);
  EXPECT_DOUBLE_EQ(ticks_to_seconds(2500000), 2.5);
}
