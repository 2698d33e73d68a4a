/* Copyright 2026 The pipeplan Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#include <gtest/gtest.h>

#include <map>

#include "model/model.hpp"
#include "oracle/oracle.hpp"
#include "sched/sched.hpp"
#include "sim/sim.hpp"

namespace pipeplan {
namespace {

ComputationGraph UnitGraph(int n, std::vector<Edge> edges,
                           double params = 1e3, double act = 1e3) {
  std::vector<Operator> ops;
  for (int i = 0; i < n; ++i) {
    Operator op;
    op.id = i;
    op.name = "op" + std::to_string(i);
    op.param_bytes = params;
    op.act_bytes_per_sample = act;
    op.fwd_cost = CostCurve::Affine(0, 1);
    op.bwd_cost = CostCurve::Affine(0, 1);
    ops.push_back(op);
  }
  return ComputationGraph(ops, edges);
}

DeviceCluster BigCluster(int devices) {
  DeviceCluster c;
  c.num_devices = devices;
  c.mem_per_device = 1e12;
  c.intra_bw = 1e9;
  c.inter_bw = 1e9;
  return c;
}

// One stage per operator with the given micro-batch sizes.
StageGraph PerOpStages(const ComputationGraph &g, std::vector<int> b, int B) {
  std::vector<StageSpec> specs;
  for (size_t i = 0; i < b.size(); ++i) {
    specs.push_back({{static_cast<OpId>(i)}, b[i], 1, 1});
  }
  return AssembleStageGraph(g, specs, B);
}

// Simulated minimum for stage x feeding stage y with the given configs.
int OracleTwoStage(const InFlightQuery &q, int B) {
  StageGraph s;
  s.mini_batch = B;
  Stage x, y;
  x.id = 0;
  x.op_ids = {0};
  x.devices = {0};
  x.micro_batch = q.b_x;
  x.sched_cfg = {0, q.b_x, q.k_x};
  y.id = 1;
  y.op_ids = {1};
  y.devices = {1};
  y.micro_batch = q.b_y;
  y.sched_cfg = {q.i_y, q.b_y, q.k_y};
  s.stages = {x, y};
  s.edges = {{0, 1}};
  return MinInflightSearch(s, 0);
}

TEST(ComputeInFlightTest, DocumentedRows) {
  InFlightResult r = ComputeInFlight({1, 1, 1, 2, 4});
  EXPECT_EQ(r.samples, 6);
  EXPECT_EQ(r.row, 9);
  for (int b : {1, 2, 4}) {
    for (int i = b; i <= 4 * b; i += b) {
      r = ComputeInFlight({1, b, 1, b, i});
      EXPECT_EQ(r.samples, i + b);
      EXPECT_EQ(r.row, 7);
    }
  }
  r = ComputeInFlight({2, 2, 1, 1, 3});
  EXPECT_EQ(r.samples, 8);
  EXPECT_EQ(r.row, 10);
}

TEST(ComputeInFlightTest, DocumentedRowsAgreeWithSimulation) {
  for (const InFlightQuery &q :
       {InFlightQuery{1, 1, 1, 2, 4}, InFlightQuery{1, 2, 1, 2, 4},
        InFlightQuery{2, 2, 1, 1, 3}, InFlightQuery{1, 4, 1, 4, 8}}) {
    EXPECT_EQ(RequiredInFlight(q, 16), OracleTwoStage(q, 16))
        << q.k_x << ' ' << q.b_x << ' ' << q.k_y << ' ' << q.b_y << ' '
        << q.i_y;
  }
}

TEST(ComputeInFlightTest, OneHandCheckedQueryPerRow) {
  // {k_x, b_x, k_y, b_y, i_y}, expected row, expected samples. Each query
  // was checked by hand to fail every earlier row's condition.
  struct Case {
    InFlightQuery q;
    int row;
    int samples;
  };
  const std::vector<Case> cases = {
      {{2, 1, 4, 1, 4}, 1, 4 + 2 * 1},          // M=1 < X=2 < Y=4
      {{1, 2, 2, 2, 4}, 2, 4 + 2},              // M=X=2 < Y=4
      {{8, 1, 2, 2, 4}, 3, 4 + 8 - 4 + 2 * 2},  // 1 <= 2 < Y=4 < X=8
      {{4, 1, 1, 2, 4}, 4, 4 + 4},              // 1 <= b_y=Y=2 < X=4
      {{4, 2, 4, 1, 4}, 5, 4 + 8 - 4 + 2 * 2},  // 1 <= 2 < Y=4 < X=8
      {{4, 2, 2, 1, 3}, 6, 3 + 8},              // 1 <= b_x=Y=2 < X=8
      {{1, 2, 1, 2, 4}, 7, 4 + 2},              // M=Y=X=2
      {{4, 1, 2, 2, 4}, 8, 4 + 2 * 2},          // M=2 < Y=X=4
      {{1, 1, 1, 2, 4}, 9, 4 + 2},              // X=1 < b_y=Y=2
      {{2, 2, 1, 1, 3}, 10, 3 + 4 - 1 + 2},     // Y=1 < b_x=2 <= X=4
  };
  for (const Case &c : cases) {
    const InFlightResult r = ComputeInFlight(c.q);
    EXPECT_EQ(r.row, c.row);
    EXPECT_EQ(r.samples, c.samples) << "row " << c.row;
    // The rounded value matches the simulated minimum when the mini-batch
    // is large enough that the pipeline reaches steady state.
    EXPECT_EQ(RequiredInFlight(c.q, 32), OracleTwoStage(c.q, 32))
        << "row " << c.row;
  }
}

TEST(ComputeInFlightTest, OutsideTheDomainIsReported) {
  try {
    ComputeInFlight({0, 1, 1, 1, 1});
    FAIL();
  } catch (const Error &e) {
    EXPECT_EQ(e.code(), ErrorCode::kNoConditionMatches);
  }
  EXPECT_THROW(ComputeInFlight({1, 1, 1, -2, 1}), Error);
}

TEST(RequiredInFlightTest, RoundsToProducerMicroBatchesAndCaps) {
  // Row 9 gives 4 + 2 = 6 for b_x = 4: rounded up to 8.
  EXPECT_EQ(RequiredInFlight({1, 4, 1, 2, 4}, 16),
            ComputeInFlight({1, 4, 1, 2, 4}).samples % 4 == 0
                ? ComputeInFlight({1, 4, 1, 2, 4}).samples
                : (ComputeInFlight({1, 4, 1, 2, 4}).samples / 4 + 1) * 4);
  EXPECT_EQ(RequiredInFlight({1, 2, 1, 2, 14}, 16), 16);
}

TEST(ChooseKTest, Examples) {
  // Uniform b with 1F1B successors: k = 1.
  EXPECT_EQ(ChooseK(2, {{1, 2, 4}}, 16), 1);
  // Sink stage: k = 1, one micro-batch in flight.
  EXPECT_EQ(ChooseK(4, {}, 16), 1);
  EXPECT_EQ(InFlightFor(1, 4, {}, 16), 4);
  // The smallest k attains the minimum over the search range.
  for (int b : {1, 2, 4}) {
    const std::vector<SuccessorConfig> succs = {{2, 4, 8}};
    const int k = ChooseK(b, succs, 16);
    const int best = InFlightFor(k, b, succs, 16);
    for (int kk = 1; kk * b <= 16; ++kk) {
      if (InFlightFor(kk, b, succs, 16) / b < kk) continue;
      EXPECT_LE(best, InFlightFor(kk, b, succs, 16));
      if (kk < k) EXPECT_LT(best, InFlightFor(kk, b, succs, 16));
    }
  }
}

TEST(ScheduleTasksTest, Examples) {
  EXPECT_EQ(ScheduleToString(ScheduleTasks({1, 1, 1}, 4)),
            "F0 B0 F1 B1 F2 B2 F3 B3");
  EXPECT_EQ(ScheduleToString(ScheduleTasks({4, 1, 2}, 8)),
            "F0 F1 F2 F3 B0 B1 F4 F5 B2 B3 F6 F7 B4 B5 B6 B7");
  EXPECT_EQ(ScheduleToString(ScheduleTasks({8, 2, 1}, 8)),
            "F0 F1 F2 F3 B0 B1 B2 B3");
  EXPECT_THROW(ScheduleTasks({12, 2, 1}, 8), Error);
}

TEST(ScheduleTasksTest, EverySchedulePassesC4WithPeakEqualToWarmUp) {
  for (int n = 1; n <= 16; ++n) {
    for (int l = 1; l <= n; ++l) {
      for (int k = 1; k <= l; ++k) {
        const TaskSchedule s = ScheduleTasks({l, 1, k}, n);
        ASSERT_EQ(static_cast<int>(s.size()), 2 * n);
        int next_f = 0, next_b = 0;
        for (const Task &t : s) {
          if (t.dir == Direction::kForward) {
            ASSERT_EQ(t.index, next_f++);
          } else {
            ASSERT_EQ(t.index, next_b++);
            ASSERT_LT(t.index, next_f);
          }
        }
        EXPECT_EQ(PeakInFlight(s), l) << n << ' ' << l << ' ' << k;
        EXPECT_EQ(WarmUpLength(s), l);
      }
    }
  }
}

TEST(ScheduleStageTest, MemoryBelowWeightsIsInfeasible) {
  const ComputationGraph g = UnitGraph(1, {}, 1e6, 1e3);
  DeviceCluster c = BigCluster(1);
  c.mem_per_device = 1e6;  // weights alone need 2e6
  const CostModel cost(g, c);
  for (int b : {1, 2, 4}) {
    EXPECT_FALSE(ScheduleStage(cost, {0}, b, 1, {}, 1, 8).feasible);
  }
  c.mem_per_device = 1e7;
  const CostModel roomy(g, c);
  const StageScheduleResult r = ScheduleStage(roomy, {0}, 2, 1, {}, 1, 8);
  ASSERT_TRUE(r.feasible);
  EXPECT_EQ(r.config.inflight_samples, 2);
  EXPECT_EQ(ScheduleToString(r.schedule), "F0 B0 F1 B1 F2 B2 F3 B3");
}

TEST(ScheduleStageGraphTest, UniformChainStaircase) {
  const ComputationGraph g = UnitGraph(4, {{0, 1}, {1, 2}, {2, 3}});
  const DeviceCluster c = BigCluster(4);
  const GraphScheduleResult r = ScheduleStageGraph(
      g, c, PerOpStages(g, {1, 1, 1, 1}, 8), KPolicy::kOneFOneB);
  ASSERT_TRUE(r.feasible);
  EXPECT_EQ(r.processing_order, (std::vector<StageId>{3, 2, 1, 0}));
  for (const Stage &st : r.graph.stages) {
    EXPECT_EQ(WarmUpLength(st.schedule), 4 - st.id);
    // Independent check: the simulated minimum ceiling for this stage.
    if (st.id < 3) {
      EXPECT_EQ(st.sched_cfg.inflight_samples, MinInflightSearch(r.graph, st.id));
    }
  }
}

TEST(ScheduleStageGraphTest, MotivatingGraphWarmsUpTwo) {
  // Three branches feeding a shared tail stage.
  const ComputationGraph g =
      UnitGraph(8, {{0, 1}, {1, 6}, {2, 3}, {3, 6}, {4, 5}, {5, 6}, {6, 7}});
  const DeviceCluster c = BigCluster(4);
  const StageGraph s = AssembleStageGraph(
      g, {{{0, 1}, 1, 1, 1}, {{2, 3}, 1, 1, 1}, {{4, 5}, 1, 1, 1},
          {{6, 7}, 1, 1, 1}},
      8);
  const GraphScheduleResult r = ScheduleStageGraph(g, c, s, KPolicy::kOneFOneB);
  ASSERT_TRUE(r.feasible);
  for (const Stage &st : r.graph.stages) {
    EXPECT_EQ(WarmUpLength(st.schedule), st.id == 3 ? 1 : 2) << st.id;
  }
  EXPECT_EQ(Simulate(g, c, r.graph).warm_up_microbatches, 2);
}

TEST(ScheduleStageGraphTest, ForkTakesTheLargerBranchRequirement) {
  // a -> {b (b=1), c (b=2)} -> d: the fork stage needs the max of the two
  // successor-derived values; confirmed against the simulated minimum.
  const ComputationGraph g = UnitGraph(4, {{0, 1}, {0, 2}, {1, 3}, {2, 3}});
  const DeviceCluster c = BigCluster(4);
  const GraphScheduleResult r = ScheduleStageGraph(
      g, c, PerOpStages(g, {1, 1, 2, 2}, 8), KPolicy::kOneFOneB);
  ASSERT_TRUE(r.feasible);
  std::map<OpId, const Stage *> by_op;
  for (const Stage &st : r.graph.stages) by_op[st.op_ids[0]] = &st;
  const Stage &a = *by_op[0];
  const int via_b = RequiredInFlight(
      {1, 1, 1, 1, by_op[1]->sched_cfg.inflight_samples}, 8);
  const int via_c = RequiredInFlight(
      {1, 1, 1, 2, by_op[2]->sched_cfg.inflight_samples}, 8);
  EXPECT_NE(via_b, via_c);
  EXPECT_EQ(a.sched_cfg.inflight_samples, std::max(via_b, via_c));
  EXPECT_EQ(a.sched_cfg.inflight_samples, MinInflightSearch(r.graph, a.id));
}

TEST(ScheduleStageGraphTest, PerStageMicroBatchesReduceInflight) {
  const ComputationGraph g = UnitGraph(3, {{0, 1}, {1, 2}});
  const DeviceCluster c = BigCluster(3);
  const GraphScheduleResult mixed = ScheduleStageGraph(
      g, c, PerOpStages(g, {1, 2, 4}, 16), KPolicy::kChoose);
  const GraphScheduleResult uniform = ScheduleStageGraph(
      g, c, PerOpStages(g, {4, 4, 4}, 16), KPolicy::kChoose);
  EXPECT_EQ(mixed.graph.stages[0].sched_cfg.inflight_samples, 10);
  EXPECT_EQ(uniform.graph.stages[0].sched_cfg.inflight_samples, 12);
  EXPECT_EQ(mixed.graph.stages[0].sched_cfg.inflight_samples,
            MinInflightSearch(mixed.graph, 0));
}

TEST(ScheduleStageGraphTest, ReportsStagesOverMemory) {
  const ComputationGraph g = UnitGraph(2, {{0, 1}}, 1e3, 1e6);
  DeviceCluster c = BigCluster(2);
  c.mem_per_device = 1.5e6;  // one sample fits, two do not
  const GraphScheduleResult r = ScheduleStageGraph(
      g, c, PerOpStages(g, {1, 1}, 4), KPolicy::kOneFOneB);
  EXPECT_FALSE(r.feasible);
  EXPECT_EQ(r.over_memory, std::vector<StageId>{0});
}

}  // namespace
}  // namespace pipeplan
