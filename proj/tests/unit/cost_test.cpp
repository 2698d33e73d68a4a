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

#include <random>

#include "common/random_graphs.hpp"
#include "cost/cost.hpp"

namespace pipeplan {
namespace {

Operator MakeOp(OpId id, CostCurve fwd, CostCurve bwd, double params = 0,
                double act = 0, double out = 0) {
  Operator op;
  op.id = id;
  op.name = "op" + std::to_string(id);
  op.param_bytes = params;
  op.act_bytes_per_sample = act;
  op.out_bytes_per_sample = out;
  op.fwd_cost = std::move(fwd);
  op.bwd_cost = std::move(bwd);
  return op;
}

StageCostInput Input(std::vector<Operator> ops, int b, int d) {
  StageCostInput in;
  in.ops = std::move(ops);
  in.micro_batch = b;
  in.dp_degree = d;
  return in;
}

TEST(EstimateTpsTest, LinearCurveGivesConstantTps) {
  const Operator op =
      MakeOp(0, CostCurve::Affine(0, 1), CostCurve::Affine(0, 2));
  for (int b : {1, 2, 4, 8, 16}) {
    EXPECT_DOUBLE_EQ(EstimateTps(Input({op}, b, 1)), 3.0) << "b=" << b;
  }
}

TEST(EstimateTpsTest, TableCurveRewardsLargerMicroBatches) {
  const Operator op = MakeOp(0, CostCurve::Table({{1, 2}, {2, 3}}),
                             CostCurve::Zero());
  EXPECT_DOUBLE_EQ(EstimateTps(Input({op}, 1, 1)), 2.0);
  EXPECT_DOUBLE_EQ(EstimateTps(Input({op}, 2, 1)), 1.5);
}

TEST(EstimateTpsTest, DataParallelStageByHand) {
  // Per-device slice of 2 samples:
  //   a: fwd 1 + 0.5*2 = 2, bwd 1*2 = 2
  //   b: fwd 1.5 (table), bwd 3 (table)
  // allreduce: 2 * (2-1)/2 * (1000 + 3000) / 100 = 40
  // TPS = (2 + 2 + 1.5 + 3 + 40) / 4 = 12.125
  const Operator a =
      MakeOp(0, CostCurve::Affine(1, 0.5), CostCurve::Affine(0, 1), 1000);
  const Operator b = MakeOp(1, CostCurve::Table({{1, 1}, {2, 1.5}, {4, 2}}),
                            CostCurve::Table({{1, 2}, {2, 3}, {4, 5}}), 3000);
  StageCostInput in = Input({a, b}, 4, 2);
  in.intra_bw = 100;
  const StageTimes t = ComputeStageTimes(in);
  EXPECT_DOUBLE_EQ(t.fwd_ms, 3.5);
  EXPECT_DOUBLE_EQ(t.bwd_ms, 5.0);
  EXPECT_DOUBLE_EQ(t.dp_sync_ms, 40.0);
  EXPECT_DOUBLE_EQ(EstimateTps(in), 12.125);
}

TEST(EstimateTpsTest, IndivisibleMicroBatchIsAnError) {
  const Operator op =
      MakeOp(0, CostCurve::Affine(0, 1), CostCurve::Affine(0, 2));
  try {
    EstimateTps(Input({op}, 3, 2));
    FAIL();
  } catch (const Error &e) {
    EXPECT_EQ(e.code(), ErrorCode::kIndivisibleMicroBatch);
  }
}

TEST(EstimateTpsTest, SingleDeviceWithoutCommIsSumOverB) {
  std::mt19937 rng(3);
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<Operator> ops;
    for (int i = 0; i < 4; ++i) {
      ops.push_back(MakeOp(i, testing::RandomTable(rng),
                           testing::RandomTable(rng)));
    }
    for (int b : {1, 2, 4, 8}) {
      double sum = 0.0;
      for (const Operator &op : ops) {
        sum += op.fwd_cost.Eval(b) + op.bwd_cost.Eval(b);
      }
      EXPECT_DOUBLE_EQ(EstimateTps(Input(ops, b, 1)), sum / b);
    }
  }
}

TEST(EstimateTpsTest, InboundTensorsAreChargedBothWays) {
  const Operator op = MakeOp(0, CostCurve::Zero(), CostCurve::Zero());
  StageCostInput in = Input({op}, 2, 1);
  in.inbound_bytes_per_sample = {500};
  in.boundary_link = {1000, 0.25};
  const StageTimes t = ComputeStageTimes(in);
  EXPECT_DOUBLE_EQ(t.comm_in_ms, 1.25);
  EXPECT_DOUBLE_EQ(t.comm_out_ms, 1.25);
}

TEST(CommTimeTest, AffineInBytes) {
  EXPECT_DOUBLE_EQ(CommTime(0, 4, {1000, 0.5}), 0.5);
  EXPECT_DOUBLE_EQ(CommTime(1000, 2, {1000, 0}), 2.0);
  const LinkSpec link{250, 0.3};
  EXPECT_DOUBLE_EQ(CommTime(100, 4, link) - link.latency,
                   2 * (CommTime(100, 2, link) - link.latency));
}

TEST(StageMemoryTest, WeightsAndActivations) {
  const Operator act = MakeOp(0, CostCurve::Zero(), CostCurve::Zero(), 0, 1e6);
  MemoryBreakdown m = StageMemory({act}, 4, 1, 2.0);
  EXPECT_DOUBLE_EQ(m.weight_bytes, 0.0);
  EXPECT_DOUBLE_EQ(m.activation_bytes, 4e6);
  const Operator w = MakeOp(0, CostCurve::Zero(), CostCurve::Zero(), 100e6);
  m = StageMemory({w}, 0, 2, 2.0);
  EXPECT_DOUBLE_EQ(m.weight_bytes, 100e6);
  EXPECT_DOUBLE_EQ(m.activation_bytes, 0.0);
  EXPECT_DOUBLE_EQ(m.total(), 100e6);
}

TEST(StageMemoryTest, LinearInInflightSamples) {
  const Operator op =
      MakeOp(0, CostCurve::Zero(), CostCurve::Zero(), 5e5, 3e3);
  for (int d : {1, 2, 4}) {
    const double base = StageMemory({op}, 0, d, 2.0).total();
    for (int i = 1; i <= 16; ++i) {
      EXPECT_DOUBLE_EQ(StageMemory({op}, i, d, 2.0).total() - base,
                       3e3 * i / d);
    }
  }
}

TEST(StageMemoryTest, HalvingInflightHalvesActivations) {
  // Same stage storing 2 instead of 4 micro-batches.
  const Operator op = MakeOp(0, CostCurve::Zero(), CostCurve::Zero(), 1e6, 1e6);
  EXPECT_DOUBLE_EQ(StageMemory({op}, 4, 1, 2.0).activation_bytes,
                   2 * StageMemory({op}, 2, 1, 2.0).activation_bytes);
}

TEST(CostModelTest, ChargesDistinctExternalProducersToConsumer) {
  std::vector<Operator> ops = {
      MakeOp(0, CostCurve::Zero(), CostCurve::Zero(), 0, 0, 100),
      MakeOp(1, CostCurve::Zero(), CostCurve::Zero(), 0, 0, 300),
      MakeOp(2, CostCurve::Affine(0, 1), CostCurve::Affine(0, 1)),
      MakeOp(3, CostCurve::Affine(0, 1), CostCurve::Affine(0, 1))};
  const ComputationGraph g(ops, {{0, 2}, {0, 3}, {1, 3}});
  DeviceCluster c;
  c.inter_bw = 100;
  c.intra_bw = 1;
  c.mem_per_device = 1;
  const CostModel cost(g, c);
  // Producer 0 counted once even though it feeds both ops.
  const StageTimes t = cost.Times({2, 3}, 2, 1);
  EXPECT_DOUBLE_EQ(t.comm_in_ms, (100.0 + 300.0) * 2 / 100);
  EXPECT_DOUBLE_EQ(cost.Tps({2, 3}, 2, 1), (8.0 + 2 * t.comm_in_ms) / 2);
  EXPECT_DOUBLE_EQ(cost.BoundaryBytes({0, 1}, {3}), 400.0);
  EXPECT_DOUBLE_EQ(cost.BoundaryBytes({0, 1}, {2}), 100.0);
  // A stage with no external producers pays nothing.
  EXPECT_DOUBLE_EQ(cost.Times({0, 1, 2, 3}, 2, 1).comm_in_ms, 0.0);
}

TEST(CostModelTest, ScalingCurvesScalesTps) {
  std::mt19937 rng(11);
  const ComputationGraph g = testing::RandomSpGraph(rng, 5, 1e3, 1e3, 0.0);
  std::vector<Operator> scaled = g.ops();
  for (Operator &op : scaled) {
    op.fwd_cost = op.fwd_cost.Scaled(3.0);
    op.bwd_cost = op.bwd_cost.Scaled(3.0);
  }
  const ComputationGraph h(scaled, g.edges());
  DeviceCluster c;
  c.mem_per_device = 1;
  const CostModel cg(g, c), ch(h, c);
  for (int b : {1, 2, 4, 8}) {
    EXPECT_NEAR(ch.Tps(g.OpIds(), b, 1), 3.0 * cg.Tps(g.OpIds(), b, 1), 1e-9);
  }
}

}  // namespace
}  // namespace pipeplan
