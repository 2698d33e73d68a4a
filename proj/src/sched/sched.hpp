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

#pragma once

#include <vector>

#include "cost/cost.hpp"
#include "model/model.hpp"

namespace pipeplan {

// Producer stage x feeding successor stage y.
struct InFlightQuery {
  int k_x = 1;
  int b_x = 1;
  int k_y = 1;
  int b_y = 1;
  int i_y = 1;
};

struct InFlightResult {
  int samples = 0;  // raw table value
  int row = 0;      // 1-based table row that matched
};

// Evaluates the in-flight table. With M = max(b_x, b_y), X = k_x*b_x and
// Y = k_y*b_y, the rows are checked in order:
//   1  M < X < Y                 -> i_y + 2M
//   2  M = X < Y                 -> i_y + M
//   3  b_x <= b_y < Y < X        -> i_y + X - Y + 2 b_y
//   4  b_x <= b_y = Y < X        -> i_y + X
//   5  b_y <= b_x < Y < X        -> i_y + X - Y + 2 b_x
//   6  b_y <= b_x = Y < X        -> i_y + X
//   7  M = Y = X                 -> i_y + Y
//   8  M < Y = X                 -> i_y + 2M
//   9  b_x <= X < b_y <= Y       -> i_y + b_y
//   10 b_y <= Y < b_x <= X       -> i_y + X - Y + b_x
// Throws kNoConditionMatches when no row applies (including non-positive
// inputs).
InFlightResult ComputeInFlight(const InFlightQuery &q);

// The value a scheduler uses: the table result rounded up to a whole number
// of the producer's micro-batches and capped at the mini-batch size.
int RequiredInFlight(const InFlightQuery &q, int mini_batch);

struct SuccessorConfig {
  int k = 1;
  int micro_batch = 1;
  int inflight_samples = 1;
};

// In-flight samples for stage x with parameter k_x: max over successors, or
// k_x * b_x when x has no successors.
int InFlightFor(int k_x, int b_x, const std::vector<SuccessorConfig> &succs,
                int mini_batch);

// Smallest k_x in [1, B/b_x] minimizing InFlightFor; only values with a
// warm-up of at least k_x micro-batches are admissible.
int ChooseK(int b_x, const std::vector<SuccessorConfig> &succs, int mini_batch);

// Warm-up of i/b forwards, then alternating blocks of k backwards and k
// forwards until the forwards run out, then the remaining backwards.
TaskSchedule ScheduleTasks(const ScheduleConfig &c, int mini_batch);

struct StageScheduleResult {
  bool feasible = false;
  ScheduleConfig config;
  TaskSchedule schedule;
  MemoryBreakdown memory;
};

// Configures one stage given its own (b, k) and its successors.
StageScheduleResult ScheduleStage(const CostModel &cost,
                                  const std::vector<OpId> &ops, int b_f, int k_f,
                                  const std::vector<SuccessorConfig> &succs,
                                  int dp_degree, int mini_batch);

enum class KPolicy {
  kOneFOneB,  // k = 1 everywhere
  kChoose,    // per-stage argmin
  kKeep,      // keep each stage's existing k
};

struct GraphScheduleResult {
  bool feasible = false;
  StageGraph graph;                      // configured copy
  std::vector<StageId> processing_order; // reverse topological
  std::vector<StageId> over_memory;      // stages exceeding the budget
};

GraphScheduleResult ScheduleStageGraph(const ComputationGraph &g,
                                       const DeviceCluster &cluster,
                                       const StageGraph &s, KPolicy policy);

}  // namespace pipeplan
