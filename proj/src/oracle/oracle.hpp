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

#include <cstdint>
#include <vector>

#include "model/model.hpp"

namespace pipeplan {

struct EnumerationBudget {
  int max_ops = 8;
  int max_devices = 4;
  int max_mini_batch = 16;
  double time_limit_s = 120.0;
};

// Smallest in-flight ceiling (samples) for `target` such that the stage graph
// completes without deadlock and with the same iteration time as when the
// target is unconstrained. Every stage carries (b, k) in sched_cfg; stages
// downstream of the target keep their configured in-flight values, ancestors
// of the target run unconstrained. Tasks take 1 ms per sample in each
// direction and transfers are free.
int MinInflightSearch(const StageGraph &skeleton, StageId target,
                      const EnumerationBudget &budget = {});

struct ExhaustiveResult {
  double bottleneck_tps = 0.0;
  StageGraph graph;  // scheduled
  int64_t partitions = 0;
  int64_t candidates = 0;
};

// Enumerates every convex partition with an acyclic quotient, every uniform
// power-of-two micro-batch size dividing B, and every assignment of
// data-parallel degrees (divisors of b) using at most all devices. Candidates
// are scheduled with 1F1B, checked against memory and simulated. Returns the
// minimum bottleneck TPS; throws kInfeasible when nothing fits and
// kBudgetExceeded outside the budget.
ExhaustiveResult ExhaustiveOptimize(const ComputationGraph &g,
                                    const DeviceCluster &cluster,
                                    int mini_batch, int threads = 1,
                                    const EnumerationBudget &budget = {});

}  // namespace pipeplan
