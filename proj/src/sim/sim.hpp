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

#include <functional>
#include <string>
#include <vector>

#include "cost/cost.hpp"
#include "model/model.hpp"

namespace pipeplan {

struct SimEvent {
  enum class Kind { kStart, kEnd, kCommEnd };
  double time = 0.0;
  StageId stage = 0;
  Task task;
  Kind kind = Kind::kStart;
  StageId peer = -1;  // destination stage for kCommEnd
};

struct TaskRecord {
  StageId stage = 0;
  Task task;
  double start = 0.0;
  double end = 0.0;
};

struct StageSimStats {
  StageId id = 0;
  int micro_batch = 1;
  int peak_inflight_microbatches = 0;
  int peak_inflight_samples = 0;
  int warm_up_microbatches = 0;
  double busy_ms = 0.0;
  double idle_ms = 0.0;
  double tps = 0.0;  // analytic time per sample from the cost model
};

struct DeviceMemory {
  int device = 0;
  double peak_bytes = 0.0;
};

struct SimReport {
  double iteration_ms = 0.0;
  std::vector<StageSimStats> stages;  // in stage-id order
  std::vector<DeviceMemory> devices;  // devices used by some stage
  int warm_up_microbatches = 0;       // max over source stages
  int depth = 0;
  double bottleneck_tps = 0.0;
  std::vector<TaskRecord> tasks;      // ordered by (start, stage, fw first, index)
  std::vector<SimEvent> trace;        // ordered by time
};

struct SimOptions {
  double weight_update_ms = 0.0;
  // Optional override of task durations (ms); used by reference searches.
  std::function<double(const Stage &, Direction)> duration;
  bool zero_comm = false;
};

// Executes one training iteration. Throws kDeadlock when tasks remain but
// none can start.
SimReport Simulate(const ComputationGraph &g, const DeviceCluster &cluster,
                   const StageGraph &s, const SimOptions &options = {});

// Smallest stage-1 in-flight ceiling for a two-stage chain that neither
// deadlocks nor slows the iteration. Stage 0 feeds stage 1; stage 1 keeps its
// configured schedule. Durations are proportional to micro-batch size.
int MeasureMinInflight(const StageGraph &two_stage_chain);

// Chrome trace-event JSON (one complete event per task, times in us).
std::string EmitTrace(const SimReport &report);
// Standalone SVG Gantt chart, one row per stage.
std::string EmitGantt(const SimReport &report);

}  // namespace pipeplan
