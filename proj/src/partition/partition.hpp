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
#include <optional>
#include <vector>

#include "model/model.hpp"

namespace pipeplan {

enum class SearchMode { kGpp, kSpp };

struct OptimizeOptions {
  int mini_batch = 1;
  SearchMode mode = SearchMode::kGpp;
  bool per_stage_schedules = false;
  double epsilon = 1e-3;  // bisection tolerance relative to MAXTPS
  int threads = 1;
  // Lets a stage take the tail of one branch together with the ops that
  // follow the branches' join.
  bool join_absorption = true;
};

struct SearchStats {
  int probes = 0;
  int64_t dp_states = 0;       // distinct memoized states over all probes
  int64_t dp_transitions = 0;  // combinations examined over all probes
  double max_tps = 0.0;
  double epsilon = 0.0;  // absolute
  double t_low = 0.0;
  double t_high = 0.0;
};

struct Strategy {
  StageGraph graph;  // scheduled
  double bottleneck_tps = 0.0;
  int depth = 0;
  double peak_memory = 0.0;
  SearchMode mode = SearchMode::kGpp;
  SearchStats stats;
};

// Powers of two dividing B.
std::vector<int> CandidateMicroBatches(int mini_batch);
// {1} by default; powers of two up to B/b in per-stage mode.
std::vector<int> CandidateKs(int micro_batch, int mini_batch, bool per_stage);

// Twice the TPS of the whole graph as one stage on one device at b = 1.
double MaxTps(const ComputationGraph &g, const DeviceCluster &cluster);

// Bisection over the bottleneck TPS. Throws kInfeasible when even MAXTPS
// admits no strategy and kNotSeriesParallel for non-SP graphs in GPP mode.
Strategy Optimize(const ComputationGraph &g, const DeviceCluster &cluster,
                  const OptimizeOptions &options);

// Same search restricted to a chain over the linearized operator order.
Strategy SppOptimize(const ComputationGraph &g, const DeviceCluster &cluster,
                     OptimizeOptions options);

// One feasibility probe: the best stage graph whose stages all have
// TPS <= t_max, or nullopt.
std::optional<StageGraph> SearchStageGraph(const ComputationGraph &g,
                                           const DeviceCluster &cluster,
                                           double t_max,
                                           const OptimizeOptions &options,
                                           SearchStats *stats = nullptr);

}  // namespace pipeplan
