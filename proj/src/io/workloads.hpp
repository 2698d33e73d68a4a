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

#include <string>
#include <vector>

#include "io/io.hpp"
#include "model/model.hpp"
#include "partition/partition.hpp"
#include "sim/sim.hpp"

namespace pipeplan {

// Synthetic workload generators. The topologies follow the published model
// shapes; per-operator costs and byte counts are fixed synthetic profiles
// (documented in README.md). `branches` <= 0 selects the preset default.
std::vector<std::string> PresetNames();
ComputationGraph GenerateWorkload(const std::string &preset, int branches = 0);
// Cluster the preset is calibrated for.
DeviceCluster PresetCluster(const std::string &preset, int branches = 0);
int PresetMiniBatch(const std::string &preset);

// Side-by-side GPP vs SPP evaluation.
struct CompareResult {
  Strategy gpp;
  Strategy spp;
  SimReport gpp_sim;
  SimReport spp_sim;
  double ratio = 0.0;  // gpp iteration time / spp iteration time
  // GPP's stage graph re-run at SPP's micro-batch size separates the gain
  // from a shallower pipeline from the gain of larger micro-batches.
  bool has_breakdown = false;
  double gpp_at_spp_batch_ms = 0.0;
  double warmup_gain = 0.0;      // 1 - T(gpp @ b_spp) / T(spp)
  double efficiency_gain = 0.0;  // 1 - T(gpp) / T(gpp @ b_spp)
};

CompareResult Compare(const ComputationGraph &g, const DeviceCluster &cluster,
                      const OptimizeOptions &options);
Json CompareToJson(const CompareResult &r);
// Summary block shared by optimize and compare output.
Json StrategySummaryToJson(const Strategy &s);

}  // namespace pipeplan
