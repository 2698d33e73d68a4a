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

#include <algorithm>

#include "io/workloads.hpp"
#include "sched/sched.hpp"

namespace pipeplan {

namespace {

Json SimSummaryToJson(const SimReport &r) {
  Json j;
  j["iteration_ms"] = r.iteration_ms;
  j["depth"] = r.depth;
  j["warm_up_microbatches"] = r.warm_up_microbatches;
  j["stage0_inflight_microbatches"] =
      r.stages.empty() ? 0 : r.stages.front().peak_inflight_microbatches;
  double peak = 0.0;
  for (const DeviceMemory &d : r.devices) peak = std::max(peak, d.peak_bytes);
  j["peak_memory_bytes"] = peak;
  return j;
}

}  // namespace

Json StrategySummaryToJson(const Strategy &s) {
  Json j;
  j["mode"] = s.mode == SearchMode::kGpp ? "gpp" : "spp";
  j["bottleneck_tps"] = s.bottleneck_tps;
  j["depth"] = s.depth;
  j["stages"] = s.graph.stages.size();
  std::vector<int> micro_batches;
  for (const Stage &st : s.graph.stages) micro_batches.push_back(st.micro_batch);
  j["micro_batches"] = micro_batches;
  j["peak_memory_bytes"] = s.peak_memory;
  j["search"] = StatsToJson(s.stats);
  return j;
}

CompareResult Compare(const ComputationGraph &g, const DeviceCluster &cluster,
                      const OptimizeOptions &options) {
  CompareResult r;
  OptimizeOptions gpp = options;
  gpp.mode = SearchMode::kGpp;
  OptimizeOptions spp = options;
  spp.mode = SearchMode::kSpp;
  r.gpp = Optimize(g, cluster, gpp);
  r.spp = Optimize(g, cluster, spp);
  r.gpp_sim = Simulate(g, cluster, r.gpp.graph);
  r.spp_sim = Simulate(g, cluster, r.spp.graph);
  r.ratio = r.gpp_sim.iteration_ms / r.spp_sim.iteration_ms;

  const int b = r.spp.graph.stages.front().micro_batch;
  StageGraph what_if = r.gpp.graph;
  bool ok = true;
  for (Stage &st : what_if.stages) {
    if (b % static_cast<int>(st.devices.size()) != 0) ok = false;
    st.micro_batch = b;
    st.sched_cfg.micro_batch = b;
    st.sched_cfg.k = 1;
  }
  if (ok) {
    // Memory is deliberately not enforced: this run only attributes gains.
    GraphScheduleResult s =
        ScheduleStageGraph(g, cluster, what_if, KPolicy::kOneFOneB);
    const double t = Simulate(g, cluster, s.graph).iteration_ms;
    r.has_breakdown = true;
    r.gpp_at_spp_batch_ms = t;
    r.warmup_gain = 1.0 - t / r.spp_sim.iteration_ms;
    r.efficiency_gain = 1.0 - r.gpp_sim.iteration_ms / t;
  }
  return r;
}

Json CompareToJson(const CompareResult &r) {
  Json j;
  Json gpp = StrategySummaryToJson(r.gpp);
  gpp["simulation"] = SimSummaryToJson(r.gpp_sim);
  Json spp = StrategySummaryToJson(r.spp);
  spp["simulation"] = SimSummaryToJson(r.spp_sim);
  j["gpp"] = gpp;
  j["spp"] = spp;
  j["iteration_time_ratio"] = r.ratio;
  if (r.has_breakdown) {
    j["breakdown"] = Json{{"gpp_at_spp_micro_batch_ms", r.gpp_at_spp_batch_ms},
                          {"warmup_gain", r.warmup_gain},
                          {"efficiency_gain", r.efficiency_gain}};
  } else {
    j["breakdown"] = nullptr;
  }
  return j;
}

}  // namespace pipeplan
