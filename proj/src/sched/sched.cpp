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

#include "sched/sched.hpp"

#include <algorithm>
#include <climits>
#include <map>

namespace pipeplan {

InFlightResult ComputeInFlight(const InFlightQuery &q) {
  const int bx = q.b_x, by = q.b_y, iy = q.i_y;
  const int X = q.k_x * q.b_x;
  const int Y = q.k_y * q.b_y;
  const int M = std::max(bx, by);
  auto none = [&]() {
    return Error(ErrorCode::kNoConditionMatches,
                 "no in-flight rule matches k_x=" + std::to_string(q.k_x) +
                     " b_x=" + std::to_string(bx) + " k_y=" +
                     std::to_string(q.k_y) + " b_y=" + std::to_string(by) +
                     " i_y=" + std::to_string(iy));
  };
  if (q.k_x < 1 || bx < 1 || q.k_y < 1 || by < 1 || iy < 1) throw none();

  if (M < X && X < Y) return {iy + 2 * M, 1};
  if (M == X && X < Y) return {iy + M, 2};
  if (bx <= by && by < Y && Y < X) return {iy + X - Y + 2 * by, 3};
  if (bx <= by && by == Y && Y < X) return {iy + X, 4};
  if (by <= bx && bx < Y && Y < X) return {iy + X - Y + 2 * bx, 5};
  if (by <= bx && bx == Y && Y < X) return {iy + X, 6};
  if (M == Y && Y == X) return {iy + Y, 7};
  if (M < Y && Y == X) return {iy + 2 * M, 8};
  if (bx <= X && X < by && by <= Y) return {iy + by, 9};
  if (by <= Y && Y < bx && bx <= X) return {iy + X - Y + bx, 10};
  throw none();
}

int RequiredInFlight(const InFlightQuery &q, int mini_batch) {
  const int raw = ComputeInFlight(q).samples;
  int rounded = (raw + q.b_x - 1) / q.b_x * q.b_x;
  if (mini_batch > 0) rounded = std::min(rounded, mini_batch);
  return rounded;
}

int InFlightFor(int k_x, int b_x, const std::vector<SuccessorConfig> &succs,
                int mini_batch) {
  if (succs.empty()) return std::min(k_x * b_x, mini_batch);
  int best = 0;
  for (const SuccessorConfig &y : succs) {
    InFlightQuery q{k_x, b_x, y.k, y.micro_batch, y.inflight_samples};
    best = std::max(best, RequiredInFlight(q, mini_batch));
  }
  return best;
}

int ChooseK(int b_x, const std::vector<SuccessorConfig> &succs, int mini_batch) {
  if (succs.empty()) return 1;
  const int n = mini_batch / b_x;
  int best_k = 1, best_i = INT_MAX;
  for (int k = 1; k <= n; ++k) {
    const int i = InFlightFor(k, b_x, succs, mini_batch);
    if (i / b_x < k) continue;
    if (i < best_i) {
      best_i = i;
      best_k = k;
    }
  }
  return best_k;
}

TaskSchedule ScheduleTasks(const ScheduleConfig &c, int mini_batch) {
  const int b = c.micro_batch;
  if (b < 1 || mini_batch % b != 0 || c.inflight_samples % b != 0 ||
      c.inflight_samples < b || c.k < 1) {
    throw Error(ErrorCode::kInvalidArgument,
                "schedule config must have b | B, b | i, i >= b and k >= 1");
  }
  const int n = mini_batch / b;
  const int warm = c.inflight_samples / b;
  if (warm > n) {
    throw Error(ErrorCode::kInvalidArgument,
                "warm-up of " + std::to_string(warm) + " exceeds " +
                    std::to_string(n) + " micro-batches");
  }
  TaskSchedule out;
  out.reserve(2 * n);
  int f = 0, bw = 0;
  for (; f < warm; ++f) out.push_back({Direction::kForward, f});
  while (f < n) {
    for (int j = 0; j < c.k && bw < f; ++j) out.push_back({Direction::kBackward, bw++});
    for (int j = 0; j < c.k && f < n; ++j) out.push_back({Direction::kForward, f++});
  }
  while (bw < n) out.push_back({Direction::kBackward, bw++});
  return out;
}

StageScheduleResult ScheduleStage(const CostModel &cost,
                                  const std::vector<OpId> &ops, int b_f, int k_f,
                                  const std::vector<SuccessorConfig> &succs,
                                  int dp_degree, int mini_batch) {
  StageScheduleResult r;
  r.config.micro_batch = b_f;
  r.config.k = k_f;
  r.config.inflight_samples = InFlightFor(k_f, b_f, succs, mini_batch);
  if (r.config.inflight_samples / b_f < k_f) return r;
  r.memory = cost.Memory(ops, r.config.inflight_samples, dp_degree);
  if (r.memory.total() > cost.cluster().mem_per_device * (1 + 1e-12)) return r;
  r.schedule = ScheduleTasks(r.config, mini_batch);
  r.feasible = true;
  return r;
}

GraphScheduleResult ScheduleStageGraph(const ComputationGraph &g,
                                       const DeviceCluster &cluster,
                                       const StageGraph &s, KPolicy policy) {
  GraphScheduleResult out;
  out.graph = s;
  CostModel cost(g, cluster);
  std::vector<StageId> order = s.TopologicalOrder();
  std::reverse(order.begin(), order.end());
  std::map<StageId, SuccessorConfig> done;
  out.feasible = true;
  for (StageId id : order) {
    Stage &st = out.graph.stages[out.graph.IndexOf(id)];
    std::vector<SuccessorConfig> succs;
    for (StageId y : s.Succs(id)) succs.push_back(done.at(y));
    int k = 1;
    if (policy == KPolicy::kChoose) {
      k = ChooseK(st.micro_batch, succs, s.mini_batch);
    } else if (policy == KPolicy::kKeep) {
      k = std::max(1, st.sched_cfg.k);
    }
    const int dp = std::max<int>(1, static_cast<int>(st.devices.size()));
    StageScheduleResult r =
        ScheduleStage(cost, st.op_ids, st.micro_batch, k, succs, dp, s.mini_batch);
    st.sched_cfg = r.config;
    if (r.config.inflight_samples / st.micro_batch >= k) {
      st.schedule = ScheduleTasks(r.config, s.mini_batch);
    } else {
      st.schedule.clear();
    }
    if (!r.feasible) {
      out.feasible = false;
      out.over_memory.push_back(id);
    }
    done[id] = {k, st.micro_batch, r.config.inflight_samples};
    out.processing_order.push_back(id);
  }
  std::sort(out.over_memory.begin(), out.over_memory.end());
  return out;
}

}  // namespace pipeplan
