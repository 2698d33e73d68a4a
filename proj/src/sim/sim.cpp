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

#include "sim/sim.hpp"

#include <algorithm>
#include <limits>
#include <map>
#include <set>
#include <sstream>

#include "oracle/oracle.hpp"

namespace pipeplan {

namespace {

constexpr double kPending = -1.0;

struct Link {
  int peer = 0;  // stage index
  double fw_delay = 0.0;
  double bw_delay = 0.0;
};

// Micro-batch indices of a stage with size `b_other` that overlap samples
// [lo, hi) of the mini-batch.
std::pair<int, int> Cover(int lo, int hi, int b_other) {
  return {lo / b_other, (hi - 1) / b_other};
}

}  // namespace

SimReport Simulate(const ComputationGraph &g, const DeviceCluster &cluster,
                   const StageGraph &s, const SimOptions &options) {
  SimReport report;
  const int n_stages = static_cast<int>(s.stages.size());
  const int B = s.mini_batch;
  if (n_stages == 0) return report;

  std::vector<int> order(n_stages);
  for (int i = 0; i < n_stages; ++i) order[i] = i;
  std::sort(order.begin(), order.end(), [&](int a, int b) {
    return s.stages[a].id < s.stages[b].id;
  });

  CostModel cost(g, cluster);
  std::vector<double> fw_dur(n_stages), bw_dur(n_stages);
  std::vector<int> nmb(n_stages);
  for (int x = 0; x < n_stages; ++x) {
    const Stage &st = s.stages[x];
    if (st.micro_batch < 1 || B % st.micro_batch != 0) {
      throw Error(ErrorCode::kInvalidArgument,
                  "stage " + std::to_string(st.id) +
                      " micro-batch does not divide the mini-batch");
    }
    nmb[x] = B / st.micro_batch;
    const int dp = std::max<int>(1, static_cast<int>(st.devices.size()));
    if (options.duration) {
      fw_dur[x] = options.duration(st, Direction::kForward);
      bw_dur[x] = options.duration(st, Direction::kBackward);
    } else {
      StageTimes t = cost.Times(st.op_ids, st.micro_batch, dp);
      fw_dur[x] = t.fwd_ms;
      bw_dur[x] = t.bwd_ms + t.dp_sync_ms;
    }
  }

  std::vector<std::vector<Link>> preds(n_stages), succs(n_stages);
  std::set<Edge> unique_edges(s.edges.begin(), s.edges.end());
  for (const auto &[u, v] : unique_edges) {
    const int x = s.IndexOf(u), y = s.IndexOf(v);
    double fw = 0.0, bw = 0.0;
    if (!options.zero_comm) {
      const double bytes =
          cost.BoundaryBytes(s.stages[x].op_ids, s.stages[y].op_ids);
      if (bytes > 0) {
        fw = CommTime(bytes, s.stages[x].micro_batch, cost.InterLink());
        bw = CommTime(bytes, s.stages[y].micro_batch, cost.InterLink());
      }
    }
    succs[x].push_back({y, fw, bw});
    preds[y].push_back({x, fw, bw});
  }

  std::vector<std::vector<double>> fw_end(n_stages), bw_end(n_stages);
  for (int x = 0; x < n_stages; ++x) {
    fw_end[x].assign(nmb[x], kPending);
    bw_end[x].assign(nmb[x], kPending);
    if (s.stages[x].schedule.size() != static_cast<size_t>(2 * nmb[x])) {
      throw Error(ErrorCode::kInvalidArgument,
                  "stage " + std::to_string(s.stages[x].id) +
                      " has an incomplete schedule");
    }
  }
  std::vector<size_t> next(n_stages, 0);
  std::vector<double> free_at(n_stages, 0.0);
  std::vector<double> busy(n_stages, 0.0);

  // Returns the earliest start time of the next task of stage x, or a
  // negative value if some dependency has not completed yet.
  auto ready_time = [&](int x) -> double {
    const Stage &st = s.stages[x];
    const Task &t = st.schedule[next[x]];
    const int lo = t.index * st.micro_batch;
    const int hi = lo + st.micro_batch;
    double ready = free_at[x];
    if (t.dir == Direction::kForward) {
      for (const Link &l : preds[x]) {
        auto [a, b] = Cover(lo, hi, s.stages[l.peer].micro_batch);
        for (int m = a; m <= b; ++m) {
          const double e = fw_end[l.peer][m];
          if (e == kPending) return -1.0;
          ready = std::max(ready, e + l.fw_delay);
        }
      }
    } else {
      if (fw_end[x][t.index] == kPending) return -1.0;
      for (const Link &l : succs[x]) {
        auto [a, b] = Cover(lo, hi, s.stages[l.peer].micro_batch);
        for (int m = a; m <= b; ++m) {
          const double e = bw_end[l.peer][m];
          if (e == kPending) return -1.0;
          ready = std::max(ready, e + l.bw_delay);
        }
      }
    }
    return ready;
  };

  size_t remaining = 0;
  for (int x = 0; x < n_stages; ++x) remaining += s.stages[x].schedule.size();
  while (remaining > 0) {
    bool progress = false;
    for (int x : order) {
      while (next[x] < s.stages[x].schedule.size()) {
        const double start = ready_time(x);
        if (start < 0) break;
        const Task &t = s.stages[x].schedule[next[x]];
        const double dur =
            t.dir == Direction::kForward ? fw_dur[x] : bw_dur[x];
        const double end = start + dur;
        (t.dir == Direction::kForward ? fw_end : bw_end)[x][t.index] = end;
        free_at[x] = end;
        busy[x] += dur;
        report.tasks.push_back({s.stages[x].id, t, start, end});
        ++next[x];
        --remaining;
        progress = true;
      }
    }
    if (!progress) {
      std::ostringstream os;
      os << "deadlock; blocked tasks:";
      for (int x : order) {
        if (next[x] < s.stages[x].schedule.size()) {
          const Task &t = s.stages[x].schedule[next[x]];
          os << " stage " << s.stages[x].id << ':'
             << (t.dir == Direction::kForward ? 'F' : 'B') << t.index;
        }
      }
      throw Error(ErrorCode::kDeadlock, os.str());
    }
  }

  std::sort(report.tasks.begin(), report.tasks.end(),
            [](const TaskRecord &a, const TaskRecord &b) {
              if (a.start != b.start) return a.start < b.start;
              if (a.stage != b.stage) return a.stage < b.stage;
              if (a.task.dir != b.task.dir) {
                return a.task.dir == Direction::kForward;
              }
              return a.task.index < b.task.index;
            });

  double makespan = 0.0;
  for (const TaskRecord &r : report.tasks) makespan = std::max(makespan, r.end);
  report.iteration_ms = makespan + options.weight_update_ms;

  // Events: task starts/ends plus arrival of each transfer at its consumer.
  for (const TaskRecord &r : report.tasks) {
    report.trace.push_back({r.start, r.stage, r.task, SimEvent::Kind::kStart, -1});
    report.trace.push_back({r.end, r.stage, r.task, SimEvent::Kind::kEnd, -1});
    const int x = s.IndexOf(r.stage);
    const auto &links = r.task.dir == Direction::kForward ? succs[x] : preds[x];
    for (const Link &l : links) {
      const double delay =
          r.task.dir == Direction::kForward ? l.fw_delay : l.bw_delay;
      report.trace.push_back({r.end + delay, r.stage, r.task,
                              SimEvent::Kind::kCommEnd, s.stages[l.peer].id});
    }
  }
  std::stable_sort(report.trace.begin(), report.trace.end(),
                   [](const SimEvent &a, const SimEvent &b) {
                     if (a.time != b.time) return a.time < b.time;
                     if (a.kind != b.kind) return a.kind > b.kind;
                     if (a.stage != b.stage) return a.stage < b.stage;
                     if (a.task.dir != b.task.dir) {
                       return a.task.dir == Direction::kForward;
                     }
                     if (a.task.index != b.task.index) {
                       return a.task.index < b.task.index;
                     }
                     return a.peer < b.peer;
                   });

  std::map<int, double> device_mem;
  int warm_up = 0;
  for (int x : order) {
    const Stage &st = s.stages[x];
    StageSimStats stats;
    stats.id = st.id;
    stats.micro_batch = st.micro_batch;
    stats.peak_inflight_microbatches = PeakInFlight(st.schedule);
    stats.peak_inflight_samples =
        stats.peak_inflight_microbatches * st.micro_batch;
    stats.warm_up_microbatches = WarmUpLength(st.schedule);
    stats.busy_ms = busy[x];
    stats.idle_ms = report.iteration_ms - busy[x];
    const int dp = std::max<int>(1, static_cast<int>(st.devices.size()));
    stats.tps = options.duration
                    ? (fw_dur[x] + bw_dur[x]) / st.micro_batch
                    : cost.Tps(st.op_ids, st.micro_batch, dp);
    report.bottleneck_tps = std::max(report.bottleneck_tps, stats.tps);
    if (preds[x].empty()) {
      warm_up = std::max(warm_up, stats.warm_up_microbatches);
    }
    const double mem =
        cost.Memory(st.op_ids, stats.peak_inflight_samples, dp).total();
    for (int dev : st.devices) device_mem[dev] = std::max(device_mem[dev], mem);
    report.stages.push_back(stats);
  }
  for (const auto &[dev, mem] : device_mem) report.devices.push_back({dev, mem});
  report.warm_up_microbatches = warm_up;
  report.depth = PipelineDepth(s);
  return report;
}

int MeasureMinInflight(const StageGraph &two_stage_chain) {
  if (two_stage_chain.stages.size() != 2) {
    throw Error(ErrorCode::kInvalidArgument,
                "measure_min_inflight expects exactly two stages");
  }
  StageId target = two_stage_chain.stages[0].id;
  for (const Edge &e : two_stage_chain.edges) target = e.first;
  return MinInflightSearch(two_stage_chain, target);
}

}  // namespace pipeplan
