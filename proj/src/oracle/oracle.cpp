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

#include "oracle/oracle.hpp"

#include <algorithm>
#include <chrono>
#include <exception>
#include <functional>
#include <map>
#include <set>
#include <thread>
#include <tuple>

#include "cost/cost.hpp"
#include "sched/sched.hpp"
#include "sim/sim.hpp"

namespace pipeplan {

namespace {

// Stages reachable from `from` following edges in the given direction.
std::set<StageId> Reach(const StageGraph &s, StageId from, bool forward) {
  std::set<StageId> seen;
  std::vector<StageId> stack{from};
  while (!stack.empty()) {
    const StageId x = stack.back();
    stack.pop_back();
    for (StageId y : forward ? s.Succs(x) : s.Preds(x)) {
      if (seen.insert(y).second) stack.push_back(y);
    }
  }
  return seen;
}

}  // namespace

int MinInflightSearch(const StageGraph &skeleton, StageId target,
                      const EnumerationBudget &budget) {
  const int B = skeleton.mini_batch;
  if (B > budget.max_mini_batch * 4 ||
      skeleton.stages.size() > static_cast<size_t>(4 * budget.max_ops)) {
    throw Error(ErrorCode::kBudgetExceeded,
                "min-inflight search instance exceeds the enumeration budget");
  }
  const std::set<StageId> ancestors = Reach(skeleton, target, false);
  StageGraph s = skeleton;
  std::vector<Operator> ops;
  for (size_t i = 0; i < s.stages.size(); ++i) {
    Stage &st = s.stages[i];
    const int b = st.sched_cfg.micro_batch > 0 ? st.sched_cfg.micro_batch
                                                : st.micro_batch;
    st.micro_batch = b;
    st.sched_cfg.micro_batch = b;
    if (B % b != 0) {
      throw Error(ErrorCode::kInvalidArgument,
                  "micro-batch does not divide the mini-batch");
    }
    Operator op;
    op.id = static_cast<OpId>(i);
    ops.push_back(op);
    st.op_ids = {op.id};
    if (st.devices.empty()) st.devices = {static_cast<int>(i)};
    if (st.id == target) continue;
    ScheduleConfig c = st.sched_cfg;
    if (ancestors.count(st.id) || c.inflight_samples <= 0) {
      c.inflight_samples = B;
    }
    st.schedule = ScheduleTasks(c, B);
  }
  const ComputationGraph g(ops, {});
  const DeviceCluster cluster;
  SimOptions options;
  options.zero_comm = true;
  options.duration = [](const Stage &st, Direction) {
    return static_cast<double>(st.micro_batch);
  };

  Stage &t = s.stages[s.IndexOf(target)];
  auto run = [&](int warm) -> double {
    ScheduleConfig c = t.sched_cfg;
    c.inflight_samples = warm * t.micro_batch;
    t.schedule = ScheduleTasks(c, B);
    try {
      return Simulate(g, cluster, s, options).iteration_ms;
    } catch (const Error &e) {
      if (e.code() == ErrorCode::kDeadlock) return -1.0;
      throw;
    }
  };
  const int n = B / t.micro_batch;
  const double reference = run(n);
  for (int warm = 1; warm < n; ++warm) {
    const double ms = run(warm);
    if (ms >= 0 && ms <= reference + 1e-9) return warm * t.micro_batch;
  }
  return n * t.micro_batch;
}

namespace {

struct Candidate {
  double tps = 0.0;
  std::tuple<int, int, int64_t> order{0, 0, 0};
  StageGraph graph;
  bool found = false;
};

class Enumerator {
 public:
  Enumerator(const ComputationGraph &g, const DeviceCluster &cluster, int B)
      : g_(g), cluster_(cluster), cost_(g, cluster), B_(B) {}

  void Evaluate(int p, const std::vector<std::vector<OpId>> &blocks,
                const std::vector<int> &bs, Candidate &best,
                int64_t &candidates) {
    for (size_t bi = 0; bi < bs.size(); ++bi) {
      const int b = bs[bi];
      std::vector<int> dps(blocks.size(), 1);
      int64_t counter = 0;
      Assign(p, static_cast<int>(bi), b, blocks, dps, 0, cluster_.num_devices,
             counter, best, candidates);
    }
  }

 private:
  double Tps(const std::vector<OpId> &ops, int b, int dp) {
    auto key = std::make_tuple(ops, b, dp);
    auto it = tps_.find(key);
    if (it != tps_.end()) return it->second;
    const double v = cost_.Tps(ops, b, dp);
    tps_.emplace(key, v);
    return v;
  }

  void Assign(int p, int bi, int b, const std::vector<std::vector<OpId>> &blocks,
              std::vector<int> &dps, size_t pos, int left, int64_t &counter,
              Candidate &best, int64_t &candidates) {
    if (pos == blocks.size()) {
      ++candidates;
      const std::tuple<int, int, int64_t> order{p, bi, counter++};
      double tps = 0.0;
      for (size_t i = 0; i < blocks.size(); ++i) {
        tps = std::max(tps, Tps(blocks[i], b, dps[i]));
      }
      if (best.found && tps >= best.tps) return;
      std::vector<StageSpec> specs;
      for (size_t i = 0; i < blocks.size(); ++i) {
        specs.push_back({blocks[i], b, 1, dps[i]});
      }
      StageGraph s = AssembleStageGraph(g_, specs, B_);
      GraphScheduleResult r =
          ScheduleStageGraph(g_, cluster_, s, KPolicy::kOneFOneB);
      if (!r.feasible) return;
      try {
        Simulate(g_, cluster_, r.graph);
      } catch (const Error &e) {
        if (e.code() == ErrorCode::kDeadlock) return;
        throw;
      }
      best.tps = tps;
      best.order = order;
      best.graph = r.graph;
      best.found = true;
      return;
    }
    const int remaining_blocks = static_cast<int>(blocks.size() - pos - 1);
    for (int dp = 1; dp <= b && dp <= left - remaining_blocks; dp *= 2) {
      if (b % dp != 0) continue;
      dps[pos] = dp;
      Assign(p, bi, b, blocks, dps, pos + 1, left - dp, counter, best,
             candidates);
    }
  }

  const ComputationGraph &g_;
  DeviceCluster cluster_;
  CostModel cost_;
  int B_;
  std::map<std::tuple<std::vector<OpId>, int, int>, double> tps_;
};

}  // namespace

ExhaustiveResult ExhaustiveOptimize(const ComputationGraph &g,
                                    const DeviceCluster &cluster,
                                    int mini_batch, int threads,
                                    const EnumerationBudget &budget) {
  CheckCluster(cluster);
  const int n = static_cast<int>(g.size());
  if (n == 0) throw Error(ErrorCode::kInvalidArgument, "empty graph");
  if (n > budget.max_ops || cluster.num_devices > budget.max_devices ||
      mini_batch > budget.max_mini_batch || mini_batch < 1) {
    throw Error(ErrorCode::kBudgetExceeded,
                "instance exceeds the enumeration budget (ops <= " +
                    std::to_string(budget.max_ops) + ", devices <= " +
                    std::to_string(budget.max_devices) + ", B <= " +
                    std::to_string(budget.max_mini_batch) + ")");
  }
  const auto deadline = std::chrono::steady_clock::now() +
                        std::chrono::duration<double>(budget.time_limit_s);

  const std::vector<OpId> ids = g.OpIds();
  std::vector<uint32_t> pred_mask(n, 0);
  for (const auto &[u, v] : g.edges()) {
    pred_mask[g.IndexOf(v)] |= 1u << g.IndexOf(u);
  }
  const uint32_t full = (n == 32) ? ~0u : ((1u << n) - 1);
  std::vector<char> is_down(full + 1, 0);
  for (uint32_t m = 0; m <= full; ++m) {
    bool ok = true;
    for (int i = 0; i < n && ok; ++i) {
      if ((m >> i & 1u) && (pred_mask[i] & ~m)) ok = false;
    }
    is_down[m] = ok;
  }

  // Chains of downsets; each difference is a convex block and the block
  // order is a topological order of the quotient.
  std::set<std::vector<uint32_t>> partitions;
  std::vector<uint32_t> blocks;
  std::function<void(uint32_t)> dfs = [&](uint32_t cur) {
    if (cur == full) {
      std::vector<uint32_t> sorted = blocks;
      std::sort(sorted.begin(), sorted.end());
      partitions.insert(sorted);
      return;
    }
    if (static_cast<int>(blocks.size()) >= cluster.num_devices) return;
    const uint32_t rest = full & ~cur;
    for (uint32_t sub = rest; sub != 0; sub = (sub - 1) & rest) {
      if (!is_down[cur | sub]) continue;
      blocks.push_back(sub);
      dfs(cur | sub);
      blocks.pop_back();
    }
  };
  dfs(0);

  std::vector<std::vector<std::vector<OpId>>> parts;
  for (const auto &p : partitions) {
    std::vector<std::vector<OpId>> bl;
    for (uint32_t m : p) {
      std::vector<OpId> ops;
      for (int i = 0; i < n; ++i) {
        if (m >> i & 1u) ops.push_back(ids[i]);
      }
      bl.push_back(ops);
    }
    parts.push_back(bl);
  }
  std::vector<int> bs;
  for (int b = 1; b <= mini_batch; b *= 2) {
    if (mini_batch % b == 0) bs.push_back(b);
  }

  const int workers = std::max(1, std::min<int>(threads, 64));
  std::vector<Candidate> best(workers);
  std::vector<int64_t> counts(workers, 0);
  std::vector<std::exception_ptr> errors(workers);
  auto work = [&](int w) {
    try {
      Enumerator e(g, cluster, mini_batch);
      for (size_t p = w; p < parts.size(); p += workers) {
        if (std::chrono::steady_clock::now() > deadline) {
          throw Error(ErrorCode::kBudgetExceeded,
                      "exhaustive search exceeded its time budget");
        }
        e.Evaluate(static_cast<int>(p), parts[p], bs, best[w], counts[w]);
      }
    } catch (...) {
      errors[w] = std::current_exception();
    }
  };
  if (workers == 1) {
    work(0);
  } else {
    std::vector<std::thread> pool;
    for (int w = 0; w < workers; ++w) pool.emplace_back(work, w);
    for (auto &t : pool) t.join();
  }
  for (auto &e : errors) {
    if (e) std::rethrow_exception(e);
  }

  ExhaustiveResult out;
  out.partitions = static_cast<int64_t>(parts.size());
  const Candidate *winner = nullptr;
  for (int w = 0; w < workers; ++w) {
    out.candidates += counts[w];
    if (!best[w].found) continue;
    if (!winner || best[w].tps < winner->tps ||
        (best[w].tps == winner->tps && best[w].order < winner->order)) {
      winner = &best[w];
    }
  }
  if (!winner) {
    throw Error(ErrorCode::kInfeasible,
                "no partition satisfies the memory constraint");
  }
  out.bottleneck_tps = winner->tps;
  out.graph = winner->graph;
  return out;
}

}  // namespace pipeplan
