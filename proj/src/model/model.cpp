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

#include "model/model.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <functional>
#include <queue>
#include <sstream>

#include "cost/cost.hpp"

namespace pipeplan {

namespace {

std::string Join(const std::vector<int> &values) {
  std::ostringstream os;
  for (size_t i = 0; i < values.size(); ++i) {
    if (i) os << ",";
    os << values[i];
  }
  return os.str();
}

}  // namespace

// ---------------------------------------------------------------------------
// CostCurve

CostCurve CostCurve::Affine(double a, double b) {
  if (!(a >= 0.0) || !(b >= 0.0) || !std::isfinite(a) || !std::isfinite(b)) {
    throw Error(ErrorCode::kInvalidArgument,
                "affine cost curve requires finite a >= 0 and b >= 0");
  }
  CostCurve c;
  c.kind_ = Kind::kAffine;
  c.a_ = a;
  c.b_ = b;
  return c;
}

CostCurve CostCurve::Table(std::vector<std::pair<double, double>> points) {
  if (points.empty()) {
    throw Error(ErrorCode::kInvalidArgument, "table cost curve has no points");
  }
  std::sort(points.begin(), points.end());
  for (size_t i = 0; i < points.size(); ++i) {
    const auto &[key, value] = points[i];
    if (!(key > 0.0) || !std::isfinite(key)) {
      throw Error(ErrorCode::kInvalidArgument, "table keys must be positive");
    }
    if (!(value >= 0.0) || !std::isfinite(value)) {
      throw Error(ErrorCode::kInvalidArgument,
                  "table values must be nonnegative");
    }
    if (i > 0 && key == points[i - 1].first) {
      throw Error(ErrorCode::kInvalidArgument, "duplicate table key");
    }
    if (i > 0 && value < points[i - 1].second) {
      throw Error(ErrorCode::kInvalidArgument,
                  "table values must be nondecreasing in micro-batch size");
    }
  }
  CostCurve c;
  c.kind_ = Kind::kTable;
  c.points_ = std::move(points);
  return c;
}

double CostCurve::Eval(double n) const {
  if (kind_ == Kind::kAffine) return a_ + b_ * n;
  const auto &p = points_;
  if (p.size() == 1) return p[0].second * n / p[0].first;
  auto segment = [&](size_t lo) {
    const auto &[x0, y0] = p[lo];
    const auto &[x1, y1] = p[lo + 1];
    return y0 + (y1 - y0) * (n - x0) / (x1 - x0);
  };
  if (n <= p.front().first) return std::max(0.0, segment(0));
  if (n >= p.back().first) return segment(p.size() - 2);
  auto it = std::upper_bound(
      p.begin(), p.end(), n,
      [](double v, const std::pair<double, double> &e) { return v < e.first; });
  size_t hi = static_cast<size_t>(it - p.begin());
  return segment(hi - 1);
}

CostCurve CostCurve::Scaled(double factor) const {
  CostCurve c = *this;
  c.a_ *= factor;
  c.b_ *= factor;
  for (auto &point : c.points_) point.second *= factor;
  return c;
}

bool CostCurve::operator==(const CostCurve &other) const {
  if (kind_ != other.kind_) return false;
  if (kind_ == Kind::kAffine) return a_ == other.a_ && b_ == other.b_;
  return points_ == other.points_;
}

// ---------------------------------------------------------------------------
// ComputationGraph

ComputationGraph::ComputationGraph(std::vector<Operator> ops,
                                   std::vector<Edge> edges) {
  std::sort(ops.begin(), ops.end(),
            [](const Operator &a, const Operator &b) { return a.id < b.id; });
  for (size_t i = 0; i < ops.size(); ++i) {
    const Operator &op = ops[i];
    if (!index_.emplace(op.id, static_cast<int>(i)).second) {
      throw Error(ErrorCode::kInvalidArgument,
                  "duplicate operator id " + std::to_string(op.id));
    }
    if (!(op.param_bytes >= 0) || !(op.act_bytes_per_sample >= 0) ||
        !(op.out_bytes_per_sample >= 0)) {
      throw Error(ErrorCode::kInvalidArgument,
                  "operator " + std::to_string(op.id) +
                      " has a negative byte quantity");
    }
  }
  ops_ = std::move(ops);
  std::sort(edges.begin(), edges.end());
  edges.erase(std::unique(edges.begin(), edges.end()), edges.end());
  preds_.assign(ops_.size(), {});
  succs_.assign(ops_.size(), {});
  for (const auto &[u, v] : edges) {
    if (!HasOp(u) || !HasOp(v)) {
      throw Error(ErrorCode::kInvalidArgument,
                  "edge (" + std::to_string(u) + "," + std::to_string(v) +
                      ") references an unknown operator");
    }
    if (u == v) {
      throw Error(ErrorCode::kCycle,
                  "self-loop on operator " + std::to_string(u));
    }
    succs_[index_.at(u)].push_back(v);
    preds_[index_.at(v)].push_back(u);
  }
  edges_ = std::move(edges);
  if (TopologicalOrder().size() != ops_.size()) {
    throw Error(ErrorCode::kCycle, "computation graph contains a cycle");
  }
}

int ComputationGraph::IndexOf(OpId id) const {
  auto it = index_.find(id);
  if (it == index_.end()) {
    throw Error(ErrorCode::kInvalidArgument,
                "unknown operator id " + std::to_string(id));
  }
  return it->second;
}

std::vector<OpId> ComputationGraph::OpIds() const {
  std::vector<OpId> ids;
  ids.reserve(ops_.size());
  for (const auto &op : ops_) ids.push_back(op.id);
  return ids;
}

OpId ComputationGraph::MaxId() const {
  return ops_.empty() ? -1 : ops_.back().id;
}

std::vector<OpId> ComputationGraph::TopologicalOrder() const {
  std::vector<int> indeg(ops_.size(), 0);
  for (size_t i = 0; i < ops_.size(); ++i) {
    indeg[i] = static_cast<int>(preds_[i].size());
  }
  std::priority_queue<OpId, std::vector<OpId>, std::greater<>> ready;
  for (size_t i = 0; i < ops_.size(); ++i) {
    if (indeg[i] == 0) ready.push(ops_[i].id);
  }
  std::vector<OpId> order;
  while (!ready.empty()) {
    OpId u = ready.top();
    ready.pop();
    order.push_back(u);
    for (OpId v : succs_[index_.at(u)]) {
      if (--indeg[index_.at(v)] == 0) ready.push(v);
    }
  }
  return order;
}

void CheckCluster(const DeviceCluster &c) {
  if (c.num_devices < 1) {
    throw Error(ErrorCode::kInvalidArgument, "cluster needs >= 1 device");
  }
  if (!(c.mem_per_device > 0) || !(c.intra_bw > 0) || !(c.inter_bw > 0)) {
    throw Error(ErrorCode::kInvalidArgument,
                "cluster memory and bandwidths must be positive");
  }
  if (!(c.link_latency >= 0) || !(c.weight_multiplier >= 0)) {
    throw Error(ErrorCode::kInvalidArgument,
                "link latency and weight multiplier must be nonnegative");
  }
}

// ---------------------------------------------------------------------------
// Task schedules

std::string ScheduleToString(const TaskSchedule &schedule) {
  std::ostringstream os;
  for (size_t i = 0; i < schedule.size(); ++i) {
    if (i) os << ' ';
    os << (schedule[i].dir == Direction::kForward ? 'F' : 'B')
       << schedule[i].index;
  }
  return os.str();
}

TaskSchedule ScheduleFromString(const std::string &text) {
  TaskSchedule schedule;
  std::istringstream is(text);
  std::string token;
  while (is >> token) {
    if (token.size() < 2 || (token[0] != 'F' && token[0] != 'B')) {
      throw Error(ErrorCode::kParse, "bad schedule token '" + token + "'");
    }
    for (size_t i = 1; i < token.size(); ++i) {
      if (!std::isdigit(static_cast<unsigned char>(token[i]))) {
        throw Error(ErrorCode::kParse, "bad schedule token '" + token + "'");
      }
    }
    Task t;
    t.dir = token[0] == 'F' ? Direction::kForward : Direction::kBackward;
    t.index = std::stoi(token.substr(1));
    schedule.push_back(t);
  }
  return schedule;
}

int PeakInFlight(const TaskSchedule &schedule) {
  int live = 0, peak = 0;
  for (const Task &t : schedule) {
    live += t.dir == Direction::kForward ? 1 : -1;
    peak = std::max(peak, live);
  }
  return peak;
}

int WarmUpLength(const TaskSchedule &schedule) {
  int count = 0;
  for (const Task &t : schedule) {
    if (t.dir == Direction::kBackward) break;
    ++count;
  }
  return count;
}

// ---------------------------------------------------------------------------
// StageGraph helpers

int StageGraph::IndexOf(StageId id) const {
  for (size_t i = 0; i < stages.size(); ++i) {
    if (stages[i].id == id) return static_cast<int>(i);
  }
  throw Error(ErrorCode::kInvalidArgument,
              "unknown stage id " + std::to_string(id));
}

std::vector<StageId> StageGraph::Preds(StageId id) const {
  std::vector<StageId> out;
  for (const auto &[u, v] : edges) {
    if (v == id) out.push_back(u);
  }
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

std::vector<StageId> StageGraph::Succs(StageId id) const {
  std::vector<StageId> out;
  for (const auto &[u, v] : edges) {
    if (u == id) out.push_back(v);
  }
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

std::vector<StageId> StageGraph::TopologicalOrder() const {
  std::map<StageId, int> indeg;
  std::map<StageId, std::vector<StageId>> succ;
  for (const Stage &st : stages) indeg[st.id] = 0;
  std::set<Edge> unique_edges(edges.begin(), edges.end());
  for (const auto &[u, v] : unique_edges) {
    if (!indeg.count(u) || !indeg.count(v)) {
      throw Error(ErrorCode::kInvalidArgument,
                  "stage edge references an unknown stage");
    }
    succ[u].push_back(v);
    ++indeg[v];
  }
  std::priority_queue<StageId, std::vector<StageId>, std::greater<>> ready;
  for (const auto &[id, d] : indeg) {
    if (d == 0) ready.push(id);
  }
  std::vector<StageId> order;
  while (!ready.empty()) {
    StageId u = ready.top();
    ready.pop();
    order.push_back(u);
    for (StageId v : succ[u]) {
      if (--indeg[v] == 0) ready.push(v);
    }
  }
  if (order.size() != stages.size()) {
    throw Error(ErrorCode::kCycle, "stage graph contains a cycle");
  }
  return order;
}

int PipelineDepth(const StageGraph &s) {
  std::vector<StageId> order = s.TopologicalOrder();
  std::map<StageId, int> longest;
  int depth = 0;
  for (StageId id : order) {
    int best = 1;
    for (StageId p : s.Preds(id)) best = std::max(best, longest[p] + 1);
    longest[id] = best;
    depth = std::max(depth, best);
  }
  return depth;
}

std::set<Edge> InducedStageEdges(
    const ComputationGraph &g, const std::vector<std::vector<OpId>> &partition) {
  std::unordered_map<OpId, int> block;
  for (size_t i = 0; i < partition.size(); ++i) {
    for (OpId op : partition[i]) block[op] = static_cast<int>(i);
  }
  std::set<Edge> out;
  for (const auto &[u, v] : g.edges()) {
    auto bu = block.find(u);
    auto bv = block.find(v);
    if (bu == block.end() || bv == block.end()) continue;
    if (bu->second != bv->second) out.emplace(bu->second, bv->second);
  }
  return out;
}

bool IsConvex(const ComputationGraph &g, const std::set<OpId> &members) {
  // Walk outward from the set through non-members only; reaching a member
  // again means some path leaves and re-enters.
  std::vector<OpId> frontier;
  std::set<OpId> seen;
  for (OpId u : members) {
    for (OpId v : g.Succs(u)) {
      if (!members.count(v) && seen.insert(v).second) frontier.push_back(v);
    }
  }
  while (!frontier.empty()) {
    OpId w = frontier.back();
    frontier.pop_back();
    for (OpId v : g.Succs(w)) {
      if (members.count(v)) return false;
      if (seen.insert(v).second) frontier.push_back(v);
    }
  }
  return true;
}

// ---------------------------------------------------------------------------
// Validation

ValidationReport ValidateStrategy(const ComputationGraph &g,
                                  const DeviceCluster &cluster,
                                  const StageGraph &s) {
  ValidationReport report;
  auto add = [&](std::string cond, std::string msg,
                 std::vector<StageId> stages = {}, std::vector<Edge> edges = {}) {
    report.violations.push_back(
        {std::move(cond), std::move(msg), std::move(stages), std::move(edges)});
  };

  const int B = s.mini_batch;
  if (B < 1) add("structure", "mini-batch size must be >= 1");

  // Stage ids and basic per-stage fields.
  std::set<StageId> ids;
  for (const Stage &st : s.stages) {
    if (!ids.insert(st.id).second) {
      add("structure", "duplicate stage id " + std::to_string(st.id), {st.id});
    }
    if (st.micro_batch < 1 || (B >= 1 && B % st.micro_batch != 0)) {
      add("structure",
          "stage " + std::to_string(st.id) + " micro-batch " +
              std::to_string(st.micro_batch) + " does not divide mini-batch " +
              std::to_string(B),
          {st.id});
    }
  }

  bool edges_ok = true;
  for (const Edge &e : s.edges) {
    if (!ids.count(e.first) || !ids.count(e.second) || e.first == e.second) {
      add("structure", "stage edge references unknown stage or is a loop", {},
          {e});
      edges_ok = false;
    }
  }
  bool acyclic = false;
  if (edges_ok) {
    try {
      s.TopologicalOrder();
      acyclic = true;
    } catch (const Error &) {
      add("structure", "stage graph contains a cycle");
    }
  }

  // C1: partition and convexity.
  std::map<OpId, StageId> owner;
  for (const Stage &st : s.stages) {
    if (st.op_ids.empty()) {
      add("C1", "stage " + std::to_string(st.id) + " has no operators",
          {st.id});
    }
    for (OpId op : st.op_ids) {
      if (!g.HasOp(op)) {
        add("C1",
            "stage " + std::to_string(st.id) + " references unknown operator " +
                std::to_string(op),
            {st.id});
        continue;
      }
      auto [it, inserted] = owner.emplace(op, st.id);
      if (!inserted) {
        add("C1",
            "operator " + std::to_string(op) + " is assigned to stages " +
                std::to_string(it->second) + " and " + std::to_string(st.id),
            {it->second, st.id});
      }
    }
  }
  std::vector<OpId> missing;
  for (const Operator &op : g.ops()) {
    if (!owner.count(op.id)) missing.push_back(op.id);
  }
  if (!missing.empty()) {
    add("C1", "operators not assigned to any stage: " + Join(missing));
  }
  for (const Stage &st : s.stages) {
    std::set<OpId> members;
    for (OpId op : st.op_ids) {
      if (g.HasOp(op)) members.insert(op);
    }
    if (!members.empty() && !IsConvex(g, members)) {
      add("C1", "stage " + std::to_string(st.id) + " is not convex", {st.id});
    }
  }

  // C2: every crossing computation edge must be a declared stage edge.
  std::set<Edge> declared(s.edges.begin(), s.edges.end());
  for (const auto &[u, v] : g.edges()) {
    auto su = owner.find(u);
    auto sv = owner.find(v);
    if (su == owner.end() || sv == owner.end()) continue;
    if (su->second != sv->second &&
        !declared.count({su->second, sv->second})) {
      add("C2",
          "computation edge (" + std::to_string(u) + "," + std::to_string(v) +
              ") crosses stages without a stage edge",
          {su->second, sv->second}, {{su->second, sv->second}});
    }
  }

  // C3: device sets.
  std::map<int, StageId> device_owner;
  for (const Stage &st : s.stages) {
    if (st.devices.empty()) {
      add("C3", "stage " + std::to_string(st.id) + " has no devices", {st.id});
    }
    for (int dev : st.devices) {
      if (dev < 0 || dev >= cluster.num_devices) {
        add("C3",
            "stage " + std::to_string(st.id) + " uses nonexistent device " +
                std::to_string(dev),
            {st.id});
        continue;
      }
      auto [it, inserted] = device_owner.emplace(dev, st.id);
      if (!inserted) {
        add("C3",
            "device " + std::to_string(dev) + " is shared by stages " +
                std::to_string(it->second) + " and " + std::to_string(st.id),
            {it->second, st.id});
      }
    }
  }

  // C4: schedule well-formedness.
  for (const Stage &st : s.stages) {
    if (st.micro_batch < 1 || B < 1 || B % st.micro_batch != 0) continue;
    const int n = B / st.micro_batch;
    const std::string who = "stage " + std::to_string(st.id);
    if (st.schedule.empty()) {
      add("C4", who + " has no schedule", {st.id});
      continue;
    }
    std::vector<int> fw_pos(n, -1), bw_pos(n, -1);
    int next_fw = 0, next_bw = 0;
    bool ok = true;
    for (size_t p = 0; p < st.schedule.size() && ok; ++p) {
      const Task &t = st.schedule[p];
      if (t.index < 0 || t.index >= n) {
        add("C4", who + " schedules out-of-range micro-batch " +
                      std::to_string(t.index),
            {st.id});
        ok = false;
      } else if (t.dir == Direction::kForward) {
        if (t.index != next_fw) {
          add("C4", who + " runs forward passes out of order", {st.id});
          ok = false;
        }
        fw_pos[t.index] = static_cast<int>(p);
        ++next_fw;
      } else {
        if (t.index != next_bw) {
          add("C4", who + " runs backward passes out of order", {st.id});
          ok = false;
        } else if (fw_pos[t.index] < 0) {
          add("C4",
              who + " runs backward " + std::to_string(t.index) +
                  " before its forward",
              {st.id});
          ok = false;
        }
        bw_pos[t.index] = static_cast<int>(p);
        ++next_bw;
      }
    }
    if (ok && (next_fw != n || next_bw != n ||
               static_cast<int>(st.schedule.size()) != 2 * n)) {
      add("C4",
          who + " must run exactly " + std::to_string(n) +
              " forward and backward passes",
          {st.id});
    }
  }

  // Device memory (single per-device budget).
  for (const Stage &st : s.stages) {
    if (st.devices.empty() || st.micro_batch < 1) continue;
    const int d = static_cast<int>(st.devices.size());
    if (st.micro_batch % d != 0) {
      add("memory",
          "stage " + std::to_string(st.id) + " data-parallel degree " +
              std::to_string(d) + " does not divide its micro-batch",
          {st.id});
      continue;
    }
    int inflight = st.schedule.empty()
                       ? st.sched_cfg.inflight_samples
                       : PeakInFlight(st.schedule) * st.micro_batch;
    bool known = true;
    for (OpId op : st.op_ids) known = known && g.HasOp(op);
    if (!known) continue;
    MemoryBreakdown mem =
        StageMemory(g, st, inflight, cluster.weight_multiplier);
    if (mem.total() > cluster.mem_per_device * (1 + 1e-12)) {
      std::ostringstream os;
      os << "stage " << st.id << " needs " << mem.total()
         << " bytes per device, budget is " << cluster.mem_per_device;
      add("memory", os.str(), {st.id});
    }
  }
  (void)acyclic;
  return report;
}

StageGraph AssembleStageGraph(const ComputationGraph &g,
                              const std::vector<StageSpec> &specs,
                              int mini_batch, const std::set<Edge> &extra) {
  std::vector<std::vector<OpId>> blocks;
  for (const StageSpec &spec : specs) {
    std::vector<OpId> ops = spec.ops;
    std::sort(ops.begin(), ops.end());
    blocks.push_back(ops);
  }
  std::set<Edge> edges = InducedStageEdges(g, blocks);
  edges.insert(extra.begin(), extra.end());
  const int n = static_cast<int>(specs.size());
  std::vector<int> indeg(n, 0);
  std::vector<std::vector<int>> out(n);
  for (const auto &[a, b] : edges) {
    out[a].push_back(b);
    ++indeg[b];
  }
  auto key = [&](int i) {
    return blocks[i].empty() ? 0 : blocks[i].front();
  };
  auto cmp = [&](int a, int b) { return key(a) > key(b); };
  std::priority_queue<int, std::vector<int>, decltype(cmp)> ready(cmp);
  for (int i = 0; i < n; ++i) {
    if (indeg[i] == 0) ready.push(i);
  }
  std::vector<int> rank(n, -1);
  int next = 0;
  while (!ready.empty()) {
    const int i = ready.top();
    ready.pop();
    rank[i] = next++;
    for (int j : out[i]) {
      if (--indeg[j] == 0) ready.push(j);
    }
  }
  if (next != n) throw Error(ErrorCode::kCycle, "stage blocks form a cycle");

  StageGraph s;
  s.mini_batch = mini_batch;
  s.stages.resize(n);
  std::vector<int> by_rank(n);
  for (int i = 0; i < n; ++i) by_rank[rank[i]] = i;
  int device = 0;
  for (int r = 0; r < n; ++r) {
    const int i = by_rank[r];
    Stage &st = s.stages[r];
    st.id = r;
    st.op_ids = blocks[i];
    st.micro_batch = specs[i].micro_batch;
    st.sched_cfg.micro_batch = specs[i].micro_batch;
    st.sched_cfg.k = specs[i].k;
    for (int d = 0; d < specs[i].dp_degree; ++d) st.devices.push_back(device++);
  }
  for (const auto &[a, b] : edges) s.edges.emplace_back(rank[a], rank[b]);
  std::sort(s.edges.begin(), s.edges.end());
  return s;
}

}  // namespace pipeplan
