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

#include "partition/partition.hpp"

#include <algorithm>
#include <cstdio>
#include <limits>
#include <map>
#include <memory>
#include <tuple>
#include <unordered_map>

#include "cost/cost.hpp"
#include "sched/sched.hpp"
#include "spgraph/spgraph.hpp"

namespace pipeplan {

std::vector<int> CandidateMicroBatches(int mini_batch) {
  std::vector<int> out;
  for (int b = 1; b <= mini_batch; b *= 2) {
    if (mini_batch % b == 0) out.push_back(b);
  }
  return out;
}

std::vector<int> CandidateKs(int micro_batch, int mini_batch, bool per_stage) {
  if (!per_stage) return {1};
  std::vector<int> out;
  for (int k = 1; k * micro_batch <= mini_batch; k *= 2) out.push_back(k);
  return out;
}

double MaxTps(const ComputationGraph &g, const DeviceCluster &cluster) {
  CostModel cost(g, cluster);
  return 2.0 * cost.Tps(g.OpIds(), 1, 1);
}

namespace {

constexpr double kMemSlack = 1e-12;

struct Cfg {
  int b = 1;
  int k = 1;
};

struct Key {
  int ref = 0;
  int cf = 0;
  int cb = -1;  // -1: nothing downstream
  int ib = 0;
  int d = 0;
  int exact = 0;  // 1: single stage with exactly d data-parallel devices
  bool operator==(const Key &o) const {
    return ref == o.ref && cf == o.cf && cb == o.cb && ib == o.ib && d == o.d &&
           exact == o.exact;
  }
};

struct KeyHash {
  size_t operator()(const Key &k) const {
    uint64_t h = static_cast<uint64_t>(k.ref);
    h = h * 1000003u + static_cast<uint64_t>(k.cf);
    h = h * 1000003u + static_cast<uint64_t>(k.cb + 1);
    h = h * 1000003u + static_cast<uint64_t>(k.ib);
    h = h * 1000003u + static_cast<uint64_t>(k.d);
    h = h * 2u + static_cast<uint64_t>(k.exact);
    return std::hash<uint64_t>()(h);
  }
};

enum class ChoiceKind : uint8_t {
  kBase,
  kSeriesStage,     // left piece is one stage
  kSeriesChild,     // left piece is a parallel child solved recursively
  kSeriesAbsorb,    // left piece is a parallel child plus absorbed tail
  kParallel,        // first branch vs the remaining bundle
  kAbsorb,          // join stage, branch-0 prefix and other branches
  kWholeAbsorb,     // series range solved as one absorb piece
};

struct Choice {
  ChoiceKind kind = ChoiceKind::kBase;
  int dp = 0;       // stage dp degree (base, series-stage left, join)
  int split = -1;   // series cut: last child of the left piece
  int cm = -1;      // boundary config between left and right
  int d_right = 0;  // devices of the right part / remaining bundle
  int p = -1;       // absorb: first child of branch 0 in the join stage
  int cj = -1;      // absorb: join stage config
  int d_pre = 0;    // absorb: devices of the branch-0 prefix
};

struct Val {
  bool feasible = false;
  int i_f = 0;
  double mem = 0.0;
  int stages = 0;
  Choice ch;
};

bool Better(const Val &a, const Val &b) {
  if (!a.feasible) return false;
  if (!b.feasible) return true;
  return std::tie(a.i_f, a.mem, a.stages) < std::tie(b.i_f, b.mem, b.stages);
}

enum class RefKind { kLeaf, kRange, kUnion, kAbsorb };

struct RefInfo {
  RefKind kind = RefKind::kLeaf;
  int node = -1;  // work node (leaf/range/absorb parallel node)
  int lo = 0;     // range start, or first ref of a union, or tail ref
  int hi = 0;     // range end, or second ref of a union
  std::vector<OpId> ops;
  double params = 0.0;
  double act = 0.0;
  // (b, dp) -> (tps, compute-only lower bound)
  std::unordered_map<int, std::pair<double, double>> cost;
};

class Partitioner {
 public:
  Partitioner(const ComputationGraph &g, const DeviceCluster &cluster,
              WorkTree tree, int mini_batch, bool per_stage, bool absorb,
              bool chain)
      : g_(g),
        cluster_(cluster),
        cost_(g, cluster),
        tree_(std::move(tree)),
        B_(mini_batch),
        absorb_(absorb),
        chain_(chain) {
    for (int b : CandidateMicroBatches(B_)) {
      for (int k : CandidateKs(b, B_, per_stage)) configs_.push_back({b, k});
    }
    per_stage_ = per_stage;
    if (chain_) {
      const std::vector<OpId> order = Linearize(g_);
      for (size_t i = 0; i < order.size(); ++i) position_[order[i]] = i;
    }
  }

  std::optional<StageGraph> Probe(double t, SearchStats *stats) {
    t_ = t;
    memo_.clear();
    transitions_ = 0;
    const int root = NodeRef(tree_.root);
    struct Best {
      StageGraph graph;
      double mem = 0.0;
      size_t stages = 0;
      std::string encoding;
    };
    std::optional<Best> best;
    for (int c = 0; c < static_cast<int>(configs_.size()); ++c) {
      const Val v = Solve(root, c, -1, 0, cluster_.num_devices);
      if (!v.feasible) continue;
      std::vector<StageSpec> specs;
      Build(root, c, -1, 0, cluster_.num_devices, specs);
      std::optional<StageGraph> s = Finish(specs);
      if (!s) continue;
      Best cand;
      cand.graph = *s;
      for (const Stage &st : s->stages) {
        const int dp = static_cast<int>(st.devices.size());
        cand.mem = std::max(
            cand.mem,
            cost_.Memory(st.op_ids, st.sched_cfg.inflight_samples, dp).total());
      }
      cand.stages = s->stages.size();
      cand.encoding = Encode(*s);
      if (!best || std::tie(cand.mem, cand.stages, cand.encoding) <
                       std::tie(best->mem, best->stages, best->encoding)) {
        best = std::move(cand);
      }
    }
    if (stats) {
      ++stats->probes;
      stats->dp_states += static_cast<int64_t>(memo_.size());
      stats->dp_transitions += transitions_;
    }
    if (!best) return std::nullopt;
    return best->graph;
  }

 private:
  // ---- references to op sets --------------------------------------------

  int Intern(RefKind kind, int node, int lo, int hi) {
    const auto key = std::make_tuple(static_cast<int>(kind), node, lo, hi);
    auto it = ref_index_.find(key);
    if (it != ref_index_.end()) return it->second;
    RefInfo info;
    info.kind = kind;
    info.node = node;
    info.lo = lo;
    info.hi = hi;
    switch (kind) {
      case RefKind::kLeaf:
        info.ops = {tree_.nodes[node].op};
        break;
      case RefKind::kRange:
        for (int i = lo; i <= hi; ++i) {
          const auto &ops = tree_.nodes[tree_.nodes[node].children[i]].ops;
          info.ops.insert(info.ops.end(), ops.begin(), ops.end());
        }
        break;
      case RefKind::kUnion:
        info.ops = refs_[lo].ops;
        info.ops.insert(info.ops.end(), refs_[hi].ops.begin(),
                        refs_[hi].ops.end());
        break;
      case RefKind::kAbsorb:
        info.ops = tree_.nodes[node].ops;
        info.ops.insert(info.ops.end(), refs_[lo].ops.begin(),
                        refs_[lo].ops.end());
        break;
    }
    std::sort(info.ops.begin(), info.ops.end());
    for (OpId op : info.ops) {
      info.params += g_.Op(op).param_bytes;
      info.act += g_.Op(op).act_bytes_per_sample;
    }
    const int id = static_cast<int>(refs_.size());
    refs_.push_back(std::move(info));
    ref_index_.emplace(key, id);
    return id;
  }

  int NodeRef(int node) {
    const WorkNode &n = tree_.nodes[node];
    if (n.kind == WorkNode::Kind::kLeaf) return Intern(RefKind::kLeaf, node, 0, 0);
    return Intern(RefKind::kRange, node, 0,
                  static_cast<int>(n.children.size()) - 1);
  }

  int RangeRef(int node, int lo, int hi) {
    if (lo == hi) return NodeRef(tree_.nodes[node].children[lo]);
    return Intern(RefKind::kRange, node, lo, hi);
  }

  const std::pair<double, double> &Cost(int ref, int b, int dp) {
    RefInfo &r = refs_[ref];
    const int key = b * 4096 + dp;
    auto it = r.cost.find(key);
    if (it != r.cost.end()) return it->second;
    const StageTimes t = cost_.Times(r.ops, b, dp);
    const double tps = t.Total() / b;
    const double lower = (t.fwd_ms + t.bwd_ms + t.dp_sync_ms) / b;
    return r.cost.emplace(key, std::make_pair(tps, lower)).first->second;
  }

  double Memory(int ref, int inflight, int dp) const {
    const RefInfo &r = refs_[ref];
    return r.params * cluster_.weight_multiplier / dp +
           r.act * static_cast<double>(inflight) / dp;
  }

  // Data-parallel degrees usable for micro-batch b with at most d devices.
  static std::vector<int> DpOptions(int b, int d) {
    std::vector<int> out;
    for (int dp = 1; dp <= b && dp <= d; ++dp) {
      if (b % dp == 0) out.push_back(dp);
    }
    return out;
  }

  std::vector<int> Compatible(int cf) const {
    if (!per_stage_) return {cf};
    std::vector<int> out(configs_.size());
    for (size_t i = 0; i < out.size(); ++i) out[i] = static_cast<int>(i);
    return out;
  }

  // ---- DP -----------------------------------------------------------------

  Val BaseExact(int ref, int cf, int cb, int ib, int dp) {
    const Key key{ref, cf, cb, ib, dp, 1};
    auto it = memo_.find(key);
    if (it != memo_.end()) return it->second;
    Val v;
    const Cfg &c = configs_[cf];
    if (c.b % dp == 0 && Cost(ref, c.b, dp).first <= t_) {
      int i = 0;
      if (cb < 0) {
        i = std::min(c.k * c.b, B_);
      } else {
        const Cfg &y = configs_[cb];
        i = RequiredInFlight({c.k, c.b, y.k, y.b, ib}, B_);
      }
      const double mem = Memory(ref, i, dp);
      if (i / c.b >= c.k &&
          mem <= cluster_.mem_per_device * (1 + kMemSlack)) {
        v.feasible = true;
        v.i_f = i;
        v.mem = mem;
        v.stages = 1;
        v.ch.kind = ChoiceKind::kBase;
        v.ch.dp = dp;
      }
    }
    memo_.emplace(key, v);
    return v;
  }

  Val BaseBest(int ref, int cf, int cb, int ib, int d) {
    Val best;
    for (int dp : DpOptions(configs_[cf].b, d)) {
      ++transitions_;
      const Val v = BaseExact(ref, cf, cb, ib, dp);
      if (Better(v, best)) best = v;
    }
    return best;
  }

  Val Solve(int ref, int cf, int cb, int ib, int d) {
    const Key key{ref, cf, cb, ib, d, 0};
    auto it = memo_.find(key);
    if (it != memo_.end()) return it->second;
    Val v;
    const RefInfo &r = refs_[ref];
    switch (r.kind) {
      case RefKind::kLeaf:
      case RefKind::kUnion:
        v = BaseBest(ref, cf, cb, ib, d);
        break;
      case RefKind::kRange:
        if (tree_.nodes[r.node].kind == WorkNode::Kind::kSeries) {
          v = SolveSeries(ref, cf, cb, ib, d);
        } else {
          v = SolveParallel(ref, cf, cb, ib, d);
        }
        break;
      case RefKind::kAbsorb:
        v = SolveAbsorb(ref, cf, cb, ib, d);
        break;
    }
    memo_.emplace(key, v);
    return v;
  }

  // Minimum compute-only TPS lower bound of `ref` over usable dp degrees.
  double LowerBound(int ref, int b, int d) {
    double lb = std::numeric_limits<double>::infinity();
    for (int dp : DpOptions(b, d)) lb = std::min(lb, Cost(ref, b, dp).second);
    return lb;
  }

  Val SolveSeries(int ref, int cf, int cb, int ib, int d) {
    const int node = refs_[ref].node;
    const int lo = refs_[ref].lo;
    const int hi = refs_[ref].hi;
    const WorkNode &n = tree_.nodes[node];
    const int b_f = configs_[cf].b;
    Val best = BaseBest(ref, cf, cb, ib, d);
    // Every cut raises the source's in-flight count unless it is capped.
    if (!per_stage_ && best.feasible && best.i_f < B_) return best;
    if (d < 2) return best;

    const int first = n.children[lo];
    const bool head_is_parallel =
        tree_.nodes[first].kind == WorkNode::Kind::kParallel;
    if (absorb_ && head_is_parallel) {
      // The whole range as one piece: the join absorbs every later child.
      ++transitions_;
      const int piece =
          Intern(RefKind::kAbsorb, first, RangeRef(node, lo + 1, hi), 0);
      Val v = Solve(piece, cf, cb, ib, d);
      if (v.feasible) {
        v.ch = Choice{};
        v.ch.kind = ChoiceKind::kWholeAbsorb;
        if (Better(v, best)) best = v;
      }
    }
    for (int k = lo; k < hi; ++k) {
      // Left pieces only grow with k; stop once even their compute-only cost
      // cannot meet the target.
      if (!head_is_parallel) {
        if (LowerBound(RangeRef(node, lo, k), b_f, d) > t_) break;
      } else if (k > lo && LowerBound(RangeRef(node, lo + 1, k), b_f, d) > t_) {
        break;
      }
      const int right = RangeRef(node, k + 1, hi);
      const int left = RangeRef(node, lo, k);
      for (int cm : Compatible(cf)) {
        // (a) the left piece is a single stage.
        for (int d1 : DpOptions(b_f, d - 1)) {
          if (Cost(left, b_f, d1).first > t_) continue;
          const Val rv = Solve(right, cm, cb, ib, d - d1);
          ++transitions_;
          if (!rv.feasible) continue;
          const Val lv = BaseExact(left, cf, cm, rv.i_f, d1);
          if (!lv.feasible) continue;
          Val v{true, lv.i_f, std::max(lv.mem, rv.mem), 1 + rv.stages, {}};
          v.ch.kind = ChoiceKind::kSeriesStage;
          v.ch.dp = d1;
          v.ch.split = k;
          v.ch.cm = cm;
          v.ch.d_right = d - d1;
          if (Better(v, best)) best = v;
        }
        // (b) the left piece is a parallel child decomposed on its own.
        if (k == lo && tree_.nodes[first].kind != WorkNode::Kind::kLeaf) {
          const int child = NodeRef(first);
          for (int d1 = 1; d1 < d; ++d1) {
            const Val rv = Solve(right, cm, cb, ib, d - d1);
            ++transitions_;
            if (!rv.feasible) continue;
            const Val lv = Solve(child, cf, cm, rv.i_f, d1);
            if (!lv.feasible) continue;
            Val v{true, lv.i_f, std::max(lv.mem, rv.mem), lv.stages + rv.stages,
                  {}};
            v.ch.kind = ChoiceKind::kSeriesChild;
            v.ch.split = k;
            v.ch.cm = cm;
            v.ch.d_right = d - d1;
            if (Better(v, best)) best = v;
          }
        }
        // (c) the parallel child's join is merged with the following ops.
        if (absorb_ && head_is_parallel && k > lo) {
          const int piece = Intern(RefKind::kAbsorb, first,
                                   RangeRef(node, lo + 1, k), 0);
          for (int d1 = 2; d1 < d; ++d1) {
            const Val rv = Solve(right, cm, cb, ib, d - d1);
            ++transitions_;
            if (!rv.feasible) continue;
            const Val lv = Solve(piece, cf, cm, rv.i_f, d1);
            if (!lv.feasible) continue;
            Val v{true, lv.i_f, std::max(lv.mem, rv.mem), lv.stages + rv.stages,
                  {}};
            v.ch.kind = ChoiceKind::kSeriesAbsorb;
            v.ch.split = k;
            v.ch.cm = cm;
            v.ch.d_right = d - d1;
            if (Better(v, best)) best = v;
          }
        }
      }
    }
    return best;
  }

  Val SolveParallel(int ref, int cf, int cb, int ib, int d) {
    const int node = refs_[ref].node;
    const int lo = refs_[ref].lo;
    const int hi = refs_[ref].hi;
    Val best = BaseBest(ref, cf, cb, ib, d);
    const int first = NodeRef(tree_.nodes[node].children[lo]);
    const int rest = RangeRef(node, lo + 1, hi);
    for (int d1 = 1; d1 < d; ++d1) {
      ++transitions_;
      const Val a = Solve(first, cf, cb, ib, d1);
      if (!a.feasible) continue;
      const Val r = Solve(rest, cf, cb, ib, d - d1);
      if (!r.feasible) continue;
      Val v{true, std::max(a.i_f, r.i_f), std::max(a.mem, r.mem),
            a.stages + r.stages, {}};
      v.ch.kind = ChoiceKind::kParallel;
      v.ch.d_right = d - d1;
      if (Better(v, best)) best = v;
    }
    return best;
  }

  // Branch 0 of the parallel node is cut at child p: children [p..] join the
  // tail in one stage J, children [0..p) and the other branches feed J.
  struct AbsorbParts {
    int others = -1;
    int branch0 = -1;
    int branch0_len = 1;
  };

  AbsorbParts Parts(int pnode) {
    const WorkNode &pn = tree_.nodes[pnode];
    AbsorbParts parts;
    parts.others =
        RangeRef(pnode, 1, static_cast<int>(pn.children.size()) - 1);
    parts.branch0 = pn.children[0];
    const WorkNode &q0 = tree_.nodes[parts.branch0];
    if (q0.kind == WorkNode::Kind::kSeries) {
      parts.branch0_len = static_cast<int>(q0.children.size());
    }
    return parts;
  }

  int JoinRef(const AbsorbParts &parts, int p, int tail) {
    const int suffix = parts.branch0_len > 1
                           ? RangeRef(parts.branch0, p, parts.branch0_len - 1)
                           : NodeRef(parts.branch0);
    return Intern(RefKind::kUnion, -1, suffix, tail);
  }

  Val SolveAbsorb(int ref, int cf, int cb, int ib, int d) {
    const int pnode = refs_[ref].node;
    const int tail = refs_[ref].lo;
    const AbsorbParts parts = Parts(pnode);
    Val best;
    for (int p = 0; p < parts.branch0_len; ++p) {
      const int join = JoinRef(parts, p, tail);
      const std::vector<int> cjs = p == 0 ? std::vector<int>{cf} : Compatible(cf);
      for (int cj : cjs) {
        const int b_j = configs_[cj].b;
        for (int dj : DpOptions(b_j, d - 1 - (p > 0 ? 1 : 0))) {
          if (Cost(join, b_j, dj).first > t_) continue;
          const Val jv = BaseExact(join, cj, cb, ib, dj);
          if (!jv.feasible) continue;
          const int rem = d - dj;
          if (p == 0) {
            ++transitions_;
            const Val ov = Solve(parts.others, cf, cj, jv.i_f, rem);
            if (!ov.feasible) continue;
            Val v{true, std::max(jv.i_f, ov.i_f), std::max(jv.mem, ov.mem),
                  1 + ov.stages, {}};
            v.ch.kind = ChoiceKind::kAbsorb;
            v.ch.p = 0;
            v.ch.cj = cj;
            v.ch.dp = dj;
            v.ch.d_pre = 0;
            if (Better(v, best)) best = v;
            continue;
          }
          const int prefix = RangeRef(parts.branch0, 0, p - 1);
          for (int dpre = 1; dpre < rem; ++dpre) {
            ++transitions_;
            const Val pv = Solve(prefix, cf, cj, jv.i_f, dpre);
            if (!pv.feasible) continue;
            const Val ov = Solve(parts.others, cf, cj, jv.i_f, rem - dpre);
            if (!ov.feasible) continue;
            Val v{true, std::max(pv.i_f, ov.i_f),
                  std::max({jv.mem, pv.mem, ov.mem}),
                  1 + pv.stages + ov.stages, {}};
            v.ch.kind = ChoiceKind::kAbsorb;
            v.ch.p = p;
            v.ch.cj = cj;
            v.ch.dp = dj;
            v.ch.d_pre = dpre;
            if (Better(v, best)) best = v;
          }
        }
      }
    }
    return best;
  }

  // ---- reconstruction ---------------------------------------------------

  void Build(int ref, int cf, int cb, int ib, int d,
             std::vector<StageSpec> &out) {
    const Val v = Solve(ref, cf, cb, ib, d);
    const Choice &ch = v.ch;
    const RefInfo &r = refs_[ref];
    auto stage = [&](int sref, int c, int dp) {
      out.push_back({refs_[sref].ops, configs_[c].b, configs_[c].k, dp});
    };
    switch (ch.kind) {
      case ChoiceKind::kBase:
        stage(ref, cf, ch.dp);
        return;
      case ChoiceKind::kSeriesStage:
      case ChoiceKind::kSeriesChild:
      case ChoiceKind::kSeriesAbsorb: {
        const int node = r.node;
        const int right = RangeRef(node, ch.split + 1, r.hi);
        const Val rv = Solve(right, ch.cm, cb, ib, ch.d_right);
        Build(right, ch.cm, cb, ib, ch.d_right, out);
        const int d_left = d - ch.d_right;
        const int first = tree_.nodes[node].children[r.lo];
        if (ch.kind == ChoiceKind::kSeriesStage) {
          stage(RangeRef(node, r.lo, ch.split), cf, ch.dp);
        } else if (ch.kind == ChoiceKind::kSeriesChild) {
          Build(NodeRef(first), cf, ch.cm, rv.i_f, d_left, out);
        } else {
          const int piece = Intern(RefKind::kAbsorb, first,
                                   RangeRef(node, r.lo + 1, ch.split), 0);
          Build(piece, cf, ch.cm, rv.i_f, d_left, out);
        }
        return;
      }
      case ChoiceKind::kWholeAbsorb: {
        const int first = tree_.nodes[r.node].children[r.lo];
        const int piece = Intern(RefKind::kAbsorb, first,
                                 RangeRef(r.node, r.lo + 1, r.hi), 0);
        Build(piece, cf, cb, ib, d, out);
        return;
      }
      case ChoiceKind::kParallel: {
        const int first = NodeRef(tree_.nodes[r.node].children[r.lo]);
        const int rest = RangeRef(r.node, r.lo + 1, r.hi);
        Build(first, cf, cb, ib, d - ch.d_right, out);
        Build(rest, cf, cb, ib, ch.d_right, out);
        return;
      }
      case ChoiceKind::kAbsorb: {
        const int pnode = r.node;
        const int tail = r.lo;
        const AbsorbParts parts = Parts(pnode);
        const int join = JoinRef(parts, ch.p, tail);
        const Val jv = BaseExact(join, ch.cj, cb, ib, ch.dp);
        stage(join, ch.cj, ch.dp);
        if (ch.p > 0) {
          Build(RangeRef(parts.branch0, 0, ch.p - 1), cf, ch.cj, jv.i_f,
                ch.d_pre, out);
        }
        Build(parts.others, cf, ch.cj, jv.i_f, d - ch.dp - ch.d_pre, out);
        return;
      }
    }
  }

  std::optional<StageGraph> Finish(std::vector<StageSpec> specs) {
    std::set<Edge> extra;
    if (chain_) {
      std::sort(specs.begin(), specs.end(),
                [&](const StageSpec &a, const StageSpec &b) {
                  return position_.at(a.ops.front()) < position_.at(b.ops.front());
                });
      for (size_t i = 0; i + 1 < specs.size(); ++i) {
        extra.emplace(static_cast<int>(i), static_cast<int>(i + 1));
      }
    }
    for (StageSpec &s : specs) std::sort(s.ops.begin(), s.ops.end());
    StageGraph s = AssembleStageGraph(g_, specs, B_, extra);
    GraphScheduleResult r = ScheduleStageGraph(g_, cluster_, s, KPolicy::kKeep);
    if (!r.feasible) return std::nullopt;
    return r.graph;
  }

  // Fixed-width fields so that lexicographic order is numeric order; the
  // micro-batch sizes come first so smaller micro-batches win ties.
  static std::string Encode(const StageGraph &s) {
    std::string out;
    char buf[32];
    for (const Stage &st : s.stages) {
      std::snprintf(buf, sizeof(buf), "%06d", st.micro_batch);
      out += buf;
    }
    for (const Stage &st : s.stages) {
      std::snprintf(buf, sizeof(buf), "|%06d|%06zu|", st.sched_cfg.k,
                    st.devices.size());
      out += buf;
      for (OpId op : st.op_ids) {
        std::snprintf(buf, sizeof(buf), "%09d,", op);
        out += buf;
      }
    }
    return out;
  }

  const ComputationGraph &g_;
  DeviceCluster cluster_;
  CostModel cost_;
  WorkTree tree_;
  int B_;
  bool per_stage_ = false;
  bool absorb_ = true;
  bool chain_ = false;
  std::vector<Cfg> configs_;
  std::map<OpId, size_t> position_;

  std::vector<RefInfo> refs_;
  std::map<std::tuple<int, int, int, int>, int> ref_index_;

  double t_ = 0.0;
  std::unordered_map<Key, Val, KeyHash> memo_;
  int64_t transitions_ = 0;
};

std::unique_ptr<Partitioner> MakePartitioner(const ComputationGraph &g,
                                             const DeviceCluster &cluster,
                                             const OptimizeOptions &options) {
  if (g.empty()) throw Error(ErrorCode::kInvalidArgument, "empty graph");
  if (options.mini_batch < 1) {
    throw Error(ErrorCode::kInvalidArgument, "mini-batch must be >= 1");
  }
  CheckCluster(cluster);
  const bool chain = options.mode == SearchMode::kSpp;
  WorkTree tree;
  if (chain) {
    tree = ChainWorkTree(Linearize(g));
  } else {
    const NormalizedGraph ng = Normalize(g);
    tree = BuildWorkTree(Decompose(ng), ng);
  }
  return std::make_unique<Partitioner>(
      g, cluster, std::move(tree), options.mini_batch,
      options.per_stage_schedules, options.join_absorption && !chain, chain);
}

Strategy Summarize(const ComputationGraph &g, const DeviceCluster &cluster,
                   StageGraph s, SearchMode mode, const SearchStats &stats) {
  Strategy out;
  CostModel cost(g, cluster);
  for (const Stage &st : s.stages) {
    const int dp = static_cast<int>(st.devices.size());
    out.bottleneck_tps =
        std::max(out.bottleneck_tps, cost.Tps(st.op_ids, st.micro_batch, dp));
    out.peak_memory = std::max(
        out.peak_memory,
        cost.Memory(st.op_ids, st.sched_cfg.inflight_samples, dp).total());
  }
  out.depth = PipelineDepth(s);
  out.graph = std::move(s);
  out.mode = mode;
  out.stats = stats;
  return out;
}

}  // namespace

std::optional<StageGraph> SearchStageGraph(const ComputationGraph &g,
                                           const DeviceCluster &cluster,
                                           double t_max,
                                           const OptimizeOptions &options,
                                           SearchStats *stats) {
  auto p = MakePartitioner(g, cluster, options);
  return p->Probe(t_max, stats);
}

Strategy Optimize(const ComputationGraph &g, const DeviceCluster &cluster,
                  const OptimizeOptions &options) {
  auto p = MakePartitioner(g, cluster, options);
  SearchStats stats;
  stats.max_tps = MaxTps(g, cluster);
  const double rel = options.epsilon > 0 ? options.epsilon : 1e-3;
  stats.epsilon = rel * stats.max_tps;
  double lo = 0.0, hi = stats.max_tps;
  std::optional<StageGraph> best = p->Probe(hi, &stats);
  if (!best) {
    throw Error(ErrorCode::kInfeasible,
                "no feasible strategy even at the maximum TPS target; the "
                "memory budget is too small");
  }
  while (hi - lo > stats.epsilon) {
    const double mid = 0.5 * (lo + hi);
    std::optional<StageGraph> s = p->Probe(mid, &stats);
    if (s) {
      best = std::move(s);
      hi = mid;
    } else {
      lo = mid;
    }
  }
  stats.t_low = lo;
  stats.t_high = hi;
  return Summarize(g, cluster, std::move(*best), options.mode, stats);
}

Strategy SppOptimize(const ComputationGraph &g, const DeviceCluster &cluster,
                     OptimizeOptions options) {
  options.mode = SearchMode::kSpp;
  return Optimize(g, cluster, options);
}

}  // namespace pipeplan
