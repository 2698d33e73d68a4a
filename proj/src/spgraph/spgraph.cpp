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

#include "spgraph/spgraph.hpp"

#include <algorithm>
#include <functional>
#include <limits>
#include <map>
#include <sstream>

namespace pipeplan {

namespace {

Operator MakeVirtual(OpId id, const std::string &name) {
  Operator op;
  op.id = id;
  op.name = name;
  op.fwd_cost = CostCurve::Zero();
  op.bwd_cost = CostCurve::Zero();
  return op;
}

NormalizedGraph NormalizeImpl(const ComputationGraph &g,
                              std::set<OpId> virtual_ops) {
  if (g.empty()) return {g, virtual_ops};
  std::vector<Operator> ops = g.ops();
  std::set<Edge> edges(g.edges().begin(), g.edges().end());
  OpId next_id = g.MaxId() + 1;

  auto out_degree = [&](OpId u) {
    auto it = edges.lower_bound({u, std::numeric_limits<int>::min()});
    int n = 0;
    for (; it != edges.end() && it->first == u; ++it) ++n;
    return n;
  };
  auto successors = [&](OpId u) {
    std::vector<OpId> out;
    auto it = edges.lower_bound({u, std::numeric_limits<int>::min()});
    for (; it != edges.end() && it->first == u; ++it) out.push_back(it->second);
    return out;
  };
  auto predecessors = [&](OpId v) {
    std::vector<OpId> out;
    for (const auto &[a, b] : edges) {
      if (b == v) out.push_back(a);
    }
    return out;
  };

  std::vector<OpId> sources, sinks;
  for (const Operator &op : g.ops()) {
    if (g.Preds(op.id).empty()) sources.push_back(op.id);
    if (g.Succs(op.id).empty()) sinks.push_back(op.id);
  }
  if (sources.size() > 1) {
    OpId vs = next_id++;
    ops.push_back(MakeVirtual(vs, "~source"));
    virtual_ops.insert(vs);
    for (OpId s : sources) edges.insert({vs, s});
  }
  if (sinks.size() > 1) {
    OpId vt = next_id++;
    ops.push_back(MakeVirtual(vt, "~sink"));
    virtual_ops.insert(vt);
    for (OpId t : sinks) edges.insert({t, vt});
  }
  // Fork points of real operators get a virtual junction after them.
  for (const Operator &op : g.ops()) {
    if (virtual_ops.count(op.id) || out_degree(op.id) <= 1) continue;
    OpId f = next_id++;
    ops.push_back(MakeVirtual(f, "~fork" + std::to_string(op.id)));
    virtual_ops.insert(f);
    for (OpId v : successors(op.id)) {
      edges.erase({op.id, v});
      edges.insert({f, v});
    }
    edges.insert({op.id, f});
  }
  // Join points of real operators get a virtual junction before them.
  for (const Operator &op : g.ops()) {
    if (virtual_ops.count(op.id)) continue;
    std::vector<OpId> preds = predecessors(op.id);
    if (preds.size() <= 1) continue;
    OpId j = next_id++;
    ops.push_back(MakeVirtual(j, "~join" + std::to_string(op.id)));
    virtual_ops.insert(j);
    for (OpId u : preds) {
      edges.erase({u, op.id});
      edges.insert({u, j});
    }
    edges.insert({j, op.id});
  }
  return {ComputationGraph(std::move(ops),
                           std::vector<Edge>(edges.begin(), edges.end())),
          std::move(virtual_ops)};
}

// Builder for decomposition trees.
class TreeBuilder {
 public:
  explicit TreeBuilder(SPTree &tree) : tree_(tree) {}

  int Leaf(OpId op) {
    SPNode n;
    n.kind = SPNode::Kind::kLeaf;
    n.op = op;
    n.source = n.sink = op;
    n.ops = {op};
    return Add(std::move(n));
  }

  int Empty(OpId source, OpId sink) {
    SPNode n;
    n.kind = SPNode::Kind::kEmpty;
    n.source = source;
    n.sink = sink;
    return Add(std::move(n));
  }

  // Components equal to -1 are skipped; nested series are flattened.
  int Series(const std::vector<int> &parts) {
    std::vector<int> children;
    for (int p : parts) {
      if (p < 0) continue;
      if (tree_.nodes[p].kind == SPNode::Kind::kSeries) {
        for (int c : tree_.nodes[p].children) children.push_back(c);
      } else {
        children.push_back(p);
      }
    }
    if (children.size() == 1) return children[0];
    SPNode n;
    n.kind = SPNode::Kind::kSeries;
    n.children = children;
    n.source = tree_.nodes[children.front()].source;
    n.sink = tree_.nodes[children.back()].sink;
    n.ops = Union(children);
    return Add(std::move(n));
  }

  // Branch trees equal to -1 denote direct edges between the terminals.
  int Parallel(OpId source, OpId sink, int x, int y) {
    std::vector<int> branches;
    for (int p : {x, y}) {
      if (p < 0) {
        branches.push_back(Empty(source, sink));
      } else if (tree_.nodes[p].kind == SPNode::Kind::kParallel) {
        for (int c : tree_.nodes[p].children) branches.push_back(c);
      } else {
        branches.push_back(p);
      }
    }
    std::sort(branches.begin(), branches.end(), [&](int a, int b) {
      const SPNode &na = tree_.nodes[a], &nb = tree_.nodes[b];
      if (na.ops.empty() != nb.ops.empty()) return nb.ops.empty();
      if (na.ops.empty()) return a < b;
      return na.ops.front() < nb.ops.front();
    });
    SPNode n;
    n.kind = SPNode::Kind::kParallel;
    n.children = branches;
    n.source = source;
    n.sink = sink;
    n.ops = Union(branches);
    return Add(std::move(n));
  }

 private:
  int Add(SPNode n) {
    tree_.nodes.push_back(std::move(n));
    return static_cast<int>(tree_.nodes.size()) - 1;
  }
  std::vector<OpId> Union(const std::vector<int> &nodes) {
    std::vector<OpId> ops;
    for (int c : nodes) {
      const auto &o = tree_.nodes[c].ops;
      ops.insert(ops.end(), o.begin(), o.end());
    }
    std::sort(ops.begin(), ops.end());
    return ops;
  }

  SPTree &tree_;
};

std::string FormatEdges(const std::vector<Edge> &edges) {
  std::ostringstream os;
  for (size_t i = 0; i < edges.size(); ++i) {
    if (i) os << ' ';
    os << '(' << edges[i].first << ',' << edges[i].second << ')';
  }
  return os.str();
}

}  // namespace

NormalizedGraph Normalize(const ComputationGraph &g) {
  return NormalizeImpl(g, {});
}

NormalizedGraph Normalize(const NormalizedGraph &g) {
  return NormalizeImpl(g.graph, g.virtual_ops);
}

SPTree Decompose(const NormalizedGraph &ng) {
  const ComputationGraph &g = ng.graph;
  SPTree tree;
  TreeBuilder build(tree);
  if (g.empty()) {
    throw Error(ErrorCode::kInvalidArgument, "cannot decompose an empty graph");
  }
  if (g.size() == 1) {
    tree.root = build.Leaf(g.ops()[0].id);
    return tree;
  }
  std::vector<OpId> sources, sinks;
  for (const Operator &op : g.ops()) {
    if (g.Preds(op.id).empty()) sources.push_back(op.id);
    if (g.Succs(op.id).empty()) sinks.push_back(op.id);
  }
  if (sources.size() != 1 || sinks.size() != 1) {
    throw Error(ErrorCode::kNotSeriesParallel,
                "graph is not two-terminal; normalize it first");
  }
  const OpId S = sources[0], T = sinks[0];

  // Edge-labelled reduction: each remaining edge carries the tree of the
  // subgraph strictly between its endpoints (-1 for a plain edge).
  std::map<Edge, int> label;
  std::map<OpId, std::set<OpId>> out, in;
  for (const auto &[u, v] : g.edges()) {
    label[{u, v}] = -1;
    out[u].insert(v);
    in[v].insert(u);
  }
  std::set<OpId> alive;
  for (const Operator &op : g.ops()) alive.insert(op.id);

  bool changed = true;
  while (changed) {
    changed = false;
    for (auto it = alive.begin(); it != alive.end();) {
      const OpId w = *it;
      if (w == S || w == T || in[w].size() != 1 || out[w].size() != 1) {
        ++it;
        continue;
      }
      const OpId u = *in[w].begin();
      const OpId v = *out[w].begin();
      const int merged =
          build.Series({label.at({u, w}), build.Leaf(w), label.at({w, v})});
      label.erase({u, w});
      label.erase({w, v});
      out[u].erase(w);
      in[v].erase(w);
      in.erase(w);
      out.erase(w);
      auto existing = label.find({u, v});
      if (existing != label.end()) {
        existing->second = build.Parallel(u, v, existing->second, merged);
      } else {
        label[{u, v}] = merged;
        out[u].insert(v);
        in[v].insert(u);
      }
      it = alive.erase(it);
      changed = true;
    }
  }
  if (alive.size() != 2 || label.size() != 1 || !label.count({S, T})) {
    std::vector<Edge> witness;
    for (const auto &[e, _] : label) witness.push_back(e);
    throw Error(ErrorCode::kNotSeriesParallel,
                "graph is not series-parallel; irreducible edges: " +
                    FormatEdges(witness));
  }
  tree.root = build.Series({build.Leaf(S), label.at({S, T}), build.Leaf(T)});
  return tree;
}

std::set<Edge> RebuildEdges(const SPTree &tree) {
  std::set<Edge> edges;
  using Ends = std::pair<std::vector<OpId>, std::vector<OpId>>;
  std::function<Ends(int)> walk = [&](int idx) -> Ends {
    const SPNode &n = tree.nodes[idx];
    switch (n.kind) {
      case SPNode::Kind::kLeaf:
        return {{n.op}, {n.op}};
      case SPNode::Kind::kEmpty:
        return {{}, {}};
      case SPNode::Kind::kParallel: {
        Ends ends;
        for (int c : n.children) {
          if (tree.nodes[c].kind == SPNode::Kind::kEmpty) {
            edges.insert({n.source, n.sink});
            continue;
          }
          Ends sub = walk(c);
          ends.first.insert(ends.first.end(), sub.first.begin(), sub.first.end());
          ends.second.insert(ends.second.end(), sub.second.begin(),
                             sub.second.end());
        }
        return ends;
      }
      case SPNode::Kind::kSeries: {
        Ends first{}, prev{};
        for (size_t i = 0; i < n.children.size(); ++i) {
          Ends cur = walk(n.children[i]);
          if (i == 0) {
            first = cur;
          } else {
            for (OpId u : prev.second) {
              for (OpId v : cur.first) edges.insert({u, v});
            }
          }
          prev = cur;
        }
        return {first.first, prev.second};
      }
    }
    return {};
  };
  walk(tree.root);
  return edges;
}

std::vector<SeriesSplit> SeriesSplits(const SPTree &tree, int node) {
  const SPNode &n = tree.nodes.at(node);
  if (n.kind != SPNode::Kind::kSeries) {
    throw Error(ErrorCode::kInvalidArgument, "series_splits needs a series node");
  }
  std::vector<SeriesSplit> out;
  for (size_t k = 0; k + 1 < n.children.size(); ++k) {
    SeriesSplit s;
    for (size_t i = 0; i < n.children.size(); ++i) {
      const auto &ops = tree.nodes[n.children[i]].ops;
      auto &dst = i <= k ? s.g1 : s.g2;
      dst.insert(dst.end(), ops.begin(), ops.end());
    }
    std::sort(s.g1.begin(), s.g1.end());
    std::sort(s.g2.begin(), s.g2.end());
    s.junction = tree.nodes[n.children[k]].sink;
    out.push_back(std::move(s));
  }
  return out;
}

std::vector<ParallelSplit> ParallelSplits(const SPTree &tree, int node) {
  const SPNode &n = tree.nodes.at(node);
  if (n.kind != SPNode::Kind::kParallel) {
    throw Error(ErrorCode::kInvalidArgument,
                "parallel_splits needs a parallel node");
  }
  std::vector<int> branches;
  for (int c : n.children) {
    if (!tree.nodes[c].ops.empty()) branches.push_back(c);
  }
  std::vector<ParallelSplit> out;
  if (branches.size() < 2) return out;
  const size_t count = branches.size() == 2 ? 1 : branches.size();
  for (size_t i = 0; i < count; ++i) {
    ParallelSplit s;
    s.g1 = tree.nodes[branches[i]].ops;
    for (size_t j = 0; j < branches.size(); ++j) {
      if (j == i) continue;
      const auto &ops = tree.nodes[branches[j]].ops;
      s.g2.insert(s.g2.end(), ops.begin(), ops.end());
    }
    std::sort(s.g2.begin(), s.g2.end());
    out.push_back(std::move(s));
  }
  return out;
}

std::vector<OpId> Linearize(const ComputationGraph &g) {
  return g.TopologicalOrder();
}

namespace {

class WorkBuilder {
 public:
  explicit WorkBuilder(WorkTree &tree) : tree_(tree) {}

  int Leaf(OpId op) {
    WorkNode n;
    n.kind = WorkNode::Kind::kLeaf;
    n.op = op;
    n.ops = {op};
    return Add(std::move(n));
  }

  int Series(const std::vector<int> &parts) {
    std::vector<int> children;
    for (int p : parts) {
      if (p < 0) continue;
      if (tree_.nodes[p].kind == WorkNode::Kind::kSeries) {
        for (int c : tree_.nodes[p].children) children.push_back(c);
      } else {
        children.push_back(p);
      }
    }
    if (children.empty()) return -1;
    if (children.size() == 1) return children[0];
    WorkNode n;
    n.kind = WorkNode::Kind::kSeries;
    n.children = children;
    n.ops = Union(children);
    return Add(std::move(n));
  }

  int Parallel(const std::vector<int> &parts) {
    std::vector<int> branches;
    for (int p : parts) {
      if (p < 0) continue;
      if (tree_.nodes[p].kind == WorkNode::Kind::kParallel) {
        for (int c : tree_.nodes[p].children) branches.push_back(c);
      } else {
        branches.push_back(p);
      }
    }
    if (branches.empty()) return -1;
    if (branches.size() == 1) return branches[0];
    std::sort(branches.begin(), branches.end(), [&](int a, int b) {
      return tree_.nodes[a].ops.front() < tree_.nodes[b].ops.front();
    });
    WorkNode n;
    n.kind = WorkNode::Kind::kParallel;
    n.children = branches;
    n.ops = Union(branches);
    return Add(std::move(n));
  }

 private:
  int Add(WorkNode n) {
    tree_.nodes.push_back(std::move(n));
    return static_cast<int>(tree_.nodes.size()) - 1;
  }
  std::vector<OpId> Union(const std::vector<int> &nodes) {
    std::vector<OpId> ops;
    for (int c : nodes) {
      const auto &o = tree_.nodes[c].ops;
      ops.insert(ops.end(), o.begin(), o.end());
    }
    std::sort(ops.begin(), ops.end());
    return ops;
  }

  WorkTree &tree_;
};

}  // namespace

WorkTree BuildWorkTree(const SPTree &tree, const NormalizedGraph &g) {
  WorkTree work;
  WorkBuilder build(work);
  std::function<int(int)> convert = [&](int idx) -> int {
    const SPNode &n = tree.nodes[idx];
    switch (n.kind) {
      case SPNode::Kind::kLeaf:
        return g.IsVirtual(n.op) ? -1 : build.Leaf(n.op);
      case SPNode::Kind::kEmpty:
        return -1;
      case SPNode::Kind::kSeries: {
        std::vector<int> parts;
        for (int c : n.children) parts.push_back(convert(c));
        return build.Series(parts);
      }
      case SPNode::Kind::kParallel: {
        std::vector<int> parts;
        for (int c : n.children) parts.push_back(convert(c));
        return build.Parallel(parts);
      }
    }
    return -1;
  };
  work.root = convert(tree.root);
  if (work.root < 0) {
    throw Error(ErrorCode::kInvalidArgument, "graph has no real operators");
  }
  return work;
}

WorkTree ChainWorkTree(const std::vector<OpId> &order) {
  WorkTree work;
  WorkBuilder build(work);
  std::vector<int> leaves;
  for (OpId op : order) leaves.push_back(build.Leaf(op));
  work.root = build.Series(leaves);
  if (work.root < 0) {
    throw Error(ErrorCode::kInvalidArgument, "empty operator order");
  }
  return work;
}

}  // namespace pipeplan
