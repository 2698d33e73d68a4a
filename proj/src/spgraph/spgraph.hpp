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

#include <set>
#include <vector>

#include "model/model.hpp"

namespace pipeplan {

// A computation graph extended with zero-cost junction operators so that it
// has a single source and sink and every fork/join point is virtual.
struct NormalizedGraph {
  ComputationGraph graph;
  std::set<OpId> virtual_ops;
  bool IsVirtual(OpId id) const { return virtual_ops.count(id) != 0; }
};

NormalizedGraph Normalize(const ComputationGraph &g);
// Re-normalizing an already normalized graph adds nothing.
NormalizedGraph Normalize(const NormalizedGraph &g);

// Decomposition tree over the operators of a normalized graph.
//
// Series nodes hold an ordered list of components (the maximal series chain);
// consecutive components are joined by edges from the exits of one to the
// entries of the next. Parallel nodes hold the branches strung between their
// two terminal operators, which live in the enclosing series. A kEmpty branch
// stands for a direct terminal-to-terminal edge.
struct SPNode {
  enum class Kind { kLeaf, kSeries, kParallel, kEmpty };
  Kind kind = Kind::kLeaf;
  OpId op = -1;               // kLeaf only
  std::vector<int> children;  // node indices
  OpId source = -1;           // terminals: the op itself for a leaf
  OpId sink = -1;
  std::vector<OpId> ops;      // all operators below this node, sorted
};

struct SPTree {
  std::vector<SPNode> nodes;
  int root = -1;
  const SPNode &node(int i) const { return nodes[i]; }
};

// Throws kNotSeriesParallel with the irreducible edges as witness.
SPTree Decompose(const NormalizedGraph &g);

// Reconstructs the edge set encoded by a decomposition tree.
std::set<Edge> RebuildEdges(const SPTree &tree);

struct SeriesSplit {
  std::vector<OpId> g1;
  std::vector<OpId> g2;
  OpId junction = -1;
};
struct ParallelSplit {
  std::vector<OpId> g1;
  std::vector<OpId> g2;
};

std::vector<SeriesSplit> SeriesSplits(const SPTree &tree, int node);
std::vector<ParallelSplit> ParallelSplits(const SPTree &tree, int node);

// Deterministic topological order (smallest ready id first).
std::vector<OpId> Linearize(const ComputationGraph &g);

// Working tree used by the partitioner: virtual operators and empty branches
// are dropped, single-branch bundles collapse, and series chains are flat.
struct WorkNode {
  enum class Kind { kLeaf, kSeries, kParallel };
  Kind kind = Kind::kLeaf;
  OpId op = -1;
  std::vector<int> children;  // series components or parallel branches
  std::vector<OpId> ops;      // real operators below this node, sorted
};

struct WorkTree {
  std::vector<WorkNode> nodes;
  int root = -1;
};

WorkTree BuildWorkTree(const SPTree &tree, const NormalizedGraph &g);
// A flat series of leaves in the given order (used for linearized chains).
WorkTree ChainWorkTree(const std::vector<OpId> &order);

}  // namespace pipeplan
