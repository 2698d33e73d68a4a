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
#include <map>
#include <set>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

namespace pipeplan {

// Error categories. The numeric values of the first few mirror the CLI exit
// codes so that the C API and the command-line tool agree.
enum class ErrorCode : int {
  kInvalidArgument = 1,
  kParse = 2,
  kNotSeriesParallel = 3,
  kInfeasible = 4,
  kDeadlock = 5,
  kBudgetExceeded = 6,
  kIo = 7,
  kIndivisibleMicroBatch = 8,
  kNoConditionMatches = 9,
  kCycle = 10,
  kInternal = 11,
};

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string &message)
      : std::runtime_error(message), code_(code) {}
  ErrorCode code() const { return code_; }

 private:
  ErrorCode code_;
};

using OpId = int;
using StageId = int;
using Edge = std::pair<int, int>;

// Maps a (per-device) micro-batch size in samples to milliseconds.
class CostCurve {
 public:
  enum class Kind { kAffine, kTable };

  CostCurve() = default;
  static CostCurve Affine(double a, double b);
  // Points are (micro-batch size, ms). Keys must be positive and distinct.
  static CostCurve Table(std::vector<std::pair<double, double>> points);
  static CostCurve Zero() { return Affine(0.0, 0.0); }

  Kind kind() const { return kind_; }
  double a() const { return a_; }
  double b() const { return b_; }
  const std::vector<std::pair<double, double>> &points() const {
    return points_;
  }

  // Evaluates the curve. Tables interpolate linearly between keys and
  // extrapolate with the slope of the nearest segment (clamped at zero below
  // the first key). A single-point table scales proportionally.
  double Eval(double samples) const;
  CostCurve Scaled(double factor) const;
  bool operator==(const CostCurve &other) const;

 private:
  Kind kind_ = Kind::kAffine;
  double a_ = 0.0;
  double b_ = 0.0;
  std::vector<std::pair<double, double>> points_;
};

struct Operator {
  OpId id = 0;
  std::string name;
  double param_bytes = 0.0;
  double act_bytes_per_sample = 0.0;
  double out_bytes_per_sample = 0.0;
  CostCurve fwd_cost;
  CostCurve bwd_cost;
  bool operator==(const Operator &other) const = default;
};

// Immutable DAG of operators. Construction validates the invariants.
class ComputationGraph {
 public:
  ComputationGraph() = default;
  ComputationGraph(std::vector<Operator> ops, std::vector<Edge> edges);

  const std::vector<Operator> &ops() const { return ops_; }
  const std::vector<Edge> &edges() const { return edges_; }
  size_t size() const { return ops_.size(); }
  bool empty() const { return ops_.empty(); }

  bool HasOp(OpId id) const { return index_.count(id) != 0; }
  int IndexOf(OpId id) const;
  const Operator &Op(OpId id) const { return ops_[IndexOf(id)]; }
  const std::vector<OpId> &Preds(OpId id) const { return preds_[IndexOf(id)]; }
  const std::vector<OpId> &Succs(OpId id) const { return succs_[IndexOf(id)]; }
  std::vector<OpId> OpIds() const;
  OpId MaxId() const;
  // Deterministic topological order (smallest ready id first).
  std::vector<OpId> TopologicalOrder() const;

  bool operator==(const ComputationGraph &other) const {
    return ops_ == other.ops_ && edges_ == other.edges_;
  }

 private:
  std::vector<Operator> ops_;  // sorted by id
  std::vector<Edge> edges_;    // sorted, unique
  std::unordered_map<OpId, int> index_;
  std::vector<std::vector<OpId>> preds_;
  std::vector<std::vector<OpId>> succs_;
};

struct DeviceCluster {
  int num_devices = 1;
  double mem_per_device = 1.0;  // bytes
  double intra_bw = 1.0;        // bytes per ms, used for data-parallel sync
  double inter_bw = 1.0;        // bytes per ms, used between stages
  double link_latency = 0.0;    // ms
  double weight_multiplier = 2.0;
  bool operator==(const DeviceCluster &other) const = default;
};
void CheckCluster(const DeviceCluster &cluster);

struct ScheduleConfig {
  int inflight_samples = 0;  // i; 0 means not yet configured
  int micro_batch = 1;       // b
  int k = 1;                 // kFkB alternation count
  bool operator==(const ScheduleConfig &other) const = default;
};

enum class Direction { kForward, kBackward };

struct Task {
  Direction dir = Direction::kForward;
  int index = 0;
  bool operator==(const Task &other) const = default;
};

using TaskSchedule = std::vector<Task>;
std::string ScheduleToString(const TaskSchedule &schedule);
TaskSchedule ScheduleFromString(const std::string &text);
// Largest number of micro-batches whose forward ran but backward did not.
int PeakInFlight(const TaskSchedule &schedule);
// Number of forwards issued before the first backward.
int WarmUpLength(const TaskSchedule &schedule);

struct Stage {
  StageId id = 0;
  std::vector<OpId> op_ids;  // sorted
  int micro_batch = 1;
  std::vector<int> devices;  // sorted
  ScheduleConfig sched_cfg;
  TaskSchedule schedule;
  bool operator==(const Stage &other) const = default;
};

struct StageGraph {
  std::vector<Stage> stages;
  std::vector<Edge> edges;  // pairs of stage ids
  int mini_batch = 1;
  bool operator==(const StageGraph &other) const = default;

  int IndexOf(StageId id) const;
  std::vector<StageId> Preds(StageId id) const;
  std::vector<StageId> Succs(StageId id) const;
  // Stage ids in topological order (ties by smaller id). Throws on cycles.
  std::vector<StageId> TopologicalOrder() const;
};

struct Violation {
  std::string condition;  // "structure", "C1", "C2", "C3", "C4", "memory"
  std::string message;
  std::vector<StageId> stages;
  std::vector<Edge> edges;
};

struct ValidationReport {
  std::vector<Violation> violations;
  bool ok() const { return violations.empty(); }
};

ValidationReport ValidateStrategy(const ComputationGraph &g,
                                  const DeviceCluster &cluster,
                                  const StageGraph &s);

// Number of stages on the longest directed path; throws kCycle on cycles.
int PipelineDepth(const StageGraph &s);

// Edges (i, j) between partition blocks (indices into `partition`) such that
// some computation edge crosses from block i to block j.
std::set<Edge> InducedStageEdges(const ComputationGraph &g,
                                 const std::vector<std::vector<OpId>> &partition);

// True if no directed path leaves `members` and re-enters it.
bool IsConvex(const ComputationGraph &g, const std::set<OpId> &members);

// Blueprint of one stage before scheduling.
struct StageSpec {
  std::vector<OpId> ops;
  int micro_batch = 1;
  int k = 1;
  int dp_degree = 1;
};

// Builds an unscheduled stage graph from blocks. Edges are the induced ones
// plus `extra` (pairs of spec indices). Stage ids follow a topological order
// (ties: smaller minimum op id) and devices are handed out contiguously in id
// order.
StageGraph AssembleStageGraph(const ComputationGraph &g,
                              const std::vector<StageSpec> &specs,
                              int mini_batch, const std::set<Edge> &extra = {});

}  // namespace pipeplan
