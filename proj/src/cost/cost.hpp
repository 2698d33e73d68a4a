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

#include <vector>

#include "model/model.hpp"

namespace pipeplan {

struct LinkSpec {
  double bandwidth = 1.0;  // bytes per ms
  double latency = 0.0;    // ms
};

// Everything needed to price one stage in isolation.
struct StageCostInput {
  std::vector<Operator> ops;
  int micro_batch = 1;
  int dp_degree = 1;
  // One entry per tensor received from outside the stage (bytes per sample).
  // The same tensors carry gradients back, so they are charged twice.
  std::vector<double> inbound_bytes_per_sample;
  LinkSpec boundary_link;
  double intra_bw = 1.0;
};

struct StageTimes {
  double fwd_ms = 0.0;      // per micro-batch, per-device slice
  double bwd_ms = 0.0;      // per micro-batch, per-device slice
  double dp_sync_ms = 0.0;  // allreduce per micro-batch
  double comm_in_ms = 0.0;  // activations received per micro-batch
  double comm_out_ms = 0.0; // gradients returned per micro-batch
  double Total() const {
    return fwd_ms + bwd_ms + dp_sync_ms + comm_in_ms + comm_out_ms;
  }
};

struct MemoryBreakdown {
  double weight_bytes = 0.0;
  double activation_bytes = 0.0;
  double total() const { return weight_bytes + activation_bytes; }
};

// latency + bytes_per_sample * b / bandwidth
double CommTime(double bytes_per_sample, int micro_batch, const LinkSpec &link);

StageTimes ComputeStageTimes(const StageCostInput &in);
// Time per sample; throws kIndivisibleMicroBatch if b % d != 0.
double EstimateTps(const StageCostInput &in);

MemoryBreakdown StageMemory(const std::vector<Operator> &ops, int inflight_samples,
                            int dp_degree, double weight_multiplier);
MemoryBreakdown StageMemory(const ComputationGraph &g, const Stage &stage,
                            int inflight_samples, double weight_multiplier);

// Convenience wrapper that derives stage inputs from a graph and a cluster.
// Boundary traffic is charged to the consumer: each distinct producer outside
// the op set with a nonzero output contributes one inbound tensor.
class CostModel {
 public:
  CostModel(const ComputationGraph &g, const DeviceCluster &cluster)
      : g_(g), cluster_(cluster) {}

  const ComputationGraph &graph() const { return g_; }
  const DeviceCluster &cluster() const { return cluster_; }

  StageCostInput MakeInput(const std::vector<OpId> &ops, int micro_batch,
                           int dp_degree) const;
  StageTimes Times(const std::vector<OpId> &ops, int micro_batch,
                   int dp_degree) const;
  double Tps(const std::vector<OpId> &ops, int micro_batch, int dp_degree) const;
  MemoryBreakdown Memory(const std::vector<OpId> &ops, int inflight_samples,
                         int dp_degree) const;
  // Bytes per sample flowing from stage ops `from` into stage ops `to`
  // (summed over distinct producers).
  double BoundaryBytes(const std::vector<OpId> &from,
                       const std::vector<OpId> &to) const;
  LinkSpec InterLink() const {
    return {cluster_.inter_bw, cluster_.link_latency};
  }

 private:
  const ComputationGraph &g_;
  DeviceCluster cluster_;
};

}  // namespace pipeplan
