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

#include "cost/cost.hpp"

#include <algorithm>
#include <set>

namespace pipeplan {

double CommTime(double bytes_per_sample, int micro_batch, const LinkSpec &link) {
  return link.latency + bytes_per_sample * micro_batch / link.bandwidth;
}

StageTimes ComputeStageTimes(const StageCostInput &in) {
  if (in.micro_batch < 1 || in.dp_degree < 1) {
    throw Error(ErrorCode::kInvalidArgument,
                "micro-batch and data-parallel degree must be >= 1");
  }
  if (in.micro_batch % in.dp_degree != 0) {
    throw Error(ErrorCode::kIndivisibleMicroBatch,
                "micro-batch " + std::to_string(in.micro_batch) +
                    " is not divisible by data-parallel degree " +
                    std::to_string(in.dp_degree));
  }
  const double per_device = static_cast<double>(in.micro_batch / in.dp_degree);
  StageTimes t;
  double weight_bytes = 0.0;
  for (const Operator &op : in.ops) {
    t.fwd_ms += op.fwd_cost.Eval(per_device);
    t.bwd_ms += op.bwd_cost.Eval(per_device);
    weight_bytes += op.param_bytes;
  }
  if (in.dp_degree > 1) {
    const double d = in.dp_degree;
    t.dp_sync_ms = 2.0 * (d - 1.0) / d * weight_bytes / in.intra_bw;
  }
  for (double bytes : in.inbound_bytes_per_sample) {
    const double c = CommTime(bytes, in.micro_batch, in.boundary_link);
    t.comm_in_ms += c;
    t.comm_out_ms += c;
  }
  return t;
}

double EstimateTps(const StageCostInput &in) {
  return ComputeStageTimes(in).Total() / in.micro_batch;
}

MemoryBreakdown StageMemory(const std::vector<Operator> &ops, int inflight_samples,
                            int dp_degree, double weight_multiplier) {
  MemoryBreakdown m;
  const double d = std::max(1, dp_degree);
  for (const Operator &op : ops) {
    m.weight_bytes += op.param_bytes * weight_multiplier / d;
    m.activation_bytes += op.act_bytes_per_sample * inflight_samples / d;
  }
  return m;
}

MemoryBreakdown StageMemory(const ComputationGraph &g, const Stage &stage,
                            int inflight_samples, double weight_multiplier) {
  std::vector<Operator> ops;
  ops.reserve(stage.op_ids.size());
  for (OpId id : stage.op_ids) ops.push_back(g.Op(id));
  return StageMemory(ops, inflight_samples,
                     static_cast<int>(stage.devices.size()), weight_multiplier);
}

StageCostInput CostModel::MakeInput(const std::vector<OpId> &ops,
                                    int micro_batch, int dp_degree) const {
  StageCostInput in;
  in.micro_batch = micro_batch;
  in.dp_degree = dp_degree;
  in.boundary_link = InterLink();
  in.intra_bw = cluster_.intra_bw;
  std::set<OpId> members(ops.begin(), ops.end());
  std::set<OpId> producers;
  in.ops.reserve(ops.size());
  for (OpId id : ops) {
    in.ops.push_back(g_.Op(id));
    for (OpId p : g_.Preds(id)) {
      if (!members.count(p)) producers.insert(p);
    }
  }
  for (OpId p : producers) {
    const double bytes = g_.Op(p).out_bytes_per_sample;
    if (bytes > 0) in.inbound_bytes_per_sample.push_back(bytes);
  }
  return in;
}

StageTimes CostModel::Times(const std::vector<OpId> &ops, int micro_batch,
                            int dp_degree) const {
  return ComputeStageTimes(MakeInput(ops, micro_batch, dp_degree));
}

double CostModel::Tps(const std::vector<OpId> &ops, int micro_batch,
                      int dp_degree) const {
  return EstimateTps(MakeInput(ops, micro_batch, dp_degree));
}

MemoryBreakdown CostModel::Memory(const std::vector<OpId> &ops,
                                  int inflight_samples, int dp_degree) const {
  std::vector<Operator> list;
  list.reserve(ops.size());
  for (OpId id : ops) list.push_back(g_.Op(id));
  return StageMemory(list, inflight_samples, dp_degree,
                     cluster_.weight_multiplier);
}

double CostModel::BoundaryBytes(const std::vector<OpId> &from,
                                const std::vector<OpId> &to) const {
  std::set<OpId> dst(to.begin(), to.end());
  double bytes = 0.0;
  for (OpId u : from) {
    for (OpId v : g_.Succs(u)) {
      if (dst.count(v)) {
        bytes += g_.Op(u).out_bytes_per_sample;
        break;
      }
    }
  }
  return bytes;
}

}  // namespace pipeplan
