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

#include "pipeplan/pipeplan.h"

#include <algorithm>
#include <cstdlib>
#include <cstring>
#include <exception>
#include <memory>
#include <new>
#include <string>

#include "cost/cost.hpp"
#include "io/io.hpp"
#include "io/workloads.hpp"
#include "oracle/oracle.hpp"
#include "partition/partition.hpp"
#include "sim/sim.hpp"

struct pp_graph {
  pipeplan::ComputationGraph graph;
};

struct pp_cluster {
  pipeplan::DeviceCluster cluster;
};

struct pp_strategy {
  pipeplan::StrategyFile file;
  pipeplan::Strategy summary;
};

struct pp_report {
  pipeplan::SimReport report;
};

namespace {

thread_local std::string g_last_error;

pp_status StatusOf(pipeplan::ErrorCode code) {
  using pipeplan::ErrorCode;
  switch (code) {
    case ErrorCode::kParse:
    case ErrorCode::kCycle:
      return PP_ERR_PARSE;
    case ErrorCode::kNotSeriesParallel:
      return PP_ERR_NOT_SP;
    case ErrorCode::kInfeasible:
    case ErrorCode::kIndivisibleMicroBatch:
      return PP_ERR_INFEASIBLE;
    case ErrorCode::kDeadlock:
      return PP_ERR_DEADLOCK;
    case ErrorCode::kBudgetExceeded:
      return PP_ERR_BUDGET;
    case ErrorCode::kIo:
      return PP_ERR_IO;
    default:
      return PP_ERR_GENERIC;
  }
}

// Runs `fn`, translating exceptions into status codes and the thread-local
// error message.
template <typename Fn>
pp_status Guard(Fn &&fn) {
  try {
    fn();
    g_last_error.clear();
    return PP_OK;
  } catch (const pipeplan::Error &e) {
    g_last_error = e.what();
    return StatusOf(e.code());
  } catch (const nlohmann::json::exception &e) {
    g_last_error = e.what();
    return PP_ERR_PARSE;
  } catch (const std::bad_alloc &) {
    g_last_error = "out of memory";
    return PP_ERR_GENERIC;
  } catch (const std::exception &e) {
    g_last_error = e.what();
    return PP_ERR_GENERIC;
  }
}

void Require(const void *p, const char *what) {
  if (p == nullptr) {
    throw pipeplan::Error(pipeplan::ErrorCode::kInvalidArgument,
                          std::string(what) + " must not be null");
  }
}

char *Dup(const std::string &s) {
  char *out = static_cast<char *>(std::malloc(s.size() + 1));
  if (out == nullptr) throw std::bad_alloc();
  std::memcpy(out, s.c_str(), s.size() + 1);
  return out;
}

pipeplan::OptimizeOptions ToOptions(const pp_optimize_options *o) {
  pipeplan::OptimizeOptions out;
  if (o == nullptr) return out;
  out.mini_batch = o->mini_batch;
  out.mode = o->mode == PP_MODE_SPP ? pipeplan::SearchMode::kSpp
                                    : pipeplan::SearchMode::kGpp;
  out.per_stage_schedules = o->per_stage_schedules != 0;
  out.epsilon = o->epsilon > 0 ? o->epsilon : 1e-3;
  out.threads = o->threads > 0 ? o->threads : 1;
  return out;
}

// Summary numbers for a stage graph that did not come out of the optimizer.
pipeplan::Strategy Summarize(const pipeplan::StrategyFile &f) {
  pipeplan::Strategy s;
  pipeplan::CostModel cost(f.graph, f.cluster);
  for (const pipeplan::Stage &st : f.stages.stages) {
    const int dp = std::max<int>(1, static_cast<int>(st.devices.size()));
    s.bottleneck_tps =
        std::max(s.bottleneck_tps, cost.Tps(st.op_ids, st.micro_batch, dp));
    s.peak_memory = std::max(
        s.peak_memory,
        cost.Memory(st.op_ids, st.sched_cfg.inflight_samples, dp).total());
  }
  s.depth = pipeplan::PipelineDepth(f.stages);
  s.graph = f.stages;
  return s;
}

}  // namespace

extern "C" {

void pp_optimize_options_init(pp_optimize_options *options) {
  if (options == nullptr) return;
  options->mini_batch = 1;
  options->mode = PP_MODE_GPP;
  options->per_stage_schedules = 0;
  options->epsilon = 1e-3;
  options->threads = 1;
}

const char *pp_version(void) { return "1.0.0"; }

const char *pp_last_error(void) { return g_last_error.c_str(); }

void pp_string_free(char *s) { std::free(s); }

pp_status pp_graph_from_json(const char *json, pp_graph **out) {
  return Guard([&] {
    Require(json, "json");
    Require(out, "out");
    auto g = std::make_unique<pp_graph>();
    g->graph = pipeplan::GraphFromJson(pipeplan::ParseJson(json));
    *out = g.release();
  });
}

pp_status pp_graph_to_json(const pp_graph *g, char **out) {
  return Guard([&] {
    Require(g, "graph");
    Require(out, "out");
    *out = Dup(pipeplan::DumpJson(pipeplan::GraphToJson(g->graph)));
  });
}

pp_status pp_graph_num_ops(const pp_graph *g, int *out) {
  return Guard([&] {
    Require(g, "graph");
    Require(out, "out");
    *out = static_cast<int>(g->graph.OpIds().size());
  });
}

void pp_graph_free(pp_graph *g) { delete g; }

pp_status pp_generate_workload(const char *preset, int branches,
                               pp_graph **out) {
  return Guard([&] {
    Require(preset, "preset");
    Require(out, "out");
    auto g = std::make_unique<pp_graph>();
    g->graph = pipeplan::GenerateWorkload(preset, branches);
    *out = g.release();
  });
}

pp_status pp_cluster_from_json(const char *json, pp_cluster **out) {
  return Guard([&] {
    Require(json, "json");
    Require(out, "out");
    auto c = std::make_unique<pp_cluster>();
    c->cluster = pipeplan::ClusterFromJson(pipeplan::ParseJson(json));
    *out = c.release();
  });
}

pp_status pp_cluster_to_json(const pp_cluster *c, char **out) {
  return Guard([&] {
    Require(c, "cluster");
    Require(out, "out");
    *out = Dup(pipeplan::DumpJson(pipeplan::ClusterToJson(c->cluster)));
  });
}

void pp_cluster_free(pp_cluster *c) { delete c; }

pp_status pp_preset_cluster(const char *preset, int branches,
                            pp_cluster **out) {
  return Guard([&] {
    Require(preset, "preset");
    Require(out, "out");
    auto c = std::make_unique<pp_cluster>();
    c->cluster = pipeplan::PresetCluster(preset, branches);
    *out = c.release();
  });
}

pp_status pp_preset_mini_batch(const char *preset, int *out) {
  return Guard([&] {
    Require(preset, "preset");
    Require(out, "out");
    *out = pipeplan::PresetMiniBatch(preset);
  });
}

pp_status pp_optimize(const pp_graph *g, const pp_cluster *c,
                      const pp_optimize_options *options, pp_strategy **out) {
  return Guard([&] {
    Require(g, "graph");
    Require(c, "cluster");
    Require(out, "out");
    auto s = std::make_unique<pp_strategy>();
    s->summary = pipeplan::Optimize(g->graph, c->cluster, ToOptions(options));
    s->file.graph = g->graph;
    s->file.cluster = c->cluster;
    s->file.stages = s->summary.graph;
    *out = s.release();
  });
}

pp_status pp_exhaustive_optimize(const pp_graph *g, const pp_cluster *c,
                                 int mini_batch, int threads,
                                 pp_strategy **out) {
  return Guard([&] {
    Require(g, "graph");
    Require(c, "cluster");
    Require(out, "out");
    const pipeplan::ExhaustiveResult r = pipeplan::ExhaustiveOptimize(
        g->graph, c->cluster, mini_batch, threads > 0 ? threads : 1);
    auto s = std::make_unique<pp_strategy>();
    s->file.graph = g->graph;
    s->file.cluster = c->cluster;
    s->file.stages = r.graph;
    s->summary = Summarize(s->file);
    *out = s.release();
  });
}

pp_status pp_strategy_from_json(const char *json, pp_strategy **out) {
  return Guard([&] {
    Require(json, "json");
    Require(out, "out");
    auto s = std::make_unique<pp_strategy>();
    s->file = pipeplan::StrategyFromJson(pipeplan::ParseJson(json));
    s->summary = Summarize(s->file);
    *out = s.release();
  });
}

pp_status pp_strategy_to_json(const pp_strategy *s, char **out) {
  return Guard([&] {
    Require(s, "strategy");
    Require(out, "out");
    *out = Dup(pipeplan::DumpJson(pipeplan::StrategyToJson(s->file)));
  });
}

pp_status pp_strategy_summary_json(const pp_strategy *s, char **out) {
  return Guard([&] {
    Require(s, "strategy");
    Require(out, "out");
    *out = Dup(pipeplan::DumpJson(pipeplan::StrategySummaryToJson(s->summary)));
  });
}

pp_status pp_strategy_bottleneck_tps(const pp_strategy *s, double *out) {
  return Guard([&] {
    Require(s, "strategy");
    Require(out, "out");
    *out = s->summary.bottleneck_tps;
  });
}

pp_status pp_strategy_depth(const pp_strategy *s, int *out) {
  return Guard([&] {
    Require(s, "strategy");
    Require(out, "out");
    *out = s->summary.depth;
  });
}

pp_status pp_strategy_set_cluster(pp_strategy *s, const pp_cluster *c) {
  return Guard([&] {
    Require(s, "strategy");
    Require(c, "cluster");
    pipeplan::CheckCluster(c->cluster);
    s->file.cluster = c->cluster;
    const pipeplan::Strategy fresh = Summarize(s->file);
    s->summary.bottleneck_tps = fresh.bottleneck_tps;
    s->summary.peak_memory = fresh.peak_memory;
  });
}

void pp_strategy_free(pp_strategy *s) { delete s; }

pp_status pp_validate(const pp_strategy *s, int *ok, char **report_json) {
  return Guard([&] {
    Require(s, "strategy");
    Require(ok, "ok");
    const pipeplan::ValidationReport r =
        pipeplan::ValidateStrategy(s->file.graph, s->file.cluster, s->file.stages);
    *ok = r.ok() ? 1 : 0;
    if (report_json != nullptr) {
      *report_json = Dup(pipeplan::DumpJson(pipeplan::ValidationToJson(r)));
    }
  });
}

pp_status pp_simulate(const pp_strategy *s, pp_report **out) {
  return Guard([&] {
    Require(s, "strategy");
    Require(out, "out");
    pipeplan::SimOptions options;
    options.weight_update_ms = s->file.weight_update_ms;
    auto r = std::make_unique<pp_report>();
    r->report = pipeplan::Simulate(s->file.graph, s->file.cluster,
                                   s->file.stages, options);
    *out = r.release();
  });
}

pp_status pp_report_to_json(const pp_report *r, char **out) {
  return Guard([&] {
    Require(r, "report");
    Require(out, "out");
    *out = Dup(pipeplan::DumpJson(pipeplan::ReportToJson(r->report)));
  });
}

pp_status pp_report_trace(const pp_report *r, char **out) {
  return Guard([&] {
    Require(r, "report");
    Require(out, "out");
    *out = Dup(pipeplan::EmitTrace(r->report));
  });
}

pp_status pp_report_gantt_svg(const pp_report *r, char **out) {
  return Guard([&] {
    Require(r, "report");
    Require(out, "out");
    *out = Dup(pipeplan::EmitGantt(r->report));
  });
}

pp_status pp_report_iteration_ms(const pp_report *r, double *out) {
  return Guard([&] {
    Require(r, "report");
    Require(out, "out");
    *out = r->report.iteration_ms;
  });
}

void pp_report_free(pp_report *r) { delete r; }

pp_status pp_compare(const pp_graph *g, const pp_cluster *c,
                     const pp_optimize_options *options, char **out) {
  return Guard([&] {
    Require(g, "graph");
    Require(c, "cluster");
    Require(out, "out");
    const pipeplan::CompareResult r =
        pipeplan::Compare(g->graph, c->cluster, ToOptions(options));
    *out = Dup(pipeplan::DumpJson(pipeplan::CompareToJson(r)));
  });
}

}  // extern "C"
