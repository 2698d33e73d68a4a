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

// Command-line front end. Talks to the library only through the C API.

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <memory>
#include <sstream>
#include <string>

#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include "CLI11.hpp"
#include "pipeplan/pipeplan.h"

namespace {

// Exit codes: 0 success, 1 other failure, 2 parse error, 3 graph is not
// series-parallel, 4 no feasible strategy, 5 deadlock.
int ExitCodeOf(pp_status s) {
  switch (s) {
    case PP_OK:
      return 0;
    case PP_ERR_PARSE:
      return 2;
    case PP_ERR_NOT_SP:
      return 3;
    case PP_ERR_INFEASIBLE:
      return 4;
    case PP_ERR_DEADLOCK:
      return 5;
    default:
      return 1;
  }
}

struct Failure {
  int code;
};

std::shared_ptr<spdlog::logger> Log() {
  static std::shared_ptr<spdlog::logger> log = [] {
    auto l = spdlog::stderr_color_mt("pipeplan");
    l->set_pattern("[%l] %v");
    const char *env = std::getenv("GPP_LOG");
    l->set_level(env != nullptr ? spdlog::level::from_str(env)
                                : spdlog::level::warn);
    return l;
  }();
  return log;
}

void Check(pp_status s, const std::string &what) {
  if (s == PP_OK) return;
  Log()->error("{}: {}", what, pp_last_error());
  throw Failure{ExitCodeOf(s)};
}

std::string ReadText(const std::string &path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    Log()->error("cannot read {}", path);
    throw Failure{1};
  }
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

void WriteText(const std::string &path, const std::string &text) {
  std::ofstream out(path, std::ios::binary);
  out << text;
  if (!out) {
    Log()->error("cannot write {}", path);
    throw Failure{1};
  }
  Log()->info("wrote {}", path);
}

// Takes ownership of a library-allocated string.
std::string Take(char *s) {
  std::string out = s != nullptr ? s : "";
  pp_string_free(s);
  return out;
}

template <typename T, void (*Free)(T *)>
struct Handle {
  T *p = nullptr;
  Handle() = default;
  Handle(const Handle &) = delete;
  Handle &operator=(const Handle &) = delete;
  ~Handle() { Free(p); }
};

using Graph = Handle<pp_graph, pp_graph_free>;
using Cluster = Handle<pp_cluster, pp_cluster_free>;
using Strategy = Handle<pp_strategy, pp_strategy_free>;
using Report = Handle<pp_report, pp_report_free>;

void LoadGraph(const std::string &path, Graph &g) {
  Check(pp_graph_from_json(ReadText(path).c_str(), &g.p), path);
}

void LoadCluster(const std::string &path, Cluster &c) {
  Check(pp_cluster_from_json(ReadText(path).c_str(), &c.p), path);
}

void LoadStrategy(const std::string &path, Strategy &s) {
  Check(pp_strategy_from_json(ReadText(path).c_str(), &s.p), path);
}

struct SearchFlags {
  std::string graph;
  std::string cluster;
  int mini_batch = 1;
  std::string mode = "gpp";
  bool per_stage = false;
  double epsilon = 1e-3;
};

void AddSearchFlags(CLI::App *cmd, SearchFlags &f) {
  cmd->add_option("--graph", f.graph, "Graph file")->required();
  cmd->add_option("--cluster", f.cluster, "Cluster file")->required();
  cmd->add_option("--mini-batch", f.mini_batch, "Mini-batch size B")
      ->required()
      ->check(CLI::PositiveNumber);
  cmd->add_option("--per-stage-schedules", f.per_stage,
                  "Search per-stage micro-batch sizes and kFkB schedules");
  cmd->add_option("--epsilon", f.epsilon,
                  "Bisection tolerance relative to the maximum TPS")
      ->check(CLI::PositiveNumber);
}

pp_optimize_options ToOptions(const SearchFlags &f, int threads) {
  pp_optimize_options o;
  pp_optimize_options_init(&o);
  o.mini_batch = f.mini_batch;
  o.mode = f.mode == "spp" ? PP_MODE_SPP : PP_MODE_GPP;
  o.per_stage_schedules = f.per_stage ? 1 : 0;
  o.epsilon = f.epsilon;
  o.threads = threads;
  return o;
}

}  // namespace

int main(int argc, char **argv) {
  CLI::App app{"Graph pipeline parallelism planner and simulator"};
  app.require_subcommand(1);
  int threads = 1;
  app.add_option("--threads", threads, "Worker threads for parallel searches")
      ->check(CLI::PositiveNumber);
  app.set_version_flag("--version", std::string(pp_version()));

  SearchFlags opt_flags;
  std::string opt_out;
  auto *optimize = app.add_subcommand("optimize", "Search a pipeline strategy");
  AddSearchFlags(optimize, opt_flags);
  optimize->add_option("--mode", opt_flags.mode, "gpp or spp")
      ->check(CLI::IsMember({"gpp", "spp"}));
  optimize->add_option("--out", opt_out, "Strategy file to write");

  std::string sim_strategy, sim_cluster, sim_trace, sim_gantt, sim_out;
  auto *simulate = app.add_subcommand("simulate", "Simulate one iteration");
  simulate->add_option("--strategy", sim_strategy, "Strategy file")->required();
  simulate->add_option("--cluster", sim_cluster,
                       "Cluster file overriding the embedded one");
  simulate->add_option("--trace", sim_trace, "Trace-event JSON to write");
  simulate->add_option("--gantt", sim_gantt, "SVG Gantt chart to write");
  simulate->add_option("--out", sim_out, "Report file (default: stdout)");

  std::string val_strategy;
  auto *validate = app.add_subcommand("validate", "Check validity conditions");
  validate->add_option("--strategy", val_strategy, "Strategy file")->required();

  SearchFlags cmp_flags;
  auto *compare = app.add_subcommand("compare", "Compare GPP with SPP");
  AddSearchFlags(compare, cmp_flags);

  std::string gen_preset, gen_out, gen_cluster_out;
  int gen_branches = 0;
  auto *gen = app.add_subcommand("gen-workload", "Emit a synthetic workload");
  gen->add_option("--preset", gen_preset, "Preset name")->required();
  gen->add_option("--branches", gen_branches, "Branch count (0: default)");
  gen->add_option("--out", gen_out, "Graph file (default: stdout)");
  gen->add_option("--cluster-out", gen_cluster_out,
                  "Also write the preset's cluster file");

  SearchFlags ex_flags;
  std::string ex_out;
  auto *exhaustive = app.add_subcommand(
      "exhaustive", "Brute-force optimum over all convex partitions");
  exhaustive->add_option("--graph", ex_flags.graph, "Graph file")->required();
  exhaustive->add_option("--cluster", ex_flags.cluster, "Cluster file")
      ->required();
  exhaustive->add_option("--mini-batch", ex_flags.mini_batch, "Mini-batch size")
      ->required()
      ->check(CLI::PositiveNumber);
  exhaustive->add_option("--out", ex_out, "Strategy file to write");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*optimize) {
      Graph g;
      Cluster c;
      Strategy s;
      LoadGraph(opt_flags.graph, g);
      LoadCluster(opt_flags.cluster, c);
      const pp_optimize_options o = ToOptions(opt_flags, threads);
      Log()->info("optimizing ({}, B={})", opt_flags.mode, o.mini_batch);
      Check(pp_optimize(g.p, c.p, &o, &s.p), "optimize");
      if (!opt_out.empty()) {
        char *text = nullptr;
        Check(pp_strategy_to_json(s.p, &text), "serialize");
        WriteText(opt_out, Take(text));
      }
      char *summary = nullptr;
      Check(pp_strategy_summary_json(s.p, &summary), "summary");
      std::cout << Take(summary);
    } else if (*simulate) {
      Strategy s;
      Report r;
      LoadStrategy(sim_strategy, s);
      if (!sim_cluster.empty()) {
        Cluster c;
        LoadCluster(sim_cluster, c);
        Check(pp_strategy_set_cluster(s.p, c.p), "cluster");
      }
      Check(pp_simulate(s.p, &r.p), "simulate");
      char *text = nullptr;
      if (!sim_trace.empty()) {
        Check(pp_report_trace(r.p, &text), "trace");
        WriteText(sim_trace, Take(text));
      }
      if (!sim_gantt.empty()) {
        Check(pp_report_gantt_svg(r.p, &text), "gantt");
        WriteText(sim_gantt, Take(text));
      }
      Check(pp_report_to_json(r.p, &text), "report");
      if (sim_out.empty()) {
        std::cout << Take(text);
      } else {
        WriteText(sim_out, Take(text));
      }
    } else if (*validate) {
      Strategy s;
      LoadStrategy(val_strategy, s);
      int ok = 0;
      char *text = nullptr;
      Check(pp_validate(s.p, &ok, &text), "validate");
      std::cout << Take(text);
      if (!ok) {
        Log()->warn("strategy violates validity conditions");
        return 1;
      }
    } else if (*compare) {
      Graph g;
      Cluster c;
      LoadGraph(cmp_flags.graph, g);
      LoadCluster(cmp_flags.cluster, c);
      const pp_optimize_options o = ToOptions(cmp_flags, threads);
      char *text = nullptr;
      Check(pp_compare(g.p, c.p, &o, &text), "compare");
      std::cout << Take(text);
    } else if (*gen) {
      Graph g;
      Check(pp_generate_workload(gen_preset.c_str(), gen_branches, &g.p),
            "gen-workload");
      char *text = nullptr;
      Check(pp_graph_to_json(g.p, &text), "serialize");
      if (gen_out.empty()) {
        std::cout << Take(text);
      } else {
        WriteText(gen_out, Take(text));
      }
      if (!gen_cluster_out.empty()) {
        Cluster c;
        Check(pp_preset_cluster(gen_preset.c_str(), gen_branches, &c.p),
              "cluster");
        Check(pp_cluster_to_json(c.p, &text), "serialize");
        WriteText(gen_cluster_out, Take(text));
      }
    } else if (*exhaustive) {
      Graph g;
      Cluster c;
      Strategy s;
      LoadGraph(ex_flags.graph, g);
      LoadCluster(ex_flags.cluster, c);
      Check(pp_exhaustive_optimize(g.p, c.p, ex_flags.mini_batch, threads, &s.p),
            "exhaustive");
      if (!ex_out.empty()) {
        char *text = nullptr;
        Check(pp_strategy_to_json(s.p, &text), "serialize");
        WriteText(ex_out, Take(text));
      }
      char *summary = nullptr;
      Check(pp_strategy_summary_json(s.p, &summary), "summary");
      std::cout << Take(summary);
    }
  } catch (const Failure &f) {
    return f.code;
  }
  return 0;
}
