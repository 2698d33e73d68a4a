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

// Acceptance checks. Prints one PASS/FAIL line per criterion followed by the
// measured values; exits non-zero when any criterion fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdarg>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <map>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "common/random_graphs.hpp"
#include "io/io.hpp"
#include "io/workloads.hpp"
#include "oracle/oracle.hpp"
#include "partition/partition.hpp"
#include "sched/sched.hpp"
#include "sim/sim.hpp"

namespace pipeplan {
namespace {

// ---- tolerances -------------------------------------------------------------

constexpr double kRelEpsilon = 1e-3;        // optimality, parity: x MAXTPS
constexpr double kCaseRatioMax = 0.90;      // case study: T_gpp / T_spp
constexpr double kCaseRatioLow = 0.78;      // shipped-profile band
constexpr double kCaseRatioHigh = 0.88;
constexpr double kCaseGainMin = 0.05;       // each gain source
constexpr double kBranchRatioSlack = 1e-9;  // monotonicity
constexpr double kPresetSeconds = 60.0;
constexpr int kRandomInstances = 300;

// ---- result bookkeeping -------------------------------------------------------

struct Result {
  bool pass = true;
  std::vector<std::string> lines;

  void Check(bool ok, const std::string &what) {
    pass = pass && ok;
    lines.push_back(std::string(ok ? "ok   " : "MISS ") + what);
  }
  void Note(const std::string &what) { lines.push_back("     " + what); }
};

std::string Fmt(const char *format, ...) __attribute__((format(printf, 1, 2)));
std::string Fmt(const char *format, ...) {
  char buf[512];
  va_list args;
  va_start(args, format);
  std::vsnprintf(buf, sizeof(buf), format, args);
  va_end(args);
  return buf;
}

// Every optimizer output seen by any criterion, re-checked by criterion 9.
struct Produced {
  ComputationGraph graph;
  DeviceCluster cluster;
  StageGraph stages;
  std::string origin;
};
std::vector<Produced> &AllOutputs() {
  static std::vector<Produced> outputs;
  return outputs;
}
void Record(const ComputationGraph &g, const DeviceCluster &c,
            const StageGraph &s, const std::string &origin) {
  AllOutputs().push_back({g, c, s, origin});
}

ComputationGraph UnitChain(int n) {
  std::vector<Operator> ops;
  std::vector<Edge> edges;
  for (int i = 0; i < n; ++i) {
    Operator op;
    op.id = i;
    op.name = "op" + std::to_string(i);
    op.param_bytes = 0;
    op.act_bytes_per_sample = 1e3;
    op.fwd_cost = CostCurve::Affine(0, 1);
    op.bwd_cost = CostCurve::Affine(0, 1);
    ops.push_back(op);
    if (i > 0) edges.push_back({i - 1, i});
  }
  return ComputationGraph(ops, edges);
}

DeviceCluster BigCluster(int devices) {
  DeviceCluster c;
  c.num_devices = devices;
  c.mem_per_device = 1e12;
  c.intra_bw = 1e9;
  c.inter_bw = 1e9;
  return c;
}

const StageSimStats &SourceStats(const StageGraph &s, const SimReport &r) {
  for (const StageSimStats &st : r.stages) {
    if (s.Preds(st.id).empty()) return st;
  }
  return r.stages.front();
}

// ---- 1: motivating example ----------------------------------------------------

Result MotivatingExample() {
  Result res;
  const ComputationGraph g = GenerateWorkload("fig2");
  const DeviceCluster c = PresetCluster("fig2");
  OptimizeOptions o;
  o.mini_batch = PresetMiniBatch("fig2");
  const CompareResult r = Compare(g, c, o);
  Record(g, c, r.gpp.graph, "fig2/gpp");
  Record(g, c, r.spp.graph, "fig2/spp");
  const StageSimStats &gs = SourceStats(r.gpp.graph, r.gpp_sim);
  const StageSimStats &ss = SourceStats(r.spp.graph, r.spp_sim);
  res.Check(r.gpp.depth == 2 && r.spp.depth == 4,
            Fmt("depth gpp %d (want 2), spp %d (want 4)", r.gpp.depth,
                r.spp.depth));
  res.Check(r.gpp_sim.warm_up_microbatches == 2 &&
                r.spp_sim.warm_up_microbatches == 4,
            Fmt("warm-up gpp %d (want 2), spp %d (want 4)",
                r.gpp_sim.warm_up_microbatches,
                r.spp_sim.warm_up_microbatches));
  res.Check(gs.peak_inflight_microbatches == 2 &&
                ss.peak_inflight_microbatches == 4,
            Fmt("first-stage in-flight gpp %d (want 2), spp %d (want 4)",
                gs.peak_inflight_microbatches, ss.peak_inflight_microbatches));
  res.Check(r.gpp_sim.iteration_ms < r.spp_sim.iteration_ms,
            Fmt("iteration gpp %.3f ms < spp %.3f ms", r.gpp_sim.iteration_ms,
                r.spp_sim.iteration_ms));
  return res;
}

// ---- 2: in-flight table --------------------------------------------------------

int OracleTwoStage(const InFlightQuery &q, int B) {
  StageGraph s;
  s.mini_batch = B;
  Stage x, y;
  x.id = 0;
  x.op_ids = {0};
  x.devices = {0};
  x.micro_batch = q.b_x;
  x.sched_cfg = {0, q.b_x, q.k_x};
  y.id = 1;
  y.op_ids = {1};
  y.devices = {1};
  y.micro_batch = q.b_y;
  y.sched_cfg = {q.i_y, q.b_y, q.k_y};
  s.stages = {x, y};
  s.edges = {{0, 1}};
  return MinInflightSearch(s, 0);
}

Result InFlightTable() {
  Result res;
  constexpr int B = 16;
  int cases = 0, excluded = 0, matched = 0, no_row = 0;
  std::map<int, int> mismatches_by_row;
  std::vector<std::string> examples;
  for (int bx : {1, 2, 4})
    for (int by : {1, 2, 4})
      for (int kx : {1, 2})
        for (int ky : {1, 2})
          for (int iy = by; iy <= 4 * by; iy += by) {
            const InFlightQuery q{kx, bx, ky, by, iy};
            if (iy / by < ky) {
              // The successor cannot hold k_y micro-batches: not a
              // configuration any schedule produces.
              ++excluded;
              continue;
            }
            ++cases;
            InFlightResult r;
            try {
              r = ComputeInFlight(q);
            } catch (const Error &e) {
              if (e.code() != ErrorCode::kNoConditionMatches) throw;
              ++no_row;
              continue;
            }
            const int ours = RequiredInFlight(q, B);
            const int oracle = OracleTwoStage(q, B);
            if (ours == oracle) {
              ++matched;
            } else {
              ++mismatches_by_row[r.row];
              examples.push_back(Fmt(
                  "(k_x=%d b_x=%d k_y=%d b_y=%d i_y=%d) row %d -> %d, "
                  "simulated minimum %d",
                  kx, bx, ky, by, iy, r.row, ours, oracle));
            }
          }
  res.Note(Fmt("%d cases (%d excluded with i_y/b_y < k_y)", cases, excluded));
  res.Check(no_row == 0, Fmt("no-matching-row instances: %d", no_row));
  const int mismatched = cases - no_row - matched;
  res.Check(mismatched == 0,
            Fmt("table vs simulated minimum: %d/%d match, %d mismatch",
                matched, cases - no_row, mismatched));
  for (const auto &[row, n] : mismatches_by_row) {
    res.Note(Fmt("row %d: %d mismatches", row, n));
  }
  for (const std::string &e : examples) res.Note(e);
  return res;
}

// ---- 3: per-stage micro-batch sizes -------------------------------------------

Result PerStageSchedules() {
  Result res;
  const ComputationGraph g = UnitChain(3);
  const DeviceCluster c = BigCluster(3);
  const auto peak = [&](std::vector<int> b, KPolicy policy) {
    const StageGraph s = AssembleStageGraph(
        g, {{{0}, b[0], 1, 1}, {{1}, b[1], 1, 1}, {{2}, b[2], 1, 1}}, 16);
    const GraphScheduleResult r = ScheduleStageGraph(g, c, s, policy);
    if (!r.feasible) return -1;
    return Simulate(g, c, r.graph).stages[0].peak_inflight_samples;
  };
  const int mixed = peak({1, 2, 4}, KPolicy::kChoose);
  const int uniform = peak({4, 4, 4}, KPolicy::kOneFOneB);
  res.Check(mixed == 10, Fmt("b=(1,2,4): first-stage peak %d samples (want 10)",
                             mixed));
  res.Check(uniform == 12,
            Fmt("b=(4,4,4): first-stage peak %d samples (want 12)", uniform));
  return res;
}

// ---- 4: optimality against exhaustive enumeration ------------------------------

Result Optimality() {
  Result res;
  std::mt19937 rng(20260417);
  int matched = 0, unsound = 0;
  double worst_gap = 0.0;
  std::vector<std::string> misses;
  for (int t = 0; t < kRandomInstances; ++t) {
    const int n = std::uniform_int_distribution<int>(2, 6)(rng);
    const ComputationGraph g =
        testing::RandomSpGraph(rng, n, 1e6, 1e6, 1e3, /*two_terminal=*/true);
    DeviceCluster c;
    c.num_devices = std::uniform_int_distribution<int>(1, 3)(rng);
    c.mem_per_device = 1e9;
    c.intra_bw = 1e5;
    c.inter_bw = 1e6;
    const int B = 1 << std::uniform_int_distribution<int>(0, 3)(rng);
    OptimizeOptions o;
    o.mini_batch = B;
    const Strategy s = Optimize(g, c, o);
    Record(g, c, s.graph, "random#" + std::to_string(t));
    const double ours = Simulate(g, c, s.graph).bottleneck_tps;
    const ExhaustiveResult ex = ExhaustiveOptimize(g, c, B);
    const double eps = kRelEpsilon * MaxTps(g, c);
    if (ours <= ex.bottleneck_tps + eps) {
      ++matched;
    } else if (misses.size() < 5) {
      std::ostringstream edges;
      for (const auto &[u, v] : g.edges()) edges << ' ' << u << "->" << v;
      misses.push_back(Fmt("#%d n=%d D=%d B=%d: %.4f vs optimum %.4f, edges%s",
                           t, n, c.num_devices, B, ours, ex.bottleneck_tps,
                           edges.str().c_str()));
    }
    if (ours < ex.bottleneck_tps - eps) ++unsound;
    worst_gap = std::max(worst_gap, ours / ex.bottleneck_tps - 1.0);
  }
  res.Check(unsound == 0,
            Fmt("never below the exhaustive optimum: %d violations", unsound));
  res.Check(matched == kRandomInstances,
            Fmt("within eps of the optimum: %d/%d (%.1f%%), worst gap %.1f%%",
                matched, kRandomInstances, 100.0 * matched / kRandomInstances,
                100.0 * worst_gap));
  for (const std::string &m : misses) res.Note(m);
  return res;
}

// ---- 5: sequential parity --------------------------------------------------------

std::map<OpId, std::tuple<OpId, size_t, int>> Shape(const StageGraph &s) {
  std::map<OpId, std::tuple<OpId, size_t, int>> out;
  for (const Stage &st : s.stages) {
    for (OpId op : st.op_ids) {
      out[op] = {st.op_ids.front(), st.devices.size(), st.micro_batch};
    }
  }
  return out;
}

Result SequentialParity() {
  Result res;
  std::mt19937 rng(5);
  std::vector<std::pair<std::string, ComputationGraph>> chains;
  chains.push_back({"chain preset", GenerateWorkload("chain")});
  for (int n : {3, 5, 7, 9}) {
    chains.push_back({"random chain n=" + std::to_string(n),
                      testing::RandomChain(rng, n)});
  }
  for (const auto &[name, g] : chains) {
    const DeviceCluster c =
        name == "chain preset" ? PresetCluster("chain") : BigCluster(4);
    OptimizeOptions o;
    o.mini_batch = name == "chain preset" ? PresetMiniBatch("chain") : 8;
    const Strategy gpp = Optimize(g, c, o);
    const Strategy spp = SppOptimize(g, c, o);
    Record(g, c, gpp.graph, name + "/gpp");
    Record(g, c, spp.graph, name + "/spp");
    const double eps = kRelEpsilon * MaxTps(g, c);
    res.Check(std::fabs(gpp.bottleneck_tps - spp.bottleneck_tps) <= eps &&
                  Shape(gpp.graph) == Shape(spp.graph),
              Fmt("%s: tps %.4f vs %.4f, %zu vs %zu stages, partitions %s",
                  name.c_str(), gpp.bottleneck_tps, spp.bottleneck_tps,
                  gpp.graph.stages.size(), spp.graph.stages.size(),
                  Shape(gpp.graph) == Shape(spp.graph) ? "identical"
                                                       : "differ"));
  }
  return res;
}

// ---- 6: case study ----------------------------------------------------------------

Result CaseStudy() {
  Result res;
  const ComputationGraph g = GenerateWorkload("case-study");
  const DeviceCluster c = PresetCluster("case-study");
  OptimizeOptions o;
  o.mini_batch = PresetMiniBatch("case-study");
  const CompareResult r = Compare(g, c, o);
  Record(g, c, r.gpp.graph, "case-study/gpp");
  Record(g, c, r.spp.graph, "case-study/spp");
  const int b_gpp = r.gpp.graph.stages.front().micro_batch;
  const int b_spp = r.spp.graph.stages.front().micro_batch;
  res.Check(b_gpp == 4 && b_spp == 2,
            Fmt("micro-batch gpp %d (want 4), spp %d (want 2)", b_gpp, b_spp));
  res.Check(r.gpp.depth == 4 && r.spp.depth == 8,
            Fmt("depth gpp %d (want 4), spp %d (want 8)", r.gpp.depth,
                r.spp.depth));
  res.Check(r.gpp_sim.warm_up_microbatches == 4 &&
                r.spp_sim.warm_up_microbatches == 8,
            Fmt("warm-up gpp %d (want 4), spp %d (want 8)",
                r.gpp_sim.warm_up_microbatches,
                r.spp_sim.warm_up_microbatches));
  res.Check(r.ratio <= kCaseRatioMax,
            Fmt("iteration ratio %.3f <= %.2f", r.ratio, kCaseRatioMax));
  res.Check(r.ratio >= kCaseRatioLow && r.ratio <= kCaseRatioHigh,
            Fmt("iteration ratio %.3f in [%.2f, %.2f]", r.ratio, kCaseRatioLow,
                kCaseRatioHigh));
  res.Check(r.has_breakdown && r.warmup_gain >= kCaseGainMin &&
                r.efficiency_gain >= kCaseGainMin,
            Fmt("gains: shallower pipeline %.1f%%, larger micro-batch %.1f%% "
                "(each >= %.0f%%)",
                100.0 * r.warmup_gain, 100.0 * r.efficiency_gain,
                100.0 * kCaseGainMin));
  return res;
}

// ---- 7: branch scaling ---------------------------------------------------------------

Result BranchScaling() {
  Result res;
  double previous = 0.0;
  for (int branches : {2, 4, 8, 16}) {
    const ComputationGraph g = GenerateWorkload("candle-uno", branches);
    const DeviceCluster c = PresetCluster("candle-uno", branches);
    OptimizeOptions o;
    o.mini_batch = PresetMiniBatch("candle-uno");
    const CompareResult r = Compare(g, c, o);
    Record(g, c, r.gpp.graph, "candle-uno/" + std::to_string(branches));
    Record(g, c, r.spp.graph, "candle-uno/spp/" + std::to_string(branches));
    const double speedup = r.spp_sim.iteration_ms / r.gpp_sim.iteration_ms;
    res.Check(speedup + kBranchRatioSlack >= previous,
              Fmt("%2d branches, %2d devices: throughput ratio %.3f", branches,
                  c.num_devices, speedup));
    previous = speedup;
  }
  return res;
}

// ---- 8: search cost ------------------------------------------------------------------

Result SearchCost() {
  Result res;
  // Fixed per-branch size and a fixed cluster, so only the branch count
  // varies.
  const DeviceCluster c = PresetCluster("candle-uno", 8);
  const std::vector<int> counts = {2, 4, 8, 16, 32};
  std::vector<double> gpp, spp;
  for (int branches : counts) {
    const ComputationGraph g = GenerateWorkload("candle-uno", branches);
    OptimizeOptions o;
    o.mini_batch = PresetMiniBatch("candle-uno");
    const Strategy a = Optimize(g, c, o);
    const Strategy b = SppOptimize(g, c, o);
    Record(g, c, a.graph, "scaling/gpp/" + std::to_string(branches));
    Record(g, c, b.graph, "scaling/spp/" + std::to_string(branches));
    gpp.push_back(static_cast<double>(a.stats.dp_states) / a.stats.probes);
    spp.push_back(static_cast<double>(b.stats.dp_states) / b.stats.probes);
    res.Note(Fmt("%2d branches: dp states per probe gpp %.0f, spp %.0f",
                 branches, gpp.back(), spp.back()));
  }
  double worst_step = 0.0;
  for (size_t i = 1; i < counts.size(); ++i) {
    worst_step = std::max(worst_step, gpp[i] / gpp[i - 1]);
  }
  res.Check(worst_step <= 2.0,
            Fmt("gpp: largest growth per doubling %.2fx (linear = 2x)",
                worst_step));
  const double span = std::log(counts.back() / static_cast<double>(counts[0]));
  const double gpp_exp = std::log(gpp.back() / gpp.front()) / span;
  const double spp_exp = std::log(spp.back() / spp.front()) / span;
  res.Check(gpp_exp <= 1.0, Fmt("gpp growth exponent %.2f <= 1", gpp_exp));
  res.Check(spp_exp > 1.0, Fmt("spp growth exponent %.2f > 1", spp_exp));

  for (const std::string &preset : PresetNames()) {
    const ComputationGraph g = GenerateWorkload(preset);
    const DeviceCluster pc = PresetCluster(preset);
    OptimizeOptions o;
    o.mini_batch = PresetMiniBatch(preset);
    const auto t0 = std::chrono::steady_clock::now();
    const Strategy s = Optimize(g, pc, o);
    const double secs = std::chrono::duration<double>(
                            std::chrono::steady_clock::now() - t0)
                            .count();
    Record(g, pc, s.graph, "preset/" + preset);
    res.Check(pc.num_devices > 32 || secs < kPresetSeconds,
              Fmt("preset %s (%d ops, %d devices): %.2f s", preset.c_str(),
                  static_cast<int>(g.size()), pc.num_devices, secs));
  }
  return res;
}

// ---- 9: validity ---------------------------------------------------------------------

// Independent schedule check: order, pairing, and the in-flight ceiling.
bool ScheduleOk(const TaskSchedule &s, int n, int b, int ceiling) {
  if (static_cast<int>(s.size()) != 2 * n) return false;
  int fw = 0, bw = 0;
  for (const Task &t : s) {
    if (t.dir == Direction::kForward) {
      if (t.index != fw++) return false;
      if ((fw - bw) * b > ceiling) return false;
    } else {
      if (t.index != bw++ || bw > fw) return false;
    }
  }
  return fw == n && bw == n;
}

Result Validity() {
  Result res;
  int valid = 0, deadlocks = 0;
  std::vector<std::string> bad;
  for (const Produced &p : AllOutputs()) {
    const ValidationReport v = ValidateStrategy(p.graph, p.cluster, p.stages);
    bool ok = v.ok();
    try {
      Simulate(p.graph, p.cluster, p.stages);
    } catch (const Error &e) {
      if (e.code() != ErrorCode::kDeadlock) throw;
      ++deadlocks;
      ok = false;
    }
    if (ok) {
      ++valid;
    } else if (bad.size() < 5) {
      bad.push_back(p.origin + ": " +
                    (v.ok() ? "deadlock" : v.violations[0].message));
    }
  }
  res.Check(valid == static_cast<int>(AllOutputs().size()),
            Fmt("optimizer outputs valid (C1-C4, memory, no deadlock): %d/%zu",
                valid, AllOutputs().size()));
  for (const std::string &b : bad) res.Note(b);

  // Schedules: generated ones satisfy the independent check; random
  // permutations are judged the same way by the validator.
  std::mt19937 rng(99);
  int generated_ok = 0, generated = 0, agree = 0, mutated = 0;
  const ComputationGraph one = UnitChain(1);
  const DeviceCluster c1 = BigCluster(1);
  for (int b : {1, 2, 4}) {
    for (int k = 1; k * b <= 16; k *= 2) {
      for (int i = k * b; i <= 16; i += b) {
        const ScheduleConfig cfg{i, b, k};
        const TaskSchedule s = ScheduleTasks(cfg, 16);
        ++generated;
        generated_ok += ScheduleOk(s, 16 / b, b, i);
        StageGraph sg = AssembleStageGraph(one, {{{0}, b, k, 1}}, 16);
        for (int m = 0; m < 4; ++m) {
          TaskSchedule x = s;
          const int p = std::uniform_int_distribution<int>(
              0, static_cast<int>(x.size()) - 1)(rng);
          const int q = std::uniform_int_distribution<int>(
              0, static_cast<int>(x.size()) - 1)(rng);
          std::swap(x[p], x[q]);
          sg.stages[0].schedule = x;
          sg.stages[0].sched_cfg = cfg;
          bool c4 = true;
          for (const Violation &v : ValidateStrategy(one, c1, sg).violations) {
            c4 = c4 && v.condition != "C4";
          }
          ++mutated;
          agree += c4 == ScheduleOk(x, 16 / b, b, 16);
        }
      }
    }
  }
  res.Check(generated_ok == generated,
            Fmt("generated schedules well-formed and within ceiling: %d/%d",
                generated_ok, generated));
  res.Check(agree == mutated,
            Fmt("C4 verdicts agree with an independent checker: %d/%d", agree,
                mutated));

  // File round-trip and byte-identical re-simulation.
  const std::filesystem::path dir =
      std::filesystem::temp_directory_path() / "pipeplan_acceptance";
  std::filesystem::create_directories(dir);
  int round_trips = 0, identical = 0, presets = 0;
  for (const std::string &preset : PresetNames()) {
    StrategyFile f;
    f.graph = GenerateWorkload(preset);
    f.cluster = PresetCluster(preset);
    OptimizeOptions o;
    o.mini_batch = PresetMiniBatch(preset);
    f.stages = Optimize(f.graph, f.cluster, o).graph;
    const std::string path = (dir / (preset + ".json")).string();
    WriteFile(path, DumpJson(StrategyToJson(f)));
    const StrategyFile back = StrategyFromJson(ParseJson(ReadFile(path)));
    ++presets;
    round_trips += back.graph == f.graph && back.cluster == f.cluster &&
                   back.stages == f.stages;
    const SimReport a = Simulate(back.graph, back.cluster, back.stages);
    const SimReport b = Simulate(f.graph, f.cluster, f.stages);
    identical += EmitTrace(a) == EmitTrace(b) &&
                 DumpJson(ReportToJson(a)) == DumpJson(ReportToJson(b));
  }
  std::filesystem::remove_all(dir);
  res.Check(round_trips == presets,
            Fmt("strategy file round-trips: %d/%d", round_trips, presets));
  res.Check(identical == presets,
            Fmt("byte-identical re-simulation: %d/%d", identical, presets));

  // Scaling every compute cost keeps the chosen strategy.
  int invariant = 0, scaled = 0;
  for (int t = 0; t < 40; ++t) {
    const ComputationGraph g = testing::RandomSpGraph(
        rng, std::uniform_int_distribution<int>(2, 8)(rng), 0.0, 1e3, 0.0);
    std::vector<Operator> ops = g.ops();
    for (Operator &op : ops) {
      op.fwd_cost = op.fwd_cost.Scaled(3.0);
      op.bwd_cost = op.bwd_cost.Scaled(3.0);
    }
    const ComputationGraph h(ops, g.edges());
    const DeviceCluster c =
        BigCluster(std::uniform_int_distribution<int>(1, 4)(rng));
    OptimizeOptions o;
    o.mini_batch = 1 << std::uniform_int_distribution<int>(0, 3)(rng);
    ++scaled;
    invariant += Shape(Optimize(g, c, o).graph) == Shape(Optimize(h, c, o).graph);
  }
  res.Check(invariant == scaled,
            Fmt("argmin unchanged under cost scaling: %d/%d", invariant, scaled));
  return res;
}

}  // namespace
}  // namespace pipeplan

int main() {
  using pipeplan::Result;
  const std::vector<std::pair<std::string, std::function<Result()>>> criteria =
      {{"motivating example: depth, warm-up, in-flight",
        pipeplan::MotivatingExample},
       {"in-flight table vs simulated minimum", pipeplan::InFlightTable},
       {"per-stage micro-batch sizes: 10 vs 12 in-flight",
        pipeplan::PerStageSchedules},
       {"optimality vs exhaustive enumeration", pipeplan::Optimality},
       {"sequential parity on chains", pipeplan::SequentialParity},
       {"case study: depth, warm-up, iteration ratio", pipeplan::CaseStudy},
       {"branch scaling of the throughput ratio", pipeplan::BranchScaling},
       {"search cost", pipeplan::SearchCost},
       {"validity suite", pipeplan::Validity}};
  int failed = 0;
  for (size_t i = 0; i < criteria.size(); ++i) {
    const auto t0 = std::chrono::steady_clock::now();
    Result r;
    try {
      r = criteria[i].second();
    } catch (const std::exception &e) {
      r.Check(false, std::string("exception: ") + e.what());
    }
    const double secs =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
            .count();
    std::printf("criterion %zu: %s  %s (%.1f s)\n", i + 1,
                r.pass ? "PASS" : "FAIL", criteria[i].first.c_str(), secs);
    for (const std::string &line : r.lines) std::printf("    %s\n", line.c_str());
    std::fflush(stdout);
    failed += !r.pass;
  }
  std::printf("%d/%zu criteria passed\n",
              static_cast<int>(criteria.size()) - failed, criteria.size());
  return failed == 0 ? 0 : 1;
}
