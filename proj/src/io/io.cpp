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

#include "io/io.hpp"

#include <fstream>
#include <set>
#include <sstream>

namespace pipeplan {

namespace {

[[noreturn]] void Fail(const std::string &what) {
  throw Error(ErrorCode::kParse, what);
}

void ExpectObject(const Json &j, const std::string &what,
                  const std::set<std::string> &allowed,
                  const std::set<std::string> &required) {
  if (!j.is_object()) Fail(what + " must be an object");
  for (const auto &[key, value] : j.items()) {
    if (!allowed.count(key)) Fail("unknown field '" + key + "' in " + what);
  }
  for (const std::string &key : required) {
    if (!j.contains(key)) Fail("missing field '" + key + "' in " + what);
  }
}

double Number(const Json &j, const std::string &key, const std::string &what) {
  const Json &v = j.at(key);
  if (!v.is_number()) Fail("field '" + key + "' in " + what + " must be a number");
  return v.get<double>();
}

int Integer(const Json &j, const std::string &key, const std::string &what) {
  const Json &v = j.at(key);
  if (!v.is_number_integer()) {
    Fail("field '" + key + "' in " + what + " must be an integer");
  }
  return v.get<int>();
}

std::vector<int> IntList(const Json &j, const std::string &key,
                         const std::string &what) {
  const Json &v = j.at(key);
  if (!v.is_array()) Fail("field '" + key + "' in " + what + " must be an array");
  std::vector<int> out;
  for (const Json &x : v) {
    if (!x.is_number_integer()) Fail("'" + key + "' in " + what + " holds a non-integer");
    out.push_back(x.get<int>());
  }
  return out;
}

std::vector<Edge> EdgeList(const Json &v, const std::string &what) {
  if (!v.is_array()) Fail(what + " edges must be an array");
  std::vector<Edge> out;
  for (const Json &e : v) {
    if (!e.is_array() || e.size() != 2 || !e[0].is_number_integer() ||
        !e[1].is_number_integer()) {
      Fail(what + " edges must be [from, to] integer pairs");
    }
    out.emplace_back(e[0].get<int>(), e[1].get<int>());
  }
  return out;
}

void CheckVersion(const Json &j, const std::string &what) {
  const int v = Integer(j, "format_version", what);
  if (v != kFormatVersion) {
    Fail(what + " format_version " + std::to_string(v) + " is not supported");
  }
}

}  // namespace

Json CostCurveToJson(const CostCurve &c) {
  Json j;
  if (c.kind() == CostCurve::Kind::kAffine) {
    j["kind"] = "affine";
    j["a"] = c.a();
    j["b"] = c.b();
  } else {
    j["kind"] = "table";
    Json pts = Json::array();
    for (const auto &[n, ms] : c.points()) pts.push_back(Json::array({n, ms}));
    j["points"] = pts;
  }
  return j;
}

CostCurve CostCurveFromJson(const Json &j) {
  if (!j.is_object() || !j.contains("kind") || !j["kind"].is_string()) {
    Fail("cost curve needs a string 'kind'");
  }
  const std::string kind = j["kind"].get<std::string>();
  try {
    if (kind == "affine") {
      ExpectObject(j, "affine cost curve", {"kind", "a", "b"}, {"kind", "a", "b"});
      return CostCurve::Affine(Number(j, "a", "cost curve"),
                               Number(j, "b", "cost curve"));
    }
    if (kind == "table") {
      ExpectObject(j, "table cost curve", {"kind", "points"}, {"kind", "points"});
      std::vector<std::pair<double, double>> pts;
      if (!j["points"].is_array()) Fail("table points must be an array");
      for (const Json &p : j["points"]) {
        if (!p.is_array() || p.size() != 2 || !p[0].is_number() ||
            !p[1].is_number()) {
          Fail("table points must be [samples, ms] pairs");
        }
        pts.emplace_back(p[0].get<double>(), p[1].get<double>());
      }
      return CostCurve::Table(pts);
    }
  } catch (const Error &e) {
    if (e.code() == ErrorCode::kParse) throw;
    Fail(std::string("invalid cost curve: ") + e.what());
  }
  Fail("unknown cost curve kind '" + kind + "'");
}

Json GraphToJson(const ComputationGraph &g, bool with_version) {
  Json j;
  if (with_version) j["format_version"] = kFormatVersion;
  Json ops = Json::array();
  for (const Operator &op : g.ops()) {
    Json o;
    o["id"] = op.id;
    o["name"] = op.name;
    o["param_bytes"] = op.param_bytes;
    o["act_bytes_per_sample"] = op.act_bytes_per_sample;
    o["out_bytes_per_sample"] = op.out_bytes_per_sample;
    o["fwd_cost"] = CostCurveToJson(op.fwd_cost);
    o["bwd_cost"] = CostCurveToJson(op.bwd_cost);
    ops.push_back(o);
  }
  j["ops"] = ops;
  Json edges = Json::array();
  for (const auto &[u, v] : g.edges()) edges.push_back(Json::array({u, v}));
  j["edges"] = edges;
  return j;
}

ComputationGraph GraphFromJson(const Json &j, bool with_version) {
  std::set<std::string> keys{"ops", "edges"};
  if (with_version) keys.insert("format_version");
  ExpectObject(j, "graph", keys, keys);
  if (with_version) CheckVersion(j, "graph");
  if (!j["ops"].is_array()) Fail("graph ops must be an array");
  std::vector<Operator> ops;
  const std::set<std::string> op_keys{
      "id",          "name",     "param_bytes", "act_bytes_per_sample",
      "out_bytes_per_sample", "fwd_cost", "bwd_cost"};
  for (const Json &o : j["ops"]) {
    ExpectObject(o, "operator", op_keys, {"id", "fwd_cost", "bwd_cost"});
    Operator op;
    op.id = Integer(o, "id", "operator");
    if (o.contains("name")) {
      if (!o["name"].is_string()) Fail("operator name must be a string");
      op.name = o["name"].get<std::string>();
    }
    if (o.contains("param_bytes")) op.param_bytes = Number(o, "param_bytes", "operator");
    if (o.contains("act_bytes_per_sample")) {
      op.act_bytes_per_sample = Number(o, "act_bytes_per_sample", "operator");
    }
    if (o.contains("out_bytes_per_sample")) {
      op.out_bytes_per_sample = Number(o, "out_bytes_per_sample", "operator");
    }
    op.fwd_cost = CostCurveFromJson(o["fwd_cost"]);
    op.bwd_cost = CostCurveFromJson(o["bwd_cost"]);
    ops.push_back(op);
  }
  return ComputationGraph(ops, EdgeList(j["edges"], "graph"));
}

Json ClusterToJson(const DeviceCluster &c, bool with_version) {
  Json j;
  if (with_version) j["format_version"] = kFormatVersion;
  j["num_devices"] = c.num_devices;
  j["mem_per_device"] = c.mem_per_device;
  j["intra_bw"] = c.intra_bw;
  j["inter_bw"] = c.inter_bw;
  j["link_latency"] = c.link_latency;
  j["weight_multiplier"] = c.weight_multiplier;
  return j;
}

DeviceCluster ClusterFromJson(const Json &j, bool with_version) {
  std::set<std::string> allowed{"num_devices", "mem_per_device", "intra_bw",
                                "inter_bw",    "link_latency",   "weight_multiplier"};
  std::set<std::string> required{"num_devices", "mem_per_device", "intra_bw",
                                 "inter_bw"};
  if (with_version) {
    allowed.insert("format_version");
    required.insert("format_version");
  }
  ExpectObject(j, "cluster", allowed, required);
  if (with_version) CheckVersion(j, "cluster");
  DeviceCluster c;
  c.num_devices = Integer(j, "num_devices", "cluster");
  c.mem_per_device = Number(j, "mem_per_device", "cluster");
  c.intra_bw = Number(j, "intra_bw", "cluster");
  c.inter_bw = Number(j, "inter_bw", "cluster");
  if (j.contains("link_latency")) c.link_latency = Number(j, "link_latency", "cluster");
  if (j.contains("weight_multiplier")) {
    c.weight_multiplier = Number(j, "weight_multiplier", "cluster");
  }
  CheckCluster(c);
  return c;
}

Json StrategyToJson(const StrategyFile &s) {
  Json j;
  j["format_version"] = kFormatVersion;
  j["graph"] = GraphToJson(s.graph, false);
  j["cluster"] = ClusterToJson(s.cluster, false);
  j["mini_batch"] = s.stages.mini_batch;
  Json stages = Json::array();
  for (const Stage &st : s.stages.stages) {
    Json o;
    o["id"] = st.id;
    o["ops"] = st.op_ids;
    o["micro_batch"] = st.micro_batch;
    o["devices"] = st.devices;
    o["inflight_samples"] = st.sched_cfg.inflight_samples;
    o["k"] = st.sched_cfg.k;
    o["schedule"] = ScheduleToString(st.schedule);
    stages.push_back(o);
  }
  j["stages"] = stages;
  Json edges = Json::array();
  for (const auto &[u, v] : s.stages.edges) edges.push_back(Json::array({u, v}));
  j["edges"] = edges;
  j["sim"] = Json{{"weight_update_ms", s.weight_update_ms}};
  return j;
}

StrategyFile StrategyFromJson(const Json &j) {
  const std::set<std::string> keys{"format_version", "graph", "cluster",
                                   "mini_batch",     "stages", "edges", "sim"};
  ExpectObject(j, "strategy", keys,
               {"format_version", "graph", "cluster", "mini_batch", "stages",
                "edges"});
  CheckVersion(j, "strategy");
  StrategyFile s;
  s.graph = GraphFromJson(j["graph"], false);
  s.cluster = ClusterFromJson(j["cluster"], false);
  s.stages.mini_batch = Integer(j, "mini_batch", "strategy");
  if (!j["stages"].is_array()) Fail("strategy stages must be an array");
  const std::set<std::string> stage_keys{"id", "ops", "micro_batch", "devices",
                                         "inflight_samples", "k", "schedule"};
  for (const Json &o : j["stages"]) {
    ExpectObject(o, "stage", stage_keys, stage_keys);
    Stage st;
    st.id = Integer(o, "id", "stage");
    st.op_ids = IntList(o, "ops", "stage");
    st.micro_batch = Integer(o, "micro_batch", "stage");
    st.devices = IntList(o, "devices", "stage");
    st.sched_cfg.inflight_samples = Integer(o, "inflight_samples", "stage");
    st.sched_cfg.micro_batch = st.micro_batch;
    st.sched_cfg.k = Integer(o, "k", "stage");
    if (!o["schedule"].is_string()) Fail("stage schedule must be a string");
    try {
      st.schedule = ScheduleFromString(o["schedule"].get<std::string>());
    } catch (const Error &e) {
      Fail(std::string("stage schedule: ") + e.what());
    }
    s.stages.stages.push_back(st);
  }
  s.stages.edges = EdgeList(j["edges"], "strategy");
  if (j.contains("sim")) {
    ExpectObject(j["sim"], "sim options", {"weight_update_ms"}, {});
    if (j["sim"].contains("weight_update_ms")) {
      s.weight_update_ms = Number(j["sim"], "weight_update_ms", "sim options");
    }
  }
  return s;
}

Json ReportToJson(const SimReport &r) {
  Json j;
  j["iteration_ms"] = r.iteration_ms;
  j["depth"] = r.depth;
  j["warm_up_microbatches"] = r.warm_up_microbatches;
  j["bottleneck_tps"] = r.bottleneck_tps;
  Json stages = Json::array();
  for (const StageSimStats &s : r.stages) {
    Json o;
    o["id"] = s.id;
    o["micro_batch"] = s.micro_batch;
    o["peak_inflight_microbatches"] = s.peak_inflight_microbatches;
    o["peak_inflight_samples"] = s.peak_inflight_samples;
    o["warm_up_microbatches"] = s.warm_up_microbatches;
    o["busy_ms"] = s.busy_ms;
    o["idle_ms"] = s.idle_ms;
    o["tps"] = s.tps;
    stages.push_back(o);
  }
  j["stages"] = stages;
  Json devices = Json::array();
  for (const DeviceMemory &d : r.devices) {
    devices.push_back(Json{{"device", d.device}, {"peak_bytes", d.peak_bytes}});
  }
  j["devices"] = devices;
  return j;
}

Json ValidationToJson(const ValidationReport &r) {
  Json j;
  j["valid"] = r.ok();
  Json list = Json::array();
  for (const Violation &v : r.violations) {
    Json o;
    o["condition"] = v.condition;
    o["message"] = v.message;
    o["stages"] = v.stages;
    Json edges = Json::array();
    for (const auto &[a, b] : v.edges) edges.push_back(Json::array({a, b}));
    o["edges"] = edges;
    list.push_back(o);
  }
  j["violations"] = list;
  return j;
}

Json StatsToJson(const SearchStats &s) {
  Json j;
  j["probes"] = s.probes;
  j["dp_states"] = s.dp_states;
  j["dp_transitions"] = s.dp_transitions;
  j["max_tps"] = s.max_tps;
  j["epsilon"] = s.epsilon;
  j["t_low"] = s.t_low;
  j["t_high"] = s.t_high;
  return j;
}

Json ParseJson(const std::string &text) {
  try {
    return Json::parse(text);
  } catch (const nlohmann::json::exception &e) {
    Fail(std::string("malformed JSON: ") + e.what());
  }
}

std::string DumpJson(const Json &j) { return j.dump(2) + "\n"; }

std::string ReadFile(const std::string &path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kIo, "cannot open '" + path + "' for reading");
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

void WriteFile(const std::string &path, const std::string &data) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::kIo, "cannot open '" + path + "' for writing");
  out << data;
  if (!out) throw Error(ErrorCode::kIo, "failed writing '" + path + "'");
}

}  // namespace pipeplan
