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

#include <string>

#include "json.hpp"
#include "model/model.hpp"
#include "partition/partition.hpp"
#include "sim/sim.hpp"

namespace pipeplan {

constexpr int kFormatVersion = 1;

using Json = nlohmann::ordered_json;

// A strategy document bundles everything needed to re-validate and
// re-simulate it.
struct StrategyFile {
  ComputationGraph graph;
  DeviceCluster cluster;
  StageGraph stages;
  double weight_update_ms = 0.0;
};

// Structured conversions. Parsers throw kParse on malformed input, unknown
// fields or an unsupported format_version; semantic checks (cycles, bad
// ids) surface with their own codes.
Json CostCurveToJson(const CostCurve &c);
CostCurve CostCurveFromJson(const Json &j);
Json GraphToJson(const ComputationGraph &g, bool with_version = true);
ComputationGraph GraphFromJson(const Json &j, bool with_version = true);
Json ClusterToJson(const DeviceCluster &c, bool with_version = true);
DeviceCluster ClusterFromJson(const Json &j, bool with_version = true);
Json StrategyToJson(const StrategyFile &s);
StrategyFile StrategyFromJson(const Json &j);
Json ReportToJson(const SimReport &r);
Json ValidationToJson(const ValidationReport &r);
Json StatsToJson(const SearchStats &s);

// Text helpers: parse a document (kParse on syntax errors) and dump it in
// the canonical indented form with a trailing newline.
Json ParseJson(const std::string &text);
std::string DumpJson(const Json &j);

std::string ReadFile(const std::string &path);               // kIo
void WriteFile(const std::string &path, const std::string &data);  // kIo

}  // namespace pipeplan
