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

#include <cstdio>
#include <map>
#include <sstream>
#include <string>

#include "json.hpp"
#include "sim/sim.hpp"

namespace pipeplan {

namespace {

std::string Fixed(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.3f", v);
  return buf;
}

std::string TaskName(const Task &t) {
  return (t.dir == Direction::kForward ? "F" : "B") + std::to_string(t.index);
}

}  // namespace

std::string EmitTrace(const SimReport &report) {
  nlohmann::ordered_json events = nlohmann::ordered_json::array();
  for (const TaskRecord &r : report.tasks) {
    nlohmann::ordered_json e;
    e["name"] = TaskName(r.task);
    e["cat"] = r.task.dir == Direction::kForward ? "fw" : "bw";
    e["ph"] = "X";
    e["ts"] = r.start * 1000.0;
    e["dur"] = (r.end - r.start) * 1000.0;
    e["pid"] = 0;
    e["tid"] = r.stage;
    e["args"] = {{"stage", r.stage}, {"micro_batch_index", r.task.index}};
    events.push_back(e);
  }
  nlohmann::ordered_json doc;
  doc["traceEvents"] = events;
  doc["displayTimeUnit"] = "ms";
  return doc.dump(1) + "\n";
}

std::string EmitGantt(const SimReport &report) {
  constexpr double kLabel = 80.0;
  constexpr double kPlot = 960.0;
  constexpr double kRow = 24.0;
  constexpr double kTop = 20.0;
  std::map<StageId, int> row;
  for (const StageSimStats &st : report.stages) {
    const int r = static_cast<int>(row.size());
    row[st.id] = r;
  }
  const double height = kTop + kRow * static_cast<double>(row.size()) + 10.0;
  const double width = kLabel + kPlot + 10.0;
  const double span = report.iteration_ms > 0 ? report.iteration_ms : 1.0;
  const double scale = kPlot / span;

  std::ostringstream os;
  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << Fixed(width)
     << "\" height=\"" << Fixed(height) << "\" viewBox=\"0 0 " << Fixed(width)
     << ' ' << Fixed(height) << "\">\n";
  os << "<rect x=\"0\" y=\"0\" width=\"" << Fixed(width) << "\" height=\""
     << Fixed(height) << "\" fill=\"#ffffff\"/>\n";
  os << "<text x=\"4\" y=\"14\" font-family=\"monospace\" font-size=\"11\">"
     << "iteration " << Fixed(report.iteration_ms) << " ms</text>\n";
  for (const auto &[id, r] : row) {
    const double y = kTop + kRow * r;
    os << "<text x=\"4\" y=\"" << Fixed(y + 16.0)
       << "\" font-family=\"monospace\" font-size=\"11\">stage " << id
       << "</text>\n";
  }
  for (const TaskRecord &t : report.tasks) {
    const double y = kTop + kRow * row.at(t.stage) + 2.0;
    const double x = kLabel + t.start * scale;
    const double w = (t.end - t.start) * scale;
    const bool fw = t.task.dir == Direction::kForward;
    os << "<rect x=\"" << Fixed(x) << "\" y=\"" << Fixed(y) << "\" width=\""
       << Fixed(w) << "\" height=\"" << Fixed(kRow - 4.0) << "\" fill=\""
       << (fw ? "#4e79a7" : "#f28e2b")
       << "\" stroke=\"#333333\" stroke-width=\"0.5\"><title>stage " << t.stage
       << ' ' << TaskName(t.task) << ' ' << Fixed(t.start) << '-'
       << Fixed(t.end) << " ms</title></rect>\n";
  }
  os << "</svg>\n";
  return os.str();
}

}  // namespace pipeplan
