// Copyright 2026 The groundmap Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "groundmap/report.hpp"

#include <cstdio>

#include "groundmap/errors.hpp"

namespace groundmap {

using nlohmann::json;

namespace {

json opt(const std::optional<double>& v) { return v ? json(*v) : json(nullptr); }

std::optional<double> opt_from(const json& j, const char* key) {
  if (!j.contains(key) || j.at(key).is_null()) {
    return std::nullopt;
  }
  return j.at(key).get<double>();
}

std::string fmt(const char* format, double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), format, v);
  return buf;
}

std::string fmt_opt(const std::optional<double>& v, const char* format) { return v ? fmt(format, *v) : "n/a"; }

}  // namespace

json report_to_json(const RunReport& r) {
  json timings = json::array();
  for (const auto& t : r.timings) {
    timings.push_back({{"module", t.module}, {"samples", t.samples}, {"mean_ms", t.mean_ms}, {"p95_ms", t.p95_ms}});
  }
  json topic_counts = json::array();
  for (const auto& t : r.topics) {
    topic_counts.push_back(
        {{"topic", t.topic}, {"published", t.published}, {"delivered", t.delivered}, {"dropped", t.dropped}});
  }
  json out = {
      {"scenario", r.scenario},
      {"seed", r.seed},
      {"mode", r.mode},
      {"frames_processed", r.frames_processed},
      {"keyframes_forwarded", r.keyframes_forwarded},
      {"gated_frames", r.gated_frames},
      {"sim_time", r.sim_time},
      {"wall_time", r.wall_time},
      {"pipeline_rate", r.pipeline_rate},
      {"timings", timings},
      {"scaled_ate", opt(r.scaled_ate)},
      {"raw_ate", opt(r.raw_ate)},
      {"final_scaled_error", opt(r.final_scaled_error)},
      {"final_raw_error", opt(r.final_raw_error)},
      {"ate_samples", r.ate_samples},
      {"map_iou", opt(r.map_iou)},
      {"map", {{"width", r.map_width}, {"height", r.map_height}, {"occupied", r.occupied_cells}, {"free", r.free_cells},
               {"epochs", r.map_epochs}}},
      {"topics", topic_counts},
      {"clamped_commands", r.clamped_commands},
      {"final_tracking_state", r.final_tracking_state},
  };
  if (r.mode == "replay") {
    out["replay"] = {{"modules", r.modules},
                     {"config_divergence", r.config_divergence},
                     {"outputs_compared", r.outputs_compared},
                     {"output_mismatches", r.output_mismatches},
                     {"truncated_input", r.truncated_input}};
  }
  return out;
}

RunReport report_from_json(const json& j) {
  RunReport r;
  try {
    r.scenario = j.at("scenario").get<std::string>();
    r.seed = j.at("seed").get<std::uint64_t>();
    r.mode = j.at("mode").get<std::string>();
    r.frames_processed = j.at("frames_processed").get<std::uint64_t>();
    r.keyframes_forwarded = j.at("keyframes_forwarded").get<std::uint64_t>();
    r.gated_frames = j.at("gated_frames").get<std::uint64_t>();
    r.sim_time = j.at("sim_time").get<double>();
    r.wall_time = j.at("wall_time").get<double>();
    r.pipeline_rate = j.at("pipeline_rate").get<double>();
    for (const auto& t : j.at("timings")) {
      r.timings.push_back({t.at("module").get<std::string>(), t.at("samples").get<std::size_t>(),
                           t.at("mean_ms").get<double>(), t.at("p95_ms").get<double>()});
    }
    r.scaled_ate = opt_from(j, "scaled_ate");
    r.raw_ate = opt_from(j, "raw_ate");
    r.final_scaled_error = opt_from(j, "final_scaled_error");
    r.final_raw_error = opt_from(j, "final_raw_error");
    r.ate_samples = j.at("ate_samples").get<std::size_t>();
    r.map_iou = opt_from(j, "map_iou");
    const auto& m = j.at("map");
    r.map_width = m.at("width").get<int>();
    r.map_height = m.at("height").get<int>();
    r.occupied_cells = m.at("occupied").get<std::uint64_t>();
    r.free_cells = m.at("free").get<std::uint64_t>();
    r.map_epochs = m.at("epochs").get<std::uint64_t>();
    for (const auto& t : j.at("topics")) {
      r.topics.push_back({t.at("topic").get<std::string>(), t.at("published").get<std::uint64_t>(),
                          t.at("delivered").get<std::uint64_t>(), t.at("dropped").get<std::uint64_t>()});
    }
    r.clamped_commands = j.at("clamped_commands").get<std::uint64_t>();
    r.final_tracking_state = j.at("final_tracking_state").get<std::string>();
    if (j.contains("replay")) {
      const auto& rp = j.at("replay");
      r.modules = rp.at("modules").get<std::vector<std::string>>();
      r.config_divergence = rp.at("config_divergence").get<std::vector<std::string>>();
      r.outputs_compared = rp.at("outputs_compared").get<std::uint64_t>();
      r.output_mismatches = rp.at("output_mismatches").get<std::uint64_t>();
      r.truncated_input = rp.at("truncated_input").get<bool>();
    }
  } catch (const json::exception& e) {
    throw Error(ErrorCode::Schema, std::string("report: ") + e.what());
  }
  return r;
}

std::string format_report_text(const RunReport& r) {
  std::string out;
  auto line = [&out](const std::string& key, const std::string& value) {
    char buf[256];
    std::snprintf(buf, sizeof(buf), "  %-22s %s\n", key.c_str(), value.c_str());
    out += buf;
  };
  out += "groundmap " + r.mode + " report: " + r.scenario + " (seed " + std::to_string(r.seed) + ")\n";
  out += "pipeline\n";
  line("frames processed", std::to_string(r.frames_processed));
  line("keyframes forwarded", std::to_string(r.keyframes_forwarded));
  line("gated frames", std::to_string(r.gated_frames));
  line("sim time", fmt("%.2f s", r.sim_time));
  line("wall time", fmt("%.3f s", r.wall_time));
  line("pipeline rate", fmt("%.3f Hz", r.pipeline_rate));
  line("final tracking state", r.final_tracking_state.empty() ? "n/a" : r.final_tracking_state);
  line("clamped commands", std::to_string(r.clamped_commands));
  out += "odometry\n";
  line("scaled ATE", fmt_opt(r.scaled_ate, "%.4f m"));
  line("raw visual ATE", fmt_opt(r.raw_ate, "%.4f m"));
  line("final scaled error", fmt_opt(r.final_scaled_error, "%.4f m"));
  line("final raw error", fmt_opt(r.final_raw_error, "%.4f m"));
  line("ATE samples", std::to_string(r.ate_samples));
  out += "map\n";
  line("IoU", fmt_opt(r.map_iou, "%.4f"));
  line("size", std::to_string(r.map_width) + " x " + std::to_string(r.map_height) + " cells");
  line("occupied / free", std::to_string(r.occupied_cells) + " / " + std::to_string(r.free_cells));
  line("fusion epochs", std::to_string(r.map_epochs));
  out += "module timing (ms)\n";
  for (const auto& t : r.timings) {
    char buf[160];
    std::snprintf(buf, sizeof(buf), "  %-12s n=%-6zu mean %8.3f  p95 %8.3f\n", t.module.c_str(), t.samples, t.mean_ms,
                  t.p95_ms);
    out += buf;
  }
  out += "topics (published / delivered / dropped)\n";
  for (const auto& t : r.topics) {
    line(t.topic, std::to_string(t.published) + " / " + std::to_string(t.delivered) + " / " +
                      std::to_string(t.dropped));
  }
  if (r.mode == "replay") {
    out += "replay\n";
    std::string mods;
    for (const auto& m : r.modules) {
      mods += (mods.empty() ? "" : ",") + m;
    }
    line("modules", mods);
    line("outputs compared", std::to_string(r.outputs_compared));
    line("output mismatches", std::to_string(r.output_mismatches));
    line("truncated input", r.truncated_input ? "yes" : "no");
    for (const auto& d : r.config_divergence) {
      line("config divergence", d);
    }
  }
  return out;
}

}  // namespace groundmap
