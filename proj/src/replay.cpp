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

#include "groundmap/replay.hpp"

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <map>
#include <set>

#include "groundmap/errors.hpp"
#include "groundmap/message_codec.hpp"
#include "groundmap/nodes.hpp"
#include "groundmap/pipeline.hpp"
#include "groundmap/scenario.hpp"

namespace groundmap {

namespace {

const std::map<std::string, std::vector<std::string>>& module_outputs() {
  static const std::map<std::string, std::vector<std::string>> table = {
      {"slam", {topics::kSlamState, topics::kScaledOdom, topics::kKeyframe}},
      {"context", {topics::kBoundary}},
      {"mapping", {topics::kLocalMap, topics::kGlobalMap}},
  };
  return table;
}

std::string comparable(const PipelineEnvelope& env) {
  char stamp[40];
  std::snprintf(stamp, sizeof(stamp), "%.17g ", env.header.stamp);
  return stamp + message_to_json(*env.payload).dump();
}

}  // namespace

ReplayResult replay_log(const BusLog& log, const ReplayOptions& options) {
  const auto t0 = std::chrono::steady_clock::now();
  std::set<std::string> modules;
  for (const auto& m : options.modules) {
    if (!module_outputs().count(m)) {
      throw Error(ErrorCode::InvalidInput, "unknown replay module '" + m + "' (expected slam, context or mapping)");
    }
    modules.insert(m);
  }
  Scenario recorded = parse_scenario(log.meta.scenario_text, "log header");
  recorded.seed = log.meta.seed;
  Scenario scenario = recorded;

  ReplayResult result;
  auto& report = result.report;
  report.mode = "replay";
  report.scenario = recorded.name;
  report.seed = recorded.seed;
  report.modules.assign(modules.begin(), modules.end());
  report.truncated_input = log.truncated;
  if (options.map_resolution && *options.map_resolution != recorded.map_resolution) {
    if (!(*options.map_resolution > 0.0)) {
      throw Error(ErrorCode::InvalidInput, "map resolution must be > 0");
    }
    scenario.map_resolution = *options.map_resolution;
    char buf[128];
    std::snprintf(buf, sizeof(buf), "mapping.resolution: recorded %g, replayed %g", recorded.map_resolution,
                  scenario.map_resolution);
    report.config_divergence.push_back(buf);
  }

  std::set<std::string> produced;
  for (const auto& m : modules) {
    for (const auto& t : module_outputs().at(m)) {
      produced.insert(t);
    }
  }

  PipelineBus bus;
  register_standard_topics(bus);
  std::map<std::string, std::vector<std::string>> recomputed;
  bus.set_recorder([&](const PipelineEnvelope& env) {
    if (produced.count(env.header.topic)) {
      recomputed[env.header.topic].push_back(comparable(env));
    }
  });

  std::unique_ptr<SlamNode> slam;
  std::unique_ptr<ContextNode> context;
  std::unique_ptr<MappingNode> mapping;
  if (modules.count("slam")) {
    slam = std::make_unique<SlamNode>(bus, scenario.scale_period, scenario.association_gap);
  }
  if (modules.count("context")) {
    context = std::make_unique<ContextNode>(bus, scenario.camera, scenario.boundary);
  }
  if (modules.count("mapping")) {
    mapping = std::make_unique<MappingNode>(bus, scenario.map_resolution, scenario.snapshot_every);
  }
  auto pump = [&] {
    if (slam) {
      slam->process();
    }
    if (context) {
      context->process();
    }
    if (mapping) {
      mapping->process();
    }
  };
  if (slam) {
    slam->start(0.0);
  }

  std::map<std::string, std::vector<std::string>> expected;
  double last_stamp = 0.0;
  std::uint64_t masks = 0;
  for (const auto& env : log.envelopes) {
    last_stamp = std::max(last_stamp, env.header.stamp);
    if (env.header.topic == topics::kCameraMask) {
      ++masks;
    }
    if (produced.count(env.header.topic)) {
      expected[env.header.topic].push_back(comparable(env));
      continue;
    }
    bus.replay(env);
    pump();
  }
  bus.set_recorder(nullptr);

  for (const auto& topic : produced) {
    const auto& want = expected[topic];
    const auto& got = recomputed[topic];
    const std::size_t n = std::max(want.size(), got.size());
    for (std::size_t i = 0; i < n; ++i) {
      ++report.outputs_compared;
      if (i >= want.size() || i >= got.size() || want[i] != got[i]) {
        ++report.output_mismatches;
        if (result.first_mismatch.empty()) {
          result.first_mismatch = topic + " #" + std::to_string(i + 1) +
                                  (i >= want.size()  ? ": not in the recording"
                                   : i >= got.size() ? ": not reproduced"
                                                     : ": payload differs");
        }
      }
    }
  }

  report.sim_time = last_stamp;
  report.frames_processed = slam ? slam->masks_seen() : masks;
  if (slam) {
    report.keyframes_forwarded = slam->gate().forwarded();
    report.gated_frames = slam->gate().gated();
    report.final_tracking_state = std::string(to_string(slam->state()));
  }
  report.pipeline_rate = report.sim_time > 0.0 ? static_cast<double>(report.frames_processed) / report.sim_time : 0.0;
  if (mapping) {
    fill_map_section(report, mapping->global_map(), scenario.scene, mapping->viewpoints());
    result.map = mapping->global_map();
  }
  report.topics = collect_topic_counts(bus);
  report.wall_time = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return result;
}

}  // namespace groundmap
