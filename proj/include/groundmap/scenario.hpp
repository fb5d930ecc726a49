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

#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "groundmap/boundary.hpp"
#include "groundmap/occupancy.hpp"
#include "groundmap/sim_world.hpp"

namespace groundmap {

struct CommandSegment {
  double v = 0.0;
  double w = 0.0;
  double duration = 0.0;  // seconds, rounded to whole ticks
};

struct KillEvent {
  double at = 0.0;
  bool engage = true;
};

struct CommandScript {
  std::vector<CommandSegment> segments;
  int repeat = 1;  // 0 repeats forever
  std::vector<KillEvent> kill_events;
};

/// Everything needed to reproduce a run.
struct Scenario {
  std::string name = "unnamed";
  std::uint64_t seed = 0;
  double duration = 60.0;  // seconds of simulated time
  int sim_rate = 20;       // dynamics ticks per second
  int camera_rate = 10;    // frames per second, divides sim_rate
  int pipeline_rate = 1;   // masks per second, divides camera_rate

  Scene scene;
  CameraModel camera;
  WheelNoise wheel_noise;
  VisualOdomConfig visual_odometry;
  VelocityLimits limits;
  double history_seconds = 30.0;
  double teleop_timeout = 1.0;
  BoundaryFilterConfig boundary;
  double map_resolution = 0.05;
  int snapshot_every = 10;  // full map snapshot every N fusion epochs
  double scale_period = 1.0;
  double association_gap = 0.1;

  bool teleop = false;
  CommandScript script;

  /// Original YAML text, kept so recorded logs are self-describing.
  std::string source_text;

  double tick_seconds() const { return 1.0 / sim_rate; }
  std::int64_t total_ticks() const;
  int camera_every() const { return sim_rate / camera_rate; }
  int pipeline_every() const { return sim_rate / pipeline_rate; }

  /// Throws Error(Schema) on inconsistent settings.
  void validate() const;
};

/// Parses a scenario document. Schema errors carry `source:line: field: reason`.
Scenario parse_scenario(const std::string& text, const std::string& source = "<scenario>");
Scenario load_scenario(const std::string& path);

}  // namespace groundmap
