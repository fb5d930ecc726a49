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

#include <optional>
#include <string>
#include <vector>

#include "groundmap/bus_log.hpp"
#include "groundmap/occupancy.hpp"
#include "groundmap/report.hpp"

namespace groundmap {

/// Modules that can be re-run from a log.
inline const std::vector<std::string> kReplayableModules = {"slam", "context", "mapping"};

struct ReplayOptions {
  std::vector<std::string> modules = kReplayableModules;
  std::optional<double> map_resolution;  // overrides the recorded setting
};

struct ReplayResult {
  RunReport report;
  std::optional<GlobalMap> map;  // when mapping was replayed
  std::string first_mismatch;
};

/// Feeds every recorded envelope that the selected modules did not produce
/// back through those modules and compares what they publish with what was
/// recorded, topic by topic.
ReplayResult replay_log(const BusLog& log, const ReplayOptions& options = {});

}  // namespace groundmap
