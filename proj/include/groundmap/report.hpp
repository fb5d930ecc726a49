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

#include <nlohmann/json.hpp>

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace groundmap {

struct ModuleTiming {
  std::string module;
  std::size_t samples = 0;
  double mean_ms = 0.0;
  double p95_ms = 0.0;
};

struct TopicCounts {
  std::string topic;
  std::uint64_t published = 0;
  std::uint64_t delivered = 0;
  std::uint64_t dropped = 0;
};

/// Summary of one run or replay. Timing fields depend on the host; every
/// other field is determined by the scenario and seed.
struct RunReport {
  std::string scenario;
  std::uint64_t seed = 0;
  std::string mode = "run";  // run | replay

  std::uint64_t frames_processed = 0;  // masks consumed by the SLAM stage
  std::uint64_t keyframes_forwarded = 0;
  std::uint64_t gated_frames = 0;
  double sim_time = 0.0;
  double wall_time = 0.0;
  double pipeline_rate = 0.0;  // frames per simulated second

  std::vector<ModuleTiming> timings;

  std::optional<double> scaled_ate;
  std::optional<double> raw_ate;
  std::optional<double> final_scaled_error;
  std::optional<double> final_raw_error;
  std::size_t ate_samples = 0;

  std::optional<double> map_iou;
  int map_width = 0;
  int map_height = 0;
  std::uint64_t occupied_cells = 0;
  std::uint64_t free_cells = 0;
  std::uint64_t map_epochs = 0;

  std::vector<TopicCounts> topics;
  std::uint64_t clamped_commands = 0;
  std::string final_tracking_state;

  // Replay only.
  std::vector<std::string> modules;
  std::vector<std::string> config_divergence;
  std::uint64_t outputs_compared = 0;
  std::uint64_t output_mismatches = 0;
  bool truncated_input = false;
};

nlohmann::json report_to_json(const RunReport& report);
/// Throws Error(Schema) if required fields are missing.
RunReport report_from_json(const nlohmann::json& j);
std::string format_report_text(const RunReport& report);

}  // namespace groundmap
