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

#include <atomic>
#include <cstdint>
#include <memory>
#include <optional>
#include <string>

#include "groundmap/bus_log.hpp"
#include "groundmap/nodes.hpp"
#include "groundmap/report.hpp"
#include "groundmap/scenario.hpp"

namespace groundmap {

struct PipelineOptions {
  std::optional<std::uint64_t> seed;  // overrides the scenario seed
  std::string log_path;               // empty: do not record
};

/// All modules wired on one bus and stepped sequentially, one tick at a time.
/// Within a tick: script, control, simulator, SLAM, context, mapping. Other
/// threads may publish operator commands between ticks.
class Pipeline {
 public:
  explicit Pipeline(Scenario scenario, PipelineOptions options = {});
  ~Pipeline();

  Pipeline(const Pipeline&) = delete;
  Pipeline& operator=(const Pipeline&) = delete;

  void step();
  /// Steps until the scenario duration is reached.
  void run();
  bool finished() const { return tick() >= scenario_.total_ticks(); }

  std::int64_t tick() const { return tick_.load(); }
  /// Simulation time at the end of the last completed tick.
  double now() const { return static_cast<double>(tick()) / scenario_.sim_rate; }

  const Scenario& scenario() const { return scenario_; }
  PipelineBus& bus() { return bus_; }
  const SimNode& sim() const { return *sim_; }
  const SlamNode& slam() const { return *slam_; }
  const MappingNode& mapping() const { return *mapping_; }
  const ControlNode& control() const { return *control_; }
  const Evaluator& evaluator() const { return *evaluator_; }

  RunReport report(double wall_seconds) const;
  void flush_log();

 private:
  Scenario scenario_;
  PipelineBus bus_;
  std::unique_ptr<BusLogWriter> log_;
  std::unique_ptr<SimNode> sim_;
  std::unique_ptr<SlamNode> slam_;
  std::unique_ptr<ContextNode> context_;
  std::unique_ptr<MappingNode> mapping_;
  std::unique_ptr<ControlNode> control_;
  std::unique_ptr<ScriptDriver> script_;
  std::unique_ptr<Evaluator> evaluator_;
  std::atomic<std::int64_t> tick_{0};
  LatencyStats sim_latency_;
  LatencyStats slam_latency_;
  LatencyStats context_latency_;
  LatencyStats mapping_latency_;
  LatencyStats control_latency_;
};

/// Fills the map section of a report (IoU against the scene, cell counts).
void fill_map_section(RunReport& report, const GlobalMap& map, const Scene& scene, std::span<const Vec2> viewpoints);
/// Per-topic bus counters, in topic-name order.
std::vector<TopicCounts> collect_topic_counts(const PipelineBus& bus);

}  // namespace groundmap
