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

#include "groundmap/pipeline.hpp"

#include <chrono>

namespace groundmap {

namespace {

using Clock = std::chrono::steady_clock;

template <typename F>
auto timed(LatencyStats& stats, F&& f) {
  const auto t0 = Clock::now();
  const bool worked = f();
  if (worked) {
    stats.add(std::chrono::duration<double, std::milli>(Clock::now() - t0).count());
  }
  return worked;
}

ModuleTiming timing(const std::string& name, const LatencyStats& s) { return {name, s.count(), s.mean(), s.p95()}; }

}  // namespace

Pipeline::Pipeline(Scenario scenario, PipelineOptions options) : scenario_(std::move(scenario)) {
  if (options.seed) {
    scenario_.seed = *options.seed;
  }
  scenario_.validate();
  register_standard_topics(bus_);
  if (!options.log_path.empty()) {
    log_ = std::make_unique<BusLogWriter>(options.log_path,
                                          BusLogMeta{scenario_.name, scenario_.seed, scenario_.source_text});
    bus_.set_recorder([log = log_.get()](const PipelineEnvelope& env) { log->write(env); });
  }
  sim_ = std::make_unique<SimNode>(bus_, scenario_);
  slam_ = std::make_unique<SlamNode>(bus_, scenario_.scale_period, scenario_.association_gap);
  context_ = std::make_unique<ContextNode>(bus_, scenario_.camera, scenario_.boundary);
  mapping_ = std::make_unique<MappingNode>(bus_, scenario_.map_resolution, scenario_.snapshot_every);
  control_ = std::make_unique<ControlNode>(
      bus_, Controller::Config{scenario_.limits, scenario_.tick_seconds(), scenario_.history_seconds,
                               scenario_.teleop_timeout});
  if (!scenario_.teleop) {
    script_ = std::make_unique<ScriptDriver>(bus_, scenario_.script, scenario_.sim_rate);
  }
  evaluator_ = std::make_unique<Evaluator>(bus_, scenario_.scene.robot_start, scenario_.sim_rate);

  sim_->start();
  slam_->start(0.0);
  slam_->process();
  evaluator_->process();
}

Pipeline::~Pipeline() {
  bus_.set_recorder(nullptr);
}

void Pipeline::step() {
  const std::int64_t next = tick() + 1;
  const double start = static_cast<double>(next - 1) / scenario_.sim_rate;
  if (script_) {
    script_->tick(next, start);
  }
  timed(control_latency_, [&] {
    control_->tick(start);
    return true;
  });
  timed(sim_latency_, [&] {
    sim_->step(next);
    return true;
  });
  timed(slam_latency_, [&] { return slam_->process(); });
  timed(context_latency_, [&] { return context_->process(); });
  timed(mapping_latency_, [&] { return mapping_->process(); });
  evaluator_->process();
  tick_.store(next);
}

void Pipeline::run() {
  while (!finished()) {
    step();
  }
  flush_log();
}

void Pipeline::flush_log() {
  if (log_) {
    log_->flush();
  }
}

std::vector<TopicCounts> collect_topic_counts(const PipelineBus& bus) {
  std::vector<TopicCounts> out;
  for (const auto& name : bus.topics()) {
    const auto s = bus.stats(name);
    out.push_back({name, s.published, s.delivered, s.dropped});
  }
  return out;
}

void fill_map_section(RunReport& report, const GlobalMap& map, const Scene& scene, std::span<const Vec2> viewpoints) {
  report.map_width = map.width();
  report.map_height = map.height();
  report.map_epochs = map.epoch();
  report.occupied_cells = 0;
  report.free_cells = 0;
  if (!map.empty()) {
    const auto snap = map.snapshot();
    for (const auto c : snap.cells) {
      report.occupied_cells += c == Occupancy::Occupied ? 1 : 0;
      report.free_cells += c == Occupancy::Free ? 1 : 0;
    }
  }
  report.map_iou = map_iou(map, scene, 0.1, viewpoints);
}

RunReport Pipeline::report(double wall_seconds) const {
  RunReport r;
  r.scenario = scenario_.name;
  r.seed = scenario_.seed;
  r.mode = "run";
  r.frames_processed = slam_->masks_seen();
  r.keyframes_forwarded = slam_->gate().forwarded();
  r.gated_frames = slam_->gate().gated();
  r.sim_time = now();
  r.wall_time = wall_seconds;
  r.pipeline_rate = r.sim_time > 0.0 ? static_cast<double>(r.frames_processed) / r.sim_time : 0.0;
  r.timings = {timing("control", control_latency_), timing("sim", sim_latency_),
               timing("render", sim_->render_latency()), timing("slam", slam_latency_),
               timing("context", context_latency_), timing("mapping", mapping_latency_)};
  const auto errors = evaluator_->errors();
  r.scaled_ate = errors.scaled_ate;
  r.raw_ate = errors.raw_ate;
  r.final_scaled_error = errors.final_scaled_error;
  r.final_raw_error = errors.final_raw_error;
  r.ate_samples = errors.samples;
  fill_map_section(r, mapping_->global_map(), scenario_.scene, mapping_->viewpoints());
  r.topics = collect_topic_counts(bus_);
  r.clamped_commands = control_->controller().clamp_count();
  r.final_tracking_state = std::string(to_string(slam_->state()));
  return r;
}

}  // namespace groundmap
