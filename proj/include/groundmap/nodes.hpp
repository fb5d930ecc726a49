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
#include <map>
#include <optional>
#include <random>
#include <vector>

#include "groundmap/alignment.hpp"
#include "groundmap/messages.hpp"
#include "groundmap/scenario.hpp"

namespace groundmap {

namespace publishers {
inline constexpr const char* kSim = "sim";
inline constexpr const char* kSlam = "slam";
inline constexpr const char* kContext = "context";
inline constexpr const char* kMapping = "mapping";
inline constexpr const char* kControl = "control";
inline constexpr const char* kScript = "script";
inline constexpr const char* kOperator = "operator";
}  // namespace publishers

/// Queue depth for pipeline-internal subscriptions; large enough that a
/// sequentially stepped pipeline never drops.
inline constexpr std::size_t kPipelineQueueCapacity = 1 << 16;

/// Wall-clock samples in milliseconds.
class LatencyStats {
 public:
  void add(double ms) { samples_.push_back(ms); }
  std::size_t count() const { return samples_.size(); }
  double mean() const;
  /// Nearest-rank 95th percentile; 0 when empty.
  double p95() const;

 private:
  std::vector<double> samples_;
};

/// Robot, camera and odometry sources. Owns the simulation clock.
class SimNode {
 public:
  SimNode(PipelineBus& bus, const Scenario& scenario);

  /// Publishes the initial truth and wheel pose at t = 0.
  void start();
  /// Executes the latest `sim/cmd` over one tick, ending at `tick` * dt.
  void step(std::int64_t tick);

  const Pose2& true_pose() const { return truth_; }
  const Pose2& wheel_pose() const { return wheel_; }
  std::uint64_t camera_frames() const { return frames_; }
  std::uint64_t masks_rendered() const { return masks_; }
  const LatencyStats& render_latency() const { return render_latency_; }

 private:
  PipelineBus& bus_;
  Scenario scenario_;
  PipelineBus::Subscription cmd_in_;
  std::mt19937_64 rng_;
  VisualOdometrySim visual_;
  Pose2 truth_;
  Pose2 wheel_;
  ForwardedCmd command_;
  std::uint64_t frames_ = 0;
  std::uint64_t masks_ = 0;
  LatencyStats render_latency_;
};

/// Tracking lifecycle, scale recovery and keyframe gating.
class SlamNode {
 public:
  SlamNode(PipelineBus& bus, double scale_period, double max_gap);

  /// Publishes the initial tracking state.
  void start(double stamp);
  /// Consumes everything queued; returns true if a mask was handled.
  bool process();

  TrackingState state() const { return state_; }
  std::uint64_t masks_seen() const { return masks_seen_; }
  const KeyframeGate& gate() const { return gate_; }
  const ScaleEstimator& scaler() const { return scaler_; }

 private:
  void set_state(TrackingState next, double stamp);
  void on_mask(const MaskMsg& mask, double stamp);

  PipelineBus& bus_;
  PipelineBus::Subscription in_;
  ScaleEstimator scaler_;
  KeyframeGate gate_;
  TrackingState state_ = TrackingState::WaitingForImages;
  std::optional<VisualPose> latest_visual_;
  std::optional<ScaledOdom> latest_scaled_;
  std::uint64_t masks_seen_ = 0;
};

/// Keyframe mask -> filtered ground boundary.
class ContextNode {
 public:
  ContextNode(PipelineBus& bus, const CameraModel& camera, BoundaryFilterConfig config);

  bool process();
  const Homography& homography() const { return homography_; }

 private:
  PipelineBus& bus_;
  PipelineBus::Subscription in_;
  Homography homography_;
  BoundaryFilterConfig config_;
};

/// Ground boundary -> local map -> global map.
class MappingNode {
 public:
  MappingNode(PipelineBus& bus, double resolution, int snapshot_every);

  bool process();
  const GlobalMap& global_map() const { return global_; }
  /// Robot positions at which local maps were fused.
  const std::vector<Vec2>& viewpoints() const { return viewpoints_; }

 private:
  PipelineBus& bus_;
  PipelineBus::Subscription in_;
  double resolution_;
  int snapshot_every_;
  GlobalMap global_;
  std::vector<Vec2> viewpoints_;
};

/// Arbitrates operator, script, kill and retrace commands once per tick.
class ControlNode {
 public:
  ControlNode(PipelineBus& bus, Controller::Config config);

  /// Applies queued inputs, then publishes the command for the tick starting at `now`.
  void tick(double now);
  const Controller& controller() const { return controller_; }

 private:
  PipelineBus& bus_;
  PipelineBus::Subscription in_;
  Controller controller_;
};

/// Replays a command script in ticks; kill events fire at their tick.
class ScriptDriver {
 public:
  ScriptDriver(PipelineBus& bus, const CommandScript& script, int sim_rate);

  /// Publishes the command for the interval that starts at `(tick - 1) * dt`.
  void tick(std::int64_t tick, double now);
  /// Ticks until the script is exhausted; nullopt when it repeats forever.
  std::optional<std::int64_t> length_ticks() const;

 private:
  struct Step {
    CommandSegment segment;
    std::int64_t ticks = 0;
  };

  PipelineBus& bus_;
  std::vector<Step> steps_;
  std::int64_t period_ticks_ = 0;
  int repeat_;
  std::vector<std::pair<std::int64_t, bool>> kills_;
};

struct TrajectoryErrors {
  std::size_t samples = 0;
  std::optional<double> scaled_ate;
  std::optional<double> raw_ate;
  std::optional<double> final_scaled_error;
  std::optional<double> final_raw_error;
};

/// Collects truth, scaled and raw visual trajectories for error reporting.
/// Raw visual positions are anchored at the start pose without rescaling.
class Evaluator {
 public:
  Evaluator(PipelineBus& bus, const Pose2& start, int sim_rate);

  void process();
  TrajectoryErrors errors() const;

  const Trajectory& truth() const { return truth_; }
  const Trajectory& scaled() const { return scaled_; }
  const Trajectory& raw_visual() const { return raw_; }

 private:
  PipelineBus::Subscription in_;
  Pose2 start_;
  int sim_rate_;
  std::int64_t tick_of(double stamp) const;

  std::map<std::int64_t, Vec2> truth_by_tick_;
  std::map<std::int64_t, Vec2> raw_by_tick_;
  std::vector<std::pair<std::int64_t, Vec2>> scaled_valid_;
  Trajectory truth_;
  Trajectory scaled_;
  Trajectory raw_;
};

}  // namespace groundmap
