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

#include "groundmap/nodes.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numeric>

#include "groundmap/errors.hpp"

namespace groundmap {

namespace {

using Clock = std::chrono::steady_clock;

double elapsed_ms(Clock::time_point since) {
  return std::chrono::duration<double, std::milli>(Clock::now() - since).count();
}

Vec3 planar(const Pose2& p) { return {p.x, p.y, 0.0}; }

}  // namespace

double LatencyStats::mean() const {
  if (samples_.empty()) {
    return 0.0;
  }
  return std::accumulate(samples_.begin(), samples_.end(), 0.0) / static_cast<double>(samples_.size());
}

double LatencyStats::p95() const {
  if (samples_.empty()) {
    return 0.0;
  }
  std::vector<double> sorted = samples_;
  std::sort(sorted.begin(), sorted.end());
  const auto rank = static_cast<std::size_t>(std::ceil(0.95 * static_cast<double>(sorted.size())));
  return sorted[std::max<std::size_t>(rank, 1) - 1];
}

// ---------------------------------------------------------------- SimNode

SimNode::SimNode(PipelineBus& bus, const Scenario& scenario)
    : bus_(bus),
      scenario_(scenario),
      cmd_in_(bus.subscribe(topics::kSimCmd, kPipelineQueueCapacity)),
      rng_(scenario.seed),
      visual_(scenario.visual_odometry, scenario.scene.robot_start),
      truth_(scenario.scene.robot_start),
      wheel_(scenario.scene.robot_start) {}

void SimNode::start() {
  bus_.publish(topics::kTruth, publishers::kSim, 0.0, TruthMsg{truth_, {}, false});
  bus_.publish(topics::kWheelOdom, publishers::kSim, 0.0, WheelOdomMsg{wheel_, Pose2::identity()});
}

void SimNode::step(std::int64_t tick) {
  const double stamp = static_cast<double>(tick) / scenario_.sim_rate;
  bool have_cmd = false;
  while (auto env = cmd_in_.try_pop()) {
    command_ = env->get<SimCmdMsg>().forwarded;
    have_cmd = true;
  }
  if (!have_cmd) {
    // No arbiter output this tick: hold still rather than coast.
    command_ = ForwardedCmd{};
  }

  const Pose2 before = truth_;
  const auto moved = step_dynamics(truth_, {command_.cmd.v, command_.cmd.w}, scenario_.tick_seconds(), scenario_.limits);
  truth_ = moved.pose;
  const Pose2 measured = wheel_odometry(between(before, truth_), scenario_.wheel_noise, rng_);
  wheel_ = compose_pose2(wheel_, measured);

  const double v = moved.clamped ? std::clamp(command_.cmd.v, -scenario_.limits.v_max, scenario_.limits.v_max)
                                 : command_.cmd.v;
  const double w = moved.clamped ? std::clamp(command_.cmd.w, -scenario_.limits.w_max, scenario_.limits.w_max)
                                 : command_.cmd.w;
  bus_.publish(topics::kTruth, publishers::kSim, stamp, TruthMsg{truth_, {v, w}, moved.clamped || command_.clamped});
  bus_.publish(topics::kWheelOdom, publishers::kSim, stamp, WheelOdomMsg{wheel_, measured});

  if (tick % scenario_.camera_every() == 0) {
    ++frames_;
    bus_.publish(topics::kCameraFrame, publishers::kSim, stamp, CameraFrameMsg{frames_});
    const auto obs = visual_.observe(stamp, truth_);
    for (const auto e : obs.events) {
      bus_.publish(topics::kSlamEvent, publishers::kSim, stamp, SlamEventMsg{e});
    }
    if (obs.pose) {
      bus_.publish(topics::kVisualOdom, publishers::kSim, stamp, VisualOdomMsg{*obs.pose});
    }
  }
  if (tick % scenario_.pipeline_every() == 0) {
    const auto t0 = Clock::now();
    auto mask = std::make_shared<const SegMask>(render_segmentation(scenario_.scene, truth_, scenario_.camera));
    render_latency_.add(elapsed_ms(t0));
    ++masks_;
    bus_.publish(topics::kCameraMask, publishers::kSim, stamp, MaskMsg{frames_, std::move(mask)});
  }
}

// ---------------------------------------------------------------- SlamNode

SlamNode::SlamNode(PipelineBus& bus, double scale_period, double max_gap)
    : bus_(bus),
      in_(bus.subscribe({topics::kWheelOdom, topics::kVisualOdom, topics::kSlamEvent, topics::kCameraFrame,
                         topics::kCameraMask},
                        kPipelineQueueCapacity)),
      scaler_(scale_period, max_gap) {}

void SlamNode::start(double stamp) {
  bus_.publish(topics::kSlamState, publishers::kSlam, stamp, TrackingStateMsg{state_});
}

void SlamNode::set_state(TrackingState next, double stamp) {
  if (next == state_) {
    return;
  }
  state_ = next;
  bus_.publish(topics::kSlamState, publishers::kSlam, stamp, TrackingStateMsg{state_});
}

bool SlamNode::process() {
  bool handled_mask = false;
  while (auto env = in_.try_pop()) {
    const double stamp = env->header.stamp;
    const auto& msg = *env->payload;
    if (const auto* wheel = std::get_if<WheelOdomMsg>(&msg)) {
      scaler_.add_wheel(stamp, planar(wheel->pose));
    } else if (const auto* visual = std::get_if<VisualOdomMsg>(&msg)) {
      latest_visual_ = visual->pose;
      scaler_.add_visual(stamp, visual->pose.position);
    } else if (const auto* event = std::get_if<SlamEventMsg>(&msg)) {
      set_state(step_tracking(state_, event->event), stamp);
    } else if (std::holds_alternative<CameraFrameMsg>(msg)) {
      set_state(step_tracking(state_, SlamEvent::ImageArrived), stamp);
    } else if (const auto* mask = std::get_if<MaskMsg>(&msg)) {
      on_mask(*mask, stamp);
      handled_mask = true;
    }
  }
  return handled_mask;
}

void SlamNode::on_mask(const MaskMsg& mask, double stamp) {
  ++masks_seen_;
  const auto update = scaler_.poll(stamp);
  const auto& transform = update ? update->transform : scaler_.current();
  const bool valid = update ? update->valid : scaler_.valid();
  if (latest_visual_) {
    if (auto scaled = publish_scaled(*latest_visual_, transform, valid, state_)) {
      latest_scaled_ = scaled;
      bus_.publish(topics::kScaledOdom, publishers::kSlam, stamp,
                   ScaledOdomMsg{scaled->pose, scaled->scale_valid, transform.scale()});
    }
  }
  if (auto forwarded = gate_.forward(mask.mask, state_)) {
    const Pose2 pose = latest_scaled_ ? latest_scaled_->pose : Pose2::identity();
    const bool valid_pose = latest_scaled_ && latest_scaled_->scale_valid;
    bus_.publish(topics::kKeyframe, publishers::kSlam, stamp,
                 KeyframeMsg{mask.frame, std::move(*forwarded), pose, valid_pose});
  }
}

// ---------------------------------------------------------------- ContextNode

ContextNode::ContextNode(PipelineBus& bus, const CameraModel& camera, BoundaryFilterConfig config)
    : bus_(bus),
      in_(bus.subscribe(topics::kKeyframe, kPipelineQueueCapacity)),
      homography_(build_homography(camera)),
      config_(config) {}

bool ContextNode::process() {
  bool worked = false;
  while (auto env = in_.try_pop()) {
    const auto& key = env->get<KeyframeMsg>();
    if (!key.mask) {
      continue;
    }
    const auto raw = extract_boundary(*key.mask);
    bus_.publish(topics::kBoundary, publishers::kContext, env->header.stamp,
                 BoundaryMsg{key.frame, filter_boundary(raw, homography_, config_), key.pose, key.scale_valid});
    worked = true;
  }
  return worked;
}

// ---------------------------------------------------------------- MappingNode

MappingNode::MappingNode(PipelineBus& bus, double resolution, int snapshot_every)
    : bus_(bus),
      in_(bus.subscribe(topics::kBoundary, kPipelineQueueCapacity)),
      resolution_(resolution),
      snapshot_every_(snapshot_every),
      global_(resolution) {}

bool MappingNode::process() {
  bool worked = false;
  while (auto env = in_.try_pop()) {
    const auto& b = env->get<BoundaryMsg>();
    const double stamp = env->header.stamp;
    LocalMap local = build_local_map(b.boundary, resolution_);
    const bool fuse = b.scale_valid;
    bus_.publish(topics::kLocalMap, publishers::kMapping, stamp, LocalMapMsg{b.frame, local, b.pose, fuse});
    if (fuse) {
      GlobalMapMsg out;
      out.patch = fuse_local(global_, local, b.pose);
      viewpoints_.push_back(b.pose.position());
      if (global_.epoch() == 1 || global_.epoch() % static_cast<std::uint64_t>(snapshot_every_) == 0) {
        out.snapshot = global_.snapshot();
      }
      out.width = global_.width();
      out.height = global_.height();
      bus_.publish(topics::kGlobalMap, publishers::kMapping, stamp, std::move(out));
    }
    worked = true;
  }
  return worked;
}

// ---------------------------------------------------------------- ControlNode

ControlNode::ControlNode(PipelineBus& bus, Controller::Config config)
    : bus_(bus),
      in_(bus.subscribe({topics::kCmdVel, topics::kKill, topics::kSlamState}, kPipelineQueueCapacity)),
      controller_(config) {}

void ControlNode::tick(double now) {
  while (auto env = in_.try_pop()) {
    const auto& msg = *env->payload;
    if (const auto* cmd = std::get_if<CmdVelMsg>(&msg)) {
      controller_.submit(cmd->cmd);
    } else if (const auto* kill = std::get_if<KillMsg>(&msg)) {
      controller_.kill_switch(kill->engage);
    } else if (const auto* state = std::get_if<TrackingStateMsg>(&msg)) {
      controller_.on_tracking_state(state->state);
    }
  }
  bus_.publish(topics::kSimCmd, publishers::kControl, now, SimCmdMsg{controller_.tick(now)});
}

// ---------------------------------------------------------------- ScriptDriver

ScriptDriver::ScriptDriver(PipelineBus& bus, const CommandScript& script, int sim_rate)
    : bus_(bus), repeat_(script.repeat) {
  for (const auto& seg : script.segments) {
    const auto ticks = std::llround(seg.duration * sim_rate);
    if (ticks > 0) {
      steps_.push_back({seg, ticks});
      period_ticks_ += ticks;
    }
  }
  for (const auto& k : script.kill_events) {
    kills_.emplace_back(std::llround(k.at * sim_rate), k.engage);
  }
}

std::optional<std::int64_t> ScriptDriver::length_ticks() const {
  if (repeat_ == 0 && period_ticks_ > 0) {
    return std::nullopt;
  }
  return period_ticks_ * repeat_;
}

void ScriptDriver::tick(std::int64_t tick, double now) {
  const std::int64_t index = tick - 1;
  for (const auto& [at, engage] : kills_) {
    if (at == index) {
      bus_.publish(topics::kKill, publishers::kScript, now, KillMsg{engage});
    }
  }
  if (period_ticks_ == 0) {
    return;
  }
  CmdVel cmd{0.0, 0.0, now, CmdSource::Script};
  if (repeat_ == 0 || index / period_ticks_ < repeat_) {
    std::int64_t offset = index % period_ticks_;
    for (const auto& step : steps_) {
      if (offset < step.ticks) {
        cmd.v = step.segment.v;
        cmd.w = step.segment.w;
        break;
      }
      offset -= step.ticks;
    }
  }
  bus_.publish(topics::kCmdVel, publishers::kScript, now, CmdVelMsg{cmd});
}

// ---------------------------------------------------------------- Evaluator

Evaluator::Evaluator(PipelineBus& bus, const Pose2& start, int sim_rate)
    : in_(bus.subscribe({topics::kTruth, topics::kScaledOdom, topics::kVisualOdom}, kPipelineQueueCapacity)),
      start_(start),
      sim_rate_(sim_rate) {}

std::int64_t Evaluator::tick_of(double stamp) const { return std::llround(stamp * sim_rate_); }

void Evaluator::process() {
  while (auto env = in_.try_pop()) {
    const double stamp = env->header.stamp;
    const auto& msg = *env->payload;
    if (const auto* truth = std::get_if<TruthMsg>(&msg)) {
      truth_by_tick_[tick_of(stamp)] = truth->pose.position();
      truth_.push_back({stamp, planar(truth->pose), std::nullopt});
    } else if (const auto* visual = std::get_if<VisualOdomMsg>(&msg)) {
      const Vec2 world = start_.transform_point(visual->pose.position.head<2>());
      raw_by_tick_[tick_of(stamp)] = world;
      raw_.push_back({stamp, {world.x(), world.y(), 0.0}, std::nullopt});
    } else if (const auto* scaled = std::get_if<ScaledOdomMsg>(&msg)) {
      scaled_.push_back({stamp, planar(scaled->pose), std::nullopt});
      if (scaled->scale_valid) {
        scaled_valid_.emplace_back(tick_of(stamp), scaled->pose.position());
      }
    }
  }
}

TrajectoryErrors Evaluator::errors() const {
  TrajectoryErrors out;
  double scaled_sq = 0.0;
  double raw_sq = 0.0;
  for (const auto& [tick, scaled] : scaled_valid_) {
    const auto truth = truth_by_tick_.find(tick);
    const auto raw = raw_by_tick_.find(tick);
    if (truth == truth_by_tick_.end() || raw == raw_by_tick_.end()) {
      continue;
    }
    const double es = (scaled - truth->second).norm();
    const double er = (raw->second - truth->second).norm();
    scaled_sq += es * es;
    raw_sq += er * er;
    out.final_scaled_error = es;
    out.final_raw_error = er;
    ++out.samples;
  }
  if (out.samples > 0) {
    out.scaled_ate = std::sqrt(scaled_sq / static_cast<double>(out.samples));
    out.raw_ate = std::sqrt(raw_sq / static_cast<double>(out.samples));
  }
  return out;
}

}  // namespace groundmap
