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
#include <memory>
#include <optional>
#include <variant>

#include "groundmap/boundary.hpp"
#include "groundmap/bus.hpp"
#include "groundmap/control.hpp"
#include "groundmap/geometry.hpp"
#include "groundmap/occupancy.hpp"
#include "groundmap/segmentation.hpp"
#include "groundmap/sim_world.hpp"
#include "groundmap/tracking.hpp"

namespace groundmap {

namespace topics {
inline constexpr const char* kWheelOdom = "odom/wheel";
inline constexpr const char* kVisualOdom = "odom/visual";
inline constexpr const char* kScaledOdom = "odom/scaled";
inline constexpr const char* kSlamEvent = "slam/event";
inline constexpr const char* kSlamState = "slam/state";
inline constexpr const char* kKeyframe = "slam/keyframe";
inline constexpr const char* kCameraFrame = "camera/frame";
inline constexpr const char* kCameraMask = "camera/mask";
inline constexpr const char* kBoundary = "context/boundary";
inline constexpr const char* kLocalMap = "map/local";
inline constexpr const char* kGlobalMap = "map/global";
inline constexpr const char* kCmdVel = "ctrl/cmd_vel";
inline constexpr const char* kKill = "ctrl/kill";
inline constexpr const char* kSimCmd = "sim/cmd";
inline constexpr const char* kTruth = "sim/truth";
}  // namespace topics

struct WheelOdomMsg {
  Pose2 pose;   // integrated, world frame
  Pose2 delta;  // measured increment in the previous body frame
};

struct VisualOdomMsg {
  VisualPose pose;
};

struct SlamEventMsg {
  SlamEvent event = SlamEvent::ImageArrived;
};

struct TrackingStateMsg {
  TrackingState state = TrackingState::WaitingForImages;
};

struct ScaledOdomMsg {
  Pose2 pose;
  bool scale_valid = false;
  double scale = 1.0;
};

struct CameraFrameMsg {
  std::uint64_t frame = 0;
};

struct MaskMsg {
  std::uint64_t frame = 0;
  std::shared_ptr<const SegMask> mask;
};

struct KeyframeMsg {
  std::uint64_t frame = 0;
  std::shared_ptr<const SegMask> mask;
  Pose2 pose;
  bool scale_valid = false;
};

struct BoundaryMsg {
  std::uint64_t frame = 0;
  GroundBoundary boundary;
  Pose2 pose;
  bool scale_valid = false;
};

struct LocalMapMsg {
  std::uint64_t frame = 0;
  LocalMap map;
  Pose2 pose;
  bool fused = false;
};

/// Delta patch for one fusion epoch; carries a full snapshot periodically.
struct GlobalMapMsg {
  GridPatch patch;
  std::optional<GridPatch> snapshot;
  int width = 0;
  int height = 0;
};

struct CmdVelMsg {
  CmdVel cmd;
};

struct KillMsg {
  bool engage = false;
};

/// What the robot executes during the next tick.
struct SimCmdMsg {
  ForwardedCmd forwarded;
};

struct TruthMsg {
  Pose2 pose;
  VelocityCommand velocity;
  bool clamped = false;
};

using Message = std::variant<WheelOdomMsg, VisualOdomMsg, SlamEventMsg, TrackingStateMsg, ScaledOdomMsg,
                             CameraFrameMsg, MaskMsg, KeyframeMsg, BoundaryMsg, LocalMapMsg, GlobalMapMsg,
                             CmdVelMsg, KillMsg, SimCmdMsg, TruthMsg>;

using PipelineBus = Bus<Message>;
using PipelineEnvelope = Envelope<Message>;

/// Registers every pipeline topic with its message type.
void register_standard_topics(PipelineBus& bus);

}  // namespace groundmap
