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

#include "groundmap/messages.hpp"

namespace groundmap {

void register_standard_topics(PipelineBus& bus) {
  bus.register_topic<WheelOdomMsg>(topics::kWheelOdom);
  bus.register_topic<VisualOdomMsg>(topics::kVisualOdom);
  bus.register_topic<ScaledOdomMsg>(topics::kScaledOdom);
  bus.register_topic<SlamEventMsg>(topics::kSlamEvent);
  bus.register_topic<TrackingStateMsg>(topics::kSlamState, true);
  bus.register_topic<KeyframeMsg>(topics::kKeyframe);
  bus.register_topic<CameraFrameMsg>(topics::kCameraFrame);
  bus.register_topic<MaskMsg>(topics::kCameraMask);
  bus.register_topic<BoundaryMsg>(topics::kBoundary);
  bus.register_topic<LocalMapMsg>(topics::kLocalMap);
  bus.register_topic<GlobalMapMsg>(topics::kGlobalMap, true);
  bus.register_topic<CmdVelMsg>(topics::kCmdVel);
  bus.register_topic<KillMsg>(topics::kKill, true);
  bus.register_topic<SimCmdMsg>(topics::kSimCmd);
  bus.register_topic<TruthMsg>(topics::kTruth);
}

}  // namespace groundmap
