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

#include "groundmap/tracking.hpp"

#include <cmath>

namespace groundmap {

std::string_view to_string(TrackingState s) {
  switch (s) {
    case TrackingState::WaitingForImages: return "WaitingForImages";
    case TrackingState::NotInitialized: return "NotInitialized";
    case TrackingState::Tracking: return "Tracking";
    case TrackingState::TrackingLost: return "TrackingLost";
  }
  return "invalid";
}

std::optional<TrackingState> tracking_state_from_string(std::string_view s) {
  for (auto state : {TrackingState::WaitingForImages, TrackingState::NotInitialized,
                     TrackingState::Tracking, TrackingState::TrackingLost}) {
    if (to_string(state) == s) {
      return state;
    }
  }
  return std::nullopt;
}

TrackingState step_tracking(TrackingState state, SlamEvent event) {
  if (event == SlamEvent::Reset) {
    return TrackingState::WaitingForImages;
  }
  switch (state) {
    case TrackingState::WaitingForImages:
      return event == SlamEvent::ImageArrived ? TrackingState::NotInitialized : state;
    case TrackingState::NotInitialized:
      return event == SlamEvent::InitSucceeded ? TrackingState::Tracking : state;
    case TrackingState::Tracking:
      return event == SlamEvent::LossEvent ? TrackingState::TrackingLost : state;
    case TrackingState::TrackingLost:
      return event == SlamEvent::RelocalizedEvent ? TrackingState::Tracking : state;
  }
  return state;
}

std::optional<ScaledOdom> publish_scaled(const VisualPose& visual, const SimilarityTransform3& transform,
                                         bool scale_valid, TrackingState state) {
  if (state != TrackingState::Tracking) {
    return std::nullopt;
  }
  const Vec3 p = transform.apply(visual.position);
  // Rotate the heading vector rather than composing angles: stays correct when
  // the fitted rotation is not a pure yaw (e.g. collinear paths).
  const Vec3 heading = transform.rotation() * Vec3(std::cos(visual.yaw), std::sin(visual.yaw), 0.0);
  ScaledOdom out;
  out.pose = {p.x(), p.y(), normalize_angle(std::atan2(heading.y(), heading.x()))};
  out.scale_valid = scale_valid;
  return out;
}

}  // namespace groundmap
