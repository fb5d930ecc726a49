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
#include <optional>
#include <string_view>

#include "groundmap/geometry.hpp"
#include "groundmap/segmentation.hpp"
#include "groundmap/sim_world.hpp"

namespace groundmap {

enum class TrackingState : std::uint8_t {
  WaitingForImages,
  NotInitialized,
  Tracking,
  TrackingLost,
};

std::string_view to_string(TrackingState s);
std::optional<TrackingState> tracking_state_from_string(std::string_view s);

/// Total transition function of the SLAM lifecycle; unlisted pairs are no-ops.
TrackingState step_tracking(TrackingState state, SlamEvent event);

/// Masks only leave the SLAM module while it is tracking.
class KeyframeGate {
 public:
  template <typename Mask>
  std::optional<Mask> forward(Mask mask, TrackingState state) {
    if (state == TrackingState::Tracking) {
      ++forwarded_;
      return mask;
    }
    ++gated_;
    return std::nullopt;
  }

  std::uint64_t forwarded() const { return forwarded_; }
  std::uint64_t gated() const { return gated_; }

 private:
  std::uint64_t forwarded_ = 0;
  std::uint64_t gated_ = 0;
};

struct ScaledOdom {
  Pose2 pose;
  bool scale_valid = false;
};

/// Maps a visual pose into the metric frame. Only emits while tracking.
std::optional<ScaledOdom> publish_scaled(const VisualPose& visual, const SimilarityTransform3& transform,
                                         bool scale_valid, TrackingState state);

}  // namespace groundmap
