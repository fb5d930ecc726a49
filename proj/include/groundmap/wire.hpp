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
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "groundmap/control.hpp"
#include "groundmap/messages.hpp"
#include "groundmap/occupancy.hpp"

namespace groundmap::wire {

inline constexpr int kSchemaVersion = 1;

/// Binary grid patch frame, little-endian:
///   'G' 'P' version(u8) flags(u8, bit0 = snapshot)
///   epoch(u64) origin_x(i32) origin_y(i32) width(u32) height(u32)
///   runs: state(u8: 0 unknown, 1 free, 2 occupied) count(LEB128), row-major, south row first
inline constexpr std::size_t kPatchHeaderSize = 28;

std::vector<std::uint8_t> encode_grid_patch(const GridPatch& patch);
/// Throws Error(Schema) on malformed input.
GridPatch decode_grid_patch(std::span<const std::uint8_t> bytes);

/// Client-side ternary map rebuilt from a snapshot followed by consecutive patches.
class GridReconstructor {
 public:
  enum class Result { Applied, NeedSnapshot };

  /// Snapshots replace the grid; deltas must carry the next epoch.
  Result apply(const GridPatch& patch);

  bool synced() const { return synced_; }
  std::uint64_t epoch() const { return grid_.epoch; }
  /// Current grid as a snapshot patch.
  const GridPatch& grid() const { return grid_; }

 private:
  void grow(std::int64_t x0, std::int64_t y0, std::int64_t x1, std::int64_t y1);

  GridPatch grid_;
  bool synced_ = false;
};

// ---- server -> client text messages

nlohmann::json state_message(double stamp, TrackingState tracking, bool kill_engaged, bool you_drive,
                             bool driver_taken);
nlohmann::json pose_message(double stamp, const Pose2& pose, std::string_view frame, bool scale_valid);
/// Boundary reduced to `columns` evenly spaced samples.
nlohmann::json boundary_thumbnail_message(double stamp, const BoundaryMsg& boundary, int columns = 64);
nlohmann::json report_tick_message(double stamp, std::uint64_t frames, std::uint64_t map_epoch,
                                   std::uint64_t dropped_patches);
nlohmann::json error_message(double stamp, std::string_view reason);

// ---- client -> server text messages

struct CmdVelRequest {
  double linear = 0.0;
  double angular = 0.0;
};

struct KillRequest {
  bool engage = true;
};

struct SessionRequest {
  enum class Action { Acquire, Release } action = Action::Acquire;
};

using ClientMessage = std::variant<CmdVelRequest, KillRequest, SessionRequest>;

/// Throws Error(Schema) for malformed or unknown messages.
ClientMessage parse_client_message(std::string_view text);

nlohmann::json cmd_vel_request(double stamp, double linear, double angular);
nlohmann::json kill_request(double stamp, bool engage);
nlohmann::json session_request(double stamp, SessionRequest::Action action);

}  // namespace groundmap::wire
