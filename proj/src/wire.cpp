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

#include "groundmap/wire.hpp"

#include <algorithm>
#include <cmath>

#include "groundmap/errors.hpp"

namespace groundmap::wire {

using nlohmann::json;

namespace {

void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) {
    out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
  }
}

void put_u64(std::vector<std::uint8_t>& out, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) {
    out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
  }
}

void put_leb128(std::vector<std::uint8_t>& out, std::uint64_t v) {
  do {
    std::uint8_t byte = v & 0x7f;
    v >>= 7;
    if (v != 0) {
      byte |= 0x80;
    }
    out.push_back(byte);
  } while (v != 0);
}

class Reader {
 public:
  explicit Reader(std::span<const std::uint8_t> bytes) : bytes_(bytes) {}

  std::uint8_t u8() {
    need(1);
    return bytes_[pos_++];
  }
  std::uint32_t u32() {
    need(4);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) {
      v |= static_cast<std::uint32_t>(bytes_[pos_++]) << (8 * i);
    }
    return v;
  }
  std::uint64_t u64() {
    need(8);
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) {
      v |= static_cast<std::uint64_t>(bytes_[pos_++]) << (8 * i);
    }
    return v;
  }
  std::uint64_t leb128() {
    std::uint64_t v = 0;
    for (int shift = 0; shift < 64; shift += 7) {
      const std::uint8_t byte = u8();
      v |= static_cast<std::uint64_t>(byte & 0x7f) << shift;
      if (!(byte & 0x80)) {
        return v;
      }
    }
    throw Error(ErrorCode::Schema, "grid patch: run length overflows");
  }
  bool done() const { return pos_ == bytes_.size(); }

 private:
  void need(std::size_t n) const {
    if (bytes_.size() - pos_ < n) {
      throw Error(ErrorCode::Schema, "grid patch: truncated frame");
    }
  }

  std::span<const std::uint8_t> bytes_;
  std::size_t pos_ = 0;
};

json envelope(std::string_view type, double stamp) {
  return {{"schema", kSchemaVersion}, {"type", type}, {"stamp", stamp}};
}

}  // namespace

std::vector<std::uint8_t> encode_grid_patch(const GridPatch& patch) {
  if (patch.cells.size() != static_cast<std::size_t>(patch.width) * patch.height) {
    throw Error(ErrorCode::InvalidInput, "grid patch cell count does not match its size");
  }
  std::vector<std::uint8_t> out;
  out.reserve(kPatchHeaderSize + patch.cells.size() / 4);
  out.push_back('G');
  out.push_back('P');
  out.push_back(1);
  out.push_back(patch.snapshot ? 1 : 0);
  put_u64(out, patch.epoch);
  put_u32(out, static_cast<std::uint32_t>(patch.origin_x));
  put_u32(out, static_cast<std::uint32_t>(patch.origin_y));
  put_u32(out, patch.width);
  put_u32(out, patch.height);
  std::size_t i = 0;
  while (i < patch.cells.size()) {
    std::size_t j = i + 1;
    while (j < patch.cells.size() && patch.cells[j] == patch.cells[i]) {
      ++j;
    }
    out.push_back(static_cast<std::uint8_t>(patch.cells[i]));
    put_leb128(out, j - i);
    i = j;
  }
  return out;
}

GridPatch decode_grid_patch(std::span<const std::uint8_t> bytes) {
  Reader in(bytes);
  if (in.u8() != 'G' || in.u8() != 'P') {
    throw Error(ErrorCode::Schema, "grid patch: bad magic");
  }
  if (in.u8() != 1) {
    throw Error(ErrorCode::Schema, "grid patch: unsupported version");
  }
  GridPatch p;
  p.snapshot = (in.u8() & 1) != 0;
  p.epoch = in.u64();
  p.origin_x = static_cast<std::int32_t>(in.u32());
  p.origin_y = static_cast<std::int32_t>(in.u32());
  p.width = in.u32();
  p.height = in.u32();
  const std::uint64_t total = static_cast<std::uint64_t>(p.width) * p.height;
  if (total > (1ull << 28)) {
    throw Error(ErrorCode::Schema, "grid patch: implausible size");
  }
  p.cells.reserve(static_cast<std::size_t>(total));
  while (p.cells.size() < total) {
    const std::uint8_t state = in.u8();
    const std::uint64_t count = in.leb128();
    if (state > 2 || count == 0 || count > total - p.cells.size()) {
      throw Error(ErrorCode::Schema, "grid patch: bad run");
    }
    p.cells.insert(p.cells.end(), static_cast<std::size_t>(count), static_cast<Occupancy>(state));
  }
  if (!in.done()) {
    throw Error(ErrorCode::Schema, "grid patch: trailing bytes");
  }
  return p;
}

void GridReconstructor::grow(std::int64_t x0, std::int64_t y0, std::int64_t x1, std::int64_t y1) {
  if (grid_.empty()) {
    grid_.origin_x = static_cast<std::int32_t>(x0);
    grid_.origin_y = static_cast<std::int32_t>(y0);
    grid_.width = static_cast<std::uint32_t>(x1 - x0 + 1);
    grid_.height = static_cast<std::uint32_t>(y1 - y0 + 1);
    grid_.cells.assign(static_cast<std::size_t>(grid_.width) * grid_.height, Occupancy::Unknown);
    return;
  }
  const std::int64_t ox = std::min<std::int64_t>(grid_.origin_x, x0);
  const std::int64_t oy = std::min<std::int64_t>(grid_.origin_y, y0);
  const std::int64_t ex = std::max<std::int64_t>(grid_.origin_x + grid_.width - 1, x1);
  const std::int64_t ey = std::max<std::int64_t>(grid_.origin_y + grid_.height - 1, y1);
  if (ox == grid_.origin_x && oy == grid_.origin_y && ex - ox + 1 == grid_.width && ey - oy + 1 == grid_.height) {
    return;
  }
  GridPatch next;
  next.epoch = grid_.epoch;
  next.snapshot = true;
  next.origin_x = static_cast<std::int32_t>(ox);
  next.origin_y = static_cast<std::int32_t>(oy);
  next.width = static_cast<std::uint32_t>(ex - ox + 1);
  next.height = static_cast<std::uint32_t>(ey - oy + 1);
  next.cells.assign(static_cast<std::size_t>(next.width) * next.height, Occupancy::Unknown);
  for (std::uint32_t row = 0; row < grid_.height; ++row) {
    for (std::uint32_t col = 0; col < grid_.width; ++col) {
      const auto x = static_cast<std::size_t>(grid_.origin_x - ox + col);
      const auto y = static_cast<std::size_t>(grid_.origin_y - oy + row);
      next.cells[y * next.width + x] = grid_.at(col, row);
    }
  }
  grid_ = std::move(next);
}

GridReconstructor::Result GridReconstructor::apply(const GridPatch& patch) {
  if (patch.snapshot) {
    grid_ = patch;
    synced_ = true;
    return Result::Applied;
  }
  if (!synced_ || patch.epoch != grid_.epoch + 1) {
    synced_ = false;
    return Result::NeedSnapshot;
  }
  grid_.epoch = patch.epoch;
  if (patch.empty()) {
    return Result::Applied;
  }
  grow(patch.origin_x, patch.origin_y, static_cast<std::int64_t>(patch.origin_x) + patch.width - 1,
       static_cast<std::int64_t>(patch.origin_y) + patch.height - 1);
  for (std::uint32_t row = 0; row < patch.height; ++row) {
    for (std::uint32_t col = 0; col < patch.width; ++col) {
      const auto x = static_cast<std::size_t>(patch.origin_x - grid_.origin_x + col);
      const auto y = static_cast<std::size_t>(patch.origin_y - grid_.origin_y + row);
      grid_.cells[y * grid_.width + x] = patch.at(col, row);
    }
  }
  return Result::Applied;
}

json state_message(double stamp, TrackingState tracking, bool kill_engaged, bool you_drive, bool driver_taken) {
  auto j = envelope("state", stamp);
  j["tracking"] = std::string(to_string(tracking));
  j["kill"] = kill_engaged;
  j["driver"] = you_drive;
  j["driver_taken"] = driver_taken;
  return j;
}

json pose_message(double stamp, const Pose2& pose, std::string_view frame, bool scale_valid) {
  auto j = envelope("pose", stamp);
  j["frame"] = frame;
  j["x"] = pose.x;
  j["y"] = pose.y;
  j["yaw"] = pose.yaw;
  j["scale_valid"] = scale_valid;
  return j;
}

json boundary_thumbnail_message(double stamp, const BoundaryMsg& boundary, int columns) {
  auto j = envelope("boundary_thumbnail", stamp);
  j["frame"] = boundary.frame;
  const auto& entries = boundary.boundary.entries;
  json samples = json::array();
  const int n = std::max(1, std::min<int>(columns, static_cast<int>(entries.size())));
  for (int i = 0; i < n && !entries.empty(); ++i) {
    const auto col = static_cast<std::size_t>(i) * entries.size() / static_cast<std::size_t>(n);
    const auto& e = entries[col];
    json item = {{"col", col}, {"kind", to_string(e.kind)}, {"row", e.row ? json(*e.row) : json(nullptr)}};
    if (e.point) {
      item["x"] = e.point->x();
      item["y"] = e.point->y();
    }
    samples.push_back(std::move(item));
  }
  j["columns"] = entries.size();
  j["samples"] = std::move(samples);
  return j;
}

json report_tick_message(double stamp, std::uint64_t frames, std::uint64_t map_epoch, std::uint64_t dropped_patches) {
  auto j = envelope("report_tick", stamp);
  j["frames"] = frames;
  j["map_epoch"] = map_epoch;
  j["dropped_patches"] = dropped_patches;
  return j;
}

json error_message(double stamp, std::string_view reason) {
  auto j = envelope("error", stamp);
  j["reason"] = reason;
  return j;
}

ClientMessage parse_client_message(std::string_view text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw Error(ErrorCode::Schema, std::string("client message is not JSON: ") + e.what());
  }
  try {
    if (!j.is_object() || j.at("schema").get<int>() != kSchemaVersion) {
      throw Error(ErrorCode::Schema, "client message has an unsupported schema version");
    }
    const auto type = j.at("type").get<std::string>();
    j.at("stamp").get<double>();
    if (type == "cmd_vel") {
      return CmdVelRequest{j.at("linear").get<double>(), j.at("angular").get<double>()};
    }
    if (type == "kill") {
      return KillRequest{j.at("engage").get<bool>()};
    }
    if (type == "session_control") {
      const auto action = j.at("action").get<std::string>();
      if (action == "acquire") {
        return SessionRequest{SessionRequest::Action::Acquire};
      }
      if (action == "release") {
        return SessionRequest{SessionRequest::Action::Release};
      }
      throw Error(ErrorCode::Schema, "session_control action must be acquire or release");
    }
    throw Error(ErrorCode::Schema, "unknown client message type '" + type + "'");
  } catch (const json::exception& e) {
    throw Error(ErrorCode::Schema, std::string("malformed client message: ") + e.what());
  }
}

json cmd_vel_request(double stamp, double linear, double angular) {
  auto j = envelope("cmd_vel", stamp);
  j["linear"] = linear;
  j["angular"] = angular;
  return j;
}

json kill_request(double stamp, bool engage) {
  auto j = envelope("kill", stamp);
  j["engage"] = engage;
  return j;
}

json session_request(double stamp, SessionRequest::Action action) {
  auto j = envelope("session_control", stamp);
  j["action"] = action == SessionRequest::Action::Acquire ? "acquire" : "release";
  return j;
}

}  // namespace groundmap::wire
