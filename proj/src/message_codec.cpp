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

#include "groundmap/message_codec.hpp"

#include <map>

#include "groundmap/errors.hpp"

namespace groundmap {

using nlohmann::json;

namespace {

template <typename T>
constexpr std::size_t index_of() {
  return PipelineBus::variant_index<T>();
}

const std::map<std::string, std::size_t, std::less<>>& topic_types() {
  static const std::map<std::string, std::size_t, std::less<>> table = {
      {topics::kWheelOdom, index_of<WheelOdomMsg>()},     {topics::kVisualOdom, index_of<VisualOdomMsg>()},
      {topics::kScaledOdom, index_of<ScaledOdomMsg>()},   {topics::kSlamEvent, index_of<SlamEventMsg>()},
      {topics::kSlamState, index_of<TrackingStateMsg>()}, {topics::kKeyframe, index_of<KeyframeMsg>()},
      {topics::kCameraFrame, index_of<CameraFrameMsg>()}, {topics::kCameraMask, index_of<MaskMsg>()},
      {topics::kBoundary, index_of<BoundaryMsg>()},       {topics::kLocalMap, index_of<LocalMapMsg>()},
      {topics::kGlobalMap, index_of<GlobalMapMsg>()},     {topics::kCmdVel, index_of<CmdVelMsg>()},
      {topics::kKill, index_of<KillMsg>()},               {topics::kSimCmd, index_of<SimCmdMsg>()},
      {topics::kTruth, index_of<TruthMsg>()},
  };
  return table;
}

json pose_json(const Pose2& p) { return json::array({p.x, p.y, p.yaw}); }
Pose2 pose_from(const json& j) { return {j.at(0).get<double>(), j.at(1).get<double>(), j.at(2).get<double>()}; }

json vec2_json(const Vec2& v) { return json::array({v.x(), v.y()}); }
Vec2 vec2_from(const json& j) { return {j.at(0).get<double>(), j.at(1).get<double>()}; }

json mask_json(const std::shared_ptr<const SegMask>& mask) {
  if (!mask) {
    return nullptr;
  }
  return {{"w", mask->width()}, {"h", mask->height()}, {"rle", run_length_encode(*mask)}};
}

std::shared_ptr<const SegMask> mask_from(const json& j) {
  if (j.is_null()) {
    return nullptr;
  }
  return std::make_shared<const SegMask>(
      run_length_decode(j.at("w").get<int>(), j.at("h").get<int>(), j.at("rle").get<std::vector<std::uint32_t>>()));
}

json cells_json(const std::vector<Occupancy>& cells) {
  json runs = json::array();
  std::size_t i = 0;
  while (i < cells.size()) {
    std::size_t j = i;
    while (j < cells.size() && cells[j] == cells[i]) {
      ++j;
    }
    runs.push_back(static_cast<int>(cells[i]));
    runs.push_back(j - i);
    i = j;
  }
  return runs;
}

std::vector<Occupancy> cells_from(const json& runs, std::size_t expected) {
  std::vector<Occupancy> out;
  out.reserve(expected);
  if (runs.size() % 2 != 0) {
    throw Error(ErrorCode::CorruptLog, "odd run-length array");
  }
  for (std::size_t i = 0; i < runs.size(); i += 2) {
    const int state = runs[i].get<int>();
    const auto count = runs[i + 1].get<std::size_t>();
    if (state < 0 || state > 2 || out.size() + count > expected) {
      throw Error(ErrorCode::CorruptLog, "bad cell run");
    }
    out.insert(out.end(), count, static_cast<Occupancy>(state));
  }
  if (out.size() != expected) {
    throw Error(ErrorCode::CorruptLog, "cell runs do not cover the grid");
  }
  return out;
}

json patch_json(const GridPatch& p) {
  return {{"epoch", p.epoch}, {"snapshot", p.snapshot}, {"ox", p.origin_x}, {"oy", p.origin_y},
          {"w", p.width},     {"h", p.height},          {"cells", cells_json(p.cells)}};
}

GridPatch patch_from(const json& j) {
  GridPatch p;
  p.epoch = j.at("epoch").get<std::uint64_t>();
  p.snapshot = j.at("snapshot").get<bool>();
  p.origin_x = j.at("ox").get<std::int32_t>();
  p.origin_y = j.at("oy").get<std::int32_t>();
  p.width = j.at("w").get<std::uint32_t>();
  p.height = j.at("h").get<std::uint32_t>();
  p.cells = cells_from(j.at("cells"), static_cast<std::size_t>(p.width) * p.height);
  return p;
}

json homography_json(const Homography& h) {
  const auto& m = h.centered_matrix();
  json g = json::array();
  for (int r = 0; r < 3; ++r) {
    for (int c = 0; c < 3; ++c) {
      g.push_back(m(r, c));
    }
  }
  return {{"g", g}, {"origin", vec2_json(h.pixel_origin())}, {"w", h.image_width()}, {"h", h.image_height()}};
}

Homography homography_from(const json& j) {
  Eigen::Matrix3d m;
  const auto& g = j.at("g");
  for (int r = 0; r < 3; ++r) {
    for (int c = 0; c < 3; ++c) {
      m(r, c) = g.at(static_cast<std::size_t>(r * 3 + c)).get<double>();
    }
  }
  return Homography(m, vec2_from(j.at("origin")), j.at("w").get<int>(), j.at("h").get<int>());
}

json boundary_json(const GroundBoundary& b) {
  json entries = json::array();
  for (const auto& e : b.entries) {
    json item = json::array({static_cast<int>(e.kind), e.row ? *e.row : -1, static_cast<int>(e.cls)});
    if (e.point) {
      item.push_back(e.point->x());
      item.push_back(e.point->y());
    }
    entries.push_back(std::move(item));
  }
  json out = {{"max_range", b.max_range},
              {"footprint", {b.footprint.width, b.footprint.length}},
              {"entries", std::move(entries)}};
  out["homography"] = b.homography ? homography_json(*b.homography) : json(nullptr);
  return out;
}

GroundBoundary boundary_from(const json& j) {
  GroundBoundary b;
  b.max_range = j.at("max_range").get<double>();
  b.footprint.width = j.at("footprint").at(0).get<double>();
  b.footprint.length = j.at("footprint").at(1).get<double>();
  for (const auto& item : j.at("entries")) {
    GroundBoundaryEntry e;
    const int kind = item.at(0).get<int>();
    if (kind < 0 || kind > 2) {
      throw Error(ErrorCode::CorruptLog, "bad boundary entry kind");
    }
    e.kind = static_cast<GroundBoundaryEntry::Kind>(kind);
    const int row = item.at(1).get<int>();
    if (row >= 0) {
      e.row = row;
    }
    e.cls = static_cast<SegClass>(item.at(2).get<int>());
    if (item.size() == 5) {
      e.point = Vec2(item.at(3).get<double>(), item.at(4).get<double>());
    }
    b.entries.push_back(e);
  }
  if (!j.at("homography").is_null()) {
    b.homography = homography_from(j.at("homography"));
    b.rays = column_rays(*b.homography, b.max_range);
  }
  return b;
}

json local_map_json(const LocalMap& m) {
  return {{"res", m.resolution()},
          {"footprint", {m.footprint().width, m.footprint().length}},
          {"cells", cells_json(m.cells())}};
}

LocalMap local_map_from(const json& j) {
  LocalMap m(j.at("res").get<double>(),
             LocalFootprint{j.at("footprint").at(0).get<double>(), j.at("footprint").at(1).get<double>()});
  const auto cells = cells_from(j.at("cells"), m.cell_count());
  for (int row = 0; row < m.rows(); ++row) {
    for (int col = 0; col < m.cols(); ++col) {
      m.set(col, row, cells[static_cast<std::size_t>(row) * m.cols() + col]);
    }
  }
  return m;
}

json cmd_json(const CmdVel& c) {
  return {{"v", c.v}, {"w", c.w}, {"stamp", c.stamp}, {"source", std::string(to_string(c.source))}};
}

CmdVel cmd_from(const json& j) {
  CmdVel c;
  c.v = j.at("v").get<double>();
  c.w = j.at("w").get<double>();
  c.stamp = j.at("stamp").get<double>();
  const auto src = cmd_source_from_string(j.at("source").get<std::string>());
  if (!src) {
    throw Error(ErrorCode::CorruptLog, "unknown command source");
  }
  c.source = *src;
  return c;
}

struct ToJson {
  json operator()(const WheelOdomMsg& m) const { return {{"pose", pose_json(m.pose)}, {"delta", pose_json(m.delta)}}; }
  json operator()(const VisualOdomMsg& m) const {
    const auto& p = m.pose.position;
    return {{"p", {p.x(), p.y(), p.z()}}, {"yaw", m.pose.yaw}};
  }
  json operator()(const SlamEventMsg& m) const { return {{"event", std::string(to_string(m.event))}}; }
  json operator()(const TrackingStateMsg& m) const { return {{"state", std::string(to_string(m.state))}}; }
  json operator()(const ScaledOdomMsg& m) const {
    return {{"pose", pose_json(m.pose)}, {"scale_valid", m.scale_valid}, {"scale", m.scale}};
  }
  json operator()(const CameraFrameMsg& m) const { return {{"frame", m.frame}}; }
  json operator()(const MaskMsg& m) const { return {{"frame", m.frame}, {"mask", mask_json(m.mask)}}; }
  json operator()(const KeyframeMsg& m) const {
    return {{"frame", m.frame}, {"mask", mask_json(m.mask)}, {"pose", pose_json(m.pose)}, {"scale_valid", m.scale_valid}};
  }
  json operator()(const BoundaryMsg& m) const {
    return {{"frame", m.frame},
            {"boundary", boundary_json(m.boundary)},
            {"pose", pose_json(m.pose)},
            {"scale_valid", m.scale_valid}};
  }
  json operator()(const LocalMapMsg& m) const {
    return {{"frame", m.frame}, {"map", local_map_json(m.map)}, {"pose", pose_json(m.pose)}, {"fused", m.fused}};
  }
  json operator()(const GlobalMapMsg& m) const {
    return {{"patch", patch_json(m.patch)},
            {"snapshot", m.snapshot ? patch_json(*m.snapshot) : json(nullptr)},
            {"w", m.width},
            {"h", m.height}};
  }
  json operator()(const CmdVelMsg& m) const { return {{"cmd", cmd_json(m.cmd)}}; }
  json operator()(const KillMsg& m) const { return {{"engage", m.engage}}; }
  json operator()(const SimCmdMsg& m) const {
    return {{"cmd", cmd_json(m.forwarded.cmd)}, {"clamped", m.forwarded.clamped}, {"killed", m.forwarded.killed}};
  }
  json operator()(const TruthMsg& m) const {
    return {{"pose", pose_json(m.pose)}, {"v", m.velocity.v}, {"w", m.velocity.w}, {"clamped", m.clamped}};
  }
};

SlamEvent event_from(const std::string& s) {
  for (auto e : {SlamEvent::ImageArrived, SlamEvent::InitSucceeded, SlamEvent::LossEvent, SlamEvent::RelocalizedEvent,
                 SlamEvent::Reset}) {
    if (to_string(e) == s) {
      return e;
    }
  }
  throw Error(ErrorCode::CorruptLog, "unknown slam event " + s);
}

Message decode(std::size_t type, const json& j) {
  switch (type) {
    case index_of<WheelOdomMsg>(): return WheelOdomMsg{pose_from(j.at("pose")), pose_from(j.at("delta"))};
    case index_of<VisualOdomMsg>(): {
      const auto& p = j.at("p");
      return VisualOdomMsg{{Vec3(p.at(0).get<double>(), p.at(1).get<double>(), p.at(2).get<double>()),
                            j.at("yaw").get<double>()}};
    }
    case index_of<SlamEventMsg>(): return SlamEventMsg{event_from(j.at("event").get<std::string>())};
    case index_of<TrackingStateMsg>(): {
      const auto s = tracking_state_from_string(j.at("state").get<std::string>());
      if (!s) {
        throw Error(ErrorCode::CorruptLog, "unknown tracking state");
      }
      return TrackingStateMsg{*s};
    }
    case index_of<ScaledOdomMsg>():
      return ScaledOdomMsg{pose_from(j.at("pose")), j.at("scale_valid").get<bool>(), j.at("scale").get<double>()};
    case index_of<CameraFrameMsg>(): return CameraFrameMsg{j.at("frame").get<std::uint64_t>()};
    case index_of<MaskMsg>(): return MaskMsg{j.at("frame").get<std::uint64_t>(), mask_from(j.at("mask"))};
    case index_of<KeyframeMsg>():
      return KeyframeMsg{j.at("frame").get<std::uint64_t>(), mask_from(j.at("mask")), pose_from(j.at("pose")),
                         j.at("scale_valid").get<bool>()};
    case index_of<BoundaryMsg>():
      return BoundaryMsg{j.at("frame").get<std::uint64_t>(), boundary_from(j.at("boundary")), pose_from(j.at("pose")),
                         j.at("scale_valid").get<bool>()};
    case index_of<LocalMapMsg>():
      return LocalMapMsg{j.at("frame").get<std::uint64_t>(), local_map_from(j.at("map")), pose_from(j.at("pose")),
                         j.at("fused").get<bool>()};
    case index_of<GlobalMapMsg>(): {
      GlobalMapMsg m;
      m.patch = patch_from(j.at("patch"));
      if (!j.at("snapshot").is_null()) {
        m.snapshot = patch_from(j.at("snapshot"));
      }
      m.width = j.at("w").get<int>();
      m.height = j.at("h").get<int>();
      return m;
    }
    case index_of<CmdVelMsg>(): return CmdVelMsg{cmd_from(j.at("cmd"))};
    case index_of<KillMsg>(): return KillMsg{j.at("engage").get<bool>()};
    case index_of<SimCmdMsg>():
      return SimCmdMsg{ForwardedCmd{cmd_from(j.at("cmd")), j.at("clamped").get<bool>(), j.at("killed").get<bool>()}};
    case index_of<TruthMsg>():
      return TruthMsg{pose_from(j.at("pose")), {j.at("v").get<double>(), j.at("w").get<double>()},
                      j.at("clamped").get<bool>()};
    default: break;
  }
  throw Error(ErrorCode::CorruptLog, "unsupported message type");
}

}  // namespace

json message_to_json(const Message& message) { return std::visit(ToJson{}, message); }

Message message_from_json(std::string_view topic, const json& payload) {
  const auto it = topic_types().find(topic);
  if (it == topic_types().end()) {
    throw Error(ErrorCode::CorruptLog, "unknown topic " + std::string(topic));
  }
  try {
    return decode(it->second, payload);
  } catch (const json::exception& e) {
    throw Error(ErrorCode::CorruptLog, "bad payload for " + std::string(topic) + ": " + e.what());
  } catch (const Error& e) {
    if (e.code() == ErrorCode::CorruptLog) {
      throw;
    }
    throw Error(ErrorCode::CorruptLog, "bad payload for " + std::string(topic) + ": " + e.what());
  }
}

std::string encode_envelope(const PipelineEnvelope& envelope) {
  const auto& h = envelope.header;
  json line = {{"topic", h.topic}, {"pub", h.publisher}, {"seq", h.seq},
               {"gseq", h.global_seq}, {"stamp", h.stamp}, {"payload", message_to_json(*envelope.payload)}};
  return line.dump();
}

PipelineEnvelope decode_envelope(std::string_view line) {
  json j;
  try {
    j = json::parse(line);
  } catch (const json::parse_error& e) {
    throw Error(ErrorCode::CorruptLog, std::string("unparsable line: ") + e.what());
  }
  PipelineEnvelope env;
  try {
    env.header.topic = j.at("topic").get<std::string>();
    env.header.publisher = j.at("pub").get<std::string>();
    env.header.seq = j.at("seq").get<std::uint64_t>();
    env.header.global_seq = j.at("gseq").get<std::uint64_t>();
    env.header.stamp = j.at("stamp").get<double>();
  } catch (const json::exception& e) {
    throw Error(ErrorCode::CorruptLog, std::string("bad envelope header: ") + e.what());
  }
  if (!j.contains("payload")) {
    throw Error(ErrorCode::CorruptLog, "envelope has no payload");
  }
  env.payload = std::make_shared<const Message>(message_from_json(env.header.topic, j["payload"]));
  return env;
}

}  // namespace groundmap
