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

#include "groundmap/scenario.hpp"

#include <yaml-cpp/yaml.h>

#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include "groundmap/errors.hpp"

namespace groundmap {

namespace {

/// A YAML node plus the dotted path and source used in error messages.
class Field {
 public:
  Field(YAML::Node node, std::string path, const std::string& source, int fallback_line)
      : node_(std::move(node)), path_(std::move(path)), source_(&source), line_(fallback_line) {
    if (node_.IsDefined() && node_.Mark().line >= 0) {
      line_ = node_.Mark().line + 1;
    }
  }

  [[noreturn]] void fail(const std::string& reason) const {
    throw Error(ErrorCode::Schema, *source_ + ":" + std::to_string(line_) + ": " + path_ + ": " + reason);
  }

  bool present() const { return node_.IsDefined() && !node_.IsNull(); }
  const YAML::Node& node() const { return node_; }

  Field operator[](const std::string& key) const {
    // A const lookup of a missing key yields an invalid node; substitute a null one.
    const bool has = node_.IsMap() && node_[key].IsDefined();
    return Field(has ? node_[key] : YAML::Node(), path_.empty() ? key : path_ + "." + key, *source_, line_);
  }
  Field at(std::size_t i) const {
    return Field(node_[i], path_ + "[" + std::to_string(i) + "]", *source_, line_);
  }
  std::size_t size() const { return node_.size(); }

  void expect_map(std::initializer_list<const char*> allowed) const {
    if (!node_.IsMap()) {
      fail("expected a mapping");
    }
    const std::set<std::string> keys(allowed.begin(), allowed.end());
    for (const auto& kv : node_) {
      const auto key = kv.first.as<std::string>();
      if (!keys.count(key)) {
        Field(kv.first, path_.empty() ? key : path_ + "." + key, *source_, line_).fail("unknown field");
      }
    }
  }

  void expect_sequence() const {
    if (!node_.IsSequence()) {
      fail("expected a list");
    }
  }

  double number() const {
    if (!present()) {
      fail("required field is missing");
    }
    if (!node_.IsScalar()) {
      fail("expected a number");
    }
    try {
      const double v = node_.as<double>();
      if (!std::isfinite(v)) {
        fail("must be finite");
      }
      return v;
    } catch (const YAML::Exception&) {
      fail("expected a number, got '" + node_.Scalar() + "'");
    }
  }

  double number_or(double fallback) const { return present() ? number() : fallback; }

  std::int64_t integer() const {
    const double v = number();
    if (std::floor(v) != v) {
      fail("expected an integer");
    }
    return static_cast<std::int64_t>(v);
  }

  std::int64_t integer_or(std::int64_t fallback) const { return present() ? integer() : fallback; }

  bool boolean_or(bool fallback) const {
    if (!present()) {
      return fallback;
    }
    try {
      return node_.as<bool>();
    } catch (const YAML::Exception&) {
      fail("expected true or false");
    }
  }

  std::string string() const {
    if (!node_.IsScalar()) {
      fail("expected a string");
    }
    return node_.Scalar();
  }

  Vec2 vec2() const {
    if (!node_.IsSequence() || node_.size() != 2) {
      fail("expected [x, y]");
    }
    return {at(0).number(), at(1).number()};
  }

 private:
  YAML::Node node_;
  std::string path_;
  const std::string* source_;
  int line_;
};

SegClass parse_class(const Field& f) {
  const auto name = f.string();
  if (name == "object") {
    return SegClass::Object;
  }
  if (name == "person") {
    return SegClass::Person;
  }
  f.fail("class must be 'object' or 'person'");
}

Obstacle parse_obstacle(const Field& f) {
  if (!f.node().IsMap()) {
    f.fail("expected a mapping");
  }
  const auto shape = f["shape"].string();
  Obstacle out;
  if (shape == "box") {
    f.expect_map({"shape", "min", "max", "height", "class"});
    out.footprint = BoxFootprint{f["min"].vec2(), f["max"].vec2()};
  } else if (shape == "polygon") {
    f.expect_map({"shape", "vertices", "height", "class"});
    const auto verts = f["vertices"];
    verts.expect_sequence();
    PolygonFootprint poly;
    for (std::size_t i = 0; i < verts.size(); ++i) {
      poly.vertices.push_back(verts.at(i).vec2());
    }
    out.footprint = std::move(poly);
  } else if (shape == "cylinder") {
    f.expect_map({"shape", "center", "radius", "height", "class"});
    out.footprint = CylinderFootprint{f["center"].vec2(), f["radius"].number()};
  } else {
    f["shape"].fail("shape must be box, polygon or cylinder");
  }
  out.height = f["height"].number();
  out.cls = f["class"].present() ? parse_class(f["class"]) : SegClass::Object;
  return out;
}

void parse_scene(const Field& f, Scenario& s) {
  f.expect_map({"ground_extent", "robot_start", "obstacles"});
  if (f["ground_extent"].present()) {
    const auto g = f["ground_extent"];
    g.expect_map({"min", "max"});
    s.scene.ground_extent = {g["min"].vec2(), g["max"].vec2()};
  }
  if (f["robot_start"].present()) {
    const auto r = f["robot_start"];
    r.expect_map({"x", "y", "yaw_deg"});
    s.scene.robot_start = Pose2{r["x"].number_or(0.0), r["y"].number_or(0.0),
                                normalize_angle(r["yaw_deg"].number_or(0.0) * kPi / 180.0)};
  }
  if (f["obstacles"].present()) {
    const auto obs = f["obstacles"];
    obs.expect_sequence();
    for (std::size_t i = 0; i < obs.size(); ++i) {
      s.scene.obstacles.push_back(parse_obstacle(obs.at(i)));
    }
  }
}

void parse_camera(const Field& f, CameraModel& c) {
  f.expect_map({"fx", "fy", "cx", "cy", "width", "height", "mount_height", "mount_pitch_deg",
                "mount_lateral_offset"});
  c.fx = f["fx"].number_or(c.fx);
  c.fy = f["fy"].number_or(c.fy);
  c.cx = f["cx"].number_or(c.cx);
  c.cy = f["cy"].number_or(c.cy);
  c.width = static_cast<int>(f["width"].integer_or(c.width));
  c.height = static_cast<int>(f["height"].integer_or(c.height));
  c.mount_height = f["mount_height"].number_or(c.mount_height);
  if (f["mount_pitch_deg"].present()) {
    c.mount_pitch = f["mount_pitch_deg"].number() * kPi / 180.0;
  }
  c.mount_lateral_offset = f["mount_lateral_offset"].number_or(c.mount_lateral_offset);
}

void parse_visual_odometry(const Field& f, VisualOdomConfig& vo) {
  f.expect_map({"scale_factor", "drift_rate", "init_frames", "init_translation", "loss_windows"});
  vo.scale_factor = f["scale_factor"].number_or(vo.scale_factor);
  vo.drift_rate = f["drift_rate"].number_or(vo.drift_rate);
  vo.init_frames = static_cast<int>(f["init_frames"].integer_or(vo.init_frames));
  vo.init_translation = f["init_translation"].number_or(vo.init_translation);
  if (f["loss_windows"].present()) {
    const auto windows = f["loss_windows"];
    windows.expect_sequence();
    for (std::size_t i = 0; i < windows.size(); ++i) {
      const Vec2 w = windows.at(i).vec2();
      vo.loss_windows.push_back({w.x(), w.y()});
    }
  }
}

void parse_commands(const Field& f, CommandScript& script) {
  f.expect_map({"repeat", "segments", "kill"});
  script.repeat = static_cast<int>(f["repeat"].integer_or(1));
  if (f["segments"].present()) {
    const auto segs = f["segments"];
    segs.expect_sequence();
    for (std::size_t i = 0; i < segs.size(); ++i) {
      const auto seg = segs.at(i);
      seg.expect_map({"v", "w", "duration"});
      script.segments.push_back({seg["v"].number_or(0.0), seg["w"].number_or(0.0), seg["duration"].number()});
    }
  }
  if (f["kill"].present()) {
    const auto kills = f["kill"];
    kills.expect_sequence();
    for (std::size_t i = 0; i < kills.size(); ++i) {
      const auto k = kills.at(i);
      k.expect_map({"at", "engage"});
      script.kill_events.push_back({k["at"].number(), k["engage"].boolean_or(true)});
    }
  }
}

[[noreturn]] void schema_fail(const std::string& what) { throw Error(ErrorCode::Schema, what); }

}  // namespace

std::int64_t Scenario::total_ticks() const { return std::llround(duration * sim_rate); }

void Scenario::validate() const {
  if (!(duration > 0.0)) {
    schema_fail("duration must be > 0");
  }
  if (sim_rate <= 0 || camera_rate <= 0 || pipeline_rate <= 0) {
    schema_fail("rates must be positive");
  }
  if (sim_rate % camera_rate != 0 || camera_rate % pipeline_rate != 0) {
    schema_fail("rates must divide each other: sim % camera == 0 and camera % pipeline == 0");
  }
  if (std::abs(duration * sim_rate - static_cast<double>(total_ticks())) > 1e-6) {
    schema_fail("duration must be a whole number of ticks");
  }
  try {
    scene.validate();
    camera.validate();
    visual_odometry.validate();
  } catch (const Error& e) {
    schema_fail(e.what());
  }
  if (!(wheel_noise.sigma_trans >= 0.0) || !(wheel_noise.sigma_rot >= 0.0)) {
    schema_fail("wheel noise sigmas must be >= 0");
  }
  if (!(limits.v_max > 0.0) || !(limits.w_max > 0.0)) {
    schema_fail("velocity limits must be > 0");
  }
  if (!(history_seconds >= 0.0) || !(teleop_timeout > 0.0)) {
    schema_fail("history_seconds must be >= 0 and teleop_timeout > 0");
  }
  if (!(map_resolution > 0.0) || snapshot_every <= 0) {
    schema_fail("mapping.resolution must be > 0 and snapshot_every >= 1");
  }
  if (!(boundary.max_range > 0.0) || !(boundary.grad_threshold >= 0.0) || !(boundary.footprint.width > 0.0) ||
      !(boundary.footprint.length > 0.0)) {
    schema_fail("boundary settings must be positive");
  }
  if (!(scale_period > 0.0) || !(association_gap >= 0.0)) {
    schema_fail("alignment.period must be > 0 and max_gap >= 0");
  }
  if (script.repeat < 0) {
    schema_fail("commands.repeat must be >= 0");
  }
  for (const auto& seg : script.segments) {
    if (!(seg.duration > 0.0)) {
      schema_fail("command segment durations must be > 0");
    }
  }
}

Scenario parse_scenario(const std::string& text, const std::string& source) {
  YAML::Node root;
  try {
    root = YAML::Load(text);
  } catch (const YAML::ParserException& e) {
    throw Error(ErrorCode::Schema, source + ":" + std::to_string(e.mark.line + 1) + ": " + e.msg);
  }
  const Field f(root, "", source, 1);
  f.expect_map({"name", "seed", "duration", "rates", "scene", "camera", "wheel_noise", "visual_odometry", "limits",
                "control", "boundary", "mapping", "alignment", "teleop", "commands"});

  Scenario s;
  s.source_text = text;
  if (f["name"].present()) {
    s.name = f["name"].string();
  }
  const auto seed = f["seed"].integer_or(0);
  if (seed < 0) {
    f["seed"].fail("must be >= 0");
  }
  s.seed = static_cast<std::uint64_t>(seed);
  s.duration = f["duration"].number();
  if (f["rates"].present()) {
    const auto r = f["rates"];
    r.expect_map({"sim", "camera", "pipeline"});
    s.sim_rate = static_cast<int>(r["sim"].integer_or(s.sim_rate));
    s.camera_rate = static_cast<int>(r["camera"].integer_or(s.camera_rate));
    s.pipeline_rate = static_cast<int>(r["pipeline"].integer_or(s.pipeline_rate));
  }
  if (f["scene"].present()) {
    parse_scene(f["scene"], s);
  }
  if (f["camera"].present()) {
    parse_camera(f["camera"], s.camera);
  }
  if (f["wheel_noise"].present()) {
    const auto n = f["wheel_noise"];
    n.expect_map({"sigma_trans", "sigma_rot"});
    s.wheel_noise = {n["sigma_trans"].number_or(0.0), n["sigma_rot"].number_or(0.0)};
  }
  if (f["visual_odometry"].present()) {
    parse_visual_odometry(f["visual_odometry"], s.visual_odometry);
  }
  if (f["limits"].present()) {
    const auto l = f["limits"];
    l.expect_map({"v_max", "w_max"});
    s.limits = {l["v_max"].number_or(s.limits.v_max), l["w_max"].number_or(s.limits.w_max)};
  }
  if (f["control"].present()) {
    const auto c = f["control"];
    c.expect_map({"history_seconds", "teleop_timeout"});
    s.history_seconds = c["history_seconds"].number_or(s.history_seconds);
    s.teleop_timeout = c["teleop_timeout"].number_or(s.teleop_timeout);
  }
  if (f["boundary"].present()) {
    const auto b = f["boundary"];
    b.expect_map({"max_range", "grad_threshold", "footprint"});
    s.boundary.max_range = b["max_range"].number_or(s.boundary.max_range);
    s.boundary.grad_threshold = b["grad_threshold"].number_or(s.boundary.grad_threshold);
    if (b["footprint"].present()) {
      const auto fp = b["footprint"];
      fp.expect_map({"width", "length"});
      s.boundary.footprint.width = fp["width"].number_or(s.boundary.footprint.width);
      s.boundary.footprint.length = fp["length"].number_or(s.boundary.footprint.length);
    }
  }
  if (f["mapping"].present()) {
    const auto m = f["mapping"];
    m.expect_map({"resolution", "snapshot_every"});
    s.map_resolution = m["resolution"].number_or(s.map_resolution);
    s.snapshot_every = static_cast<int>(m["snapshot_every"].integer_or(s.snapshot_every));
  }
  if (f["alignment"].present()) {
    const auto a = f["alignment"];
    a.expect_map({"period", "max_gap"});
    s.scale_period = a["period"].number_or(s.scale_period);
    s.association_gap = a["max_gap"].number_or(s.association_gap);
  }
  s.teleop = f["teleop"].boolean_or(false);
  if (f["commands"].present()) {
    parse_commands(f["commands"], s.script);
  }
  try {
    s.validate();
  } catch (const Error& e) {
    throw Error(ErrorCode::Schema, source + ": " + e.what());
  }
  return s;
}

Scenario load_scenario(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw Error(ErrorCode::Io, "cannot open scenario " + path);
  }
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_scenario(ss.str(), path);
}

}  // namespace groundmap
