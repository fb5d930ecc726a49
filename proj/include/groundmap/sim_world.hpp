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
#include <random>
#include <variant>
#include <vector>

#include "groundmap/geometry.hpp"
#include "groundmap/segmentation.hpp"

namespace groundmap {

/// Pinhole camera rigidly mounted on the robot, looking forward and pitched down.
struct CameraModel {
  double fx = 256.0;
  double fy = 256.0;
  double cx = 256.0;
  double cy = 128.0;
  int width = 512;
  int height = 256;
  double mount_height = 0.5;           // meters above ground
  double mount_pitch = 15.0 * kPi / 180.0;  // radians, downward positive
  double mount_lateral_offset = 0.0;   // meters, positive to the left of the centerline

  /// Throws InvalidInput when an invariant is violated.
  void validate() const;

  /// Ray direction for pixel (u, v) in the robot frame (x forward, y left, z up).
  Vec3 ray_direction(double u, double v) const;
  Vec3 position() const { return {0.0, mount_lateral_offset, mount_height}; }
  /// Image row of the horizon for a level ground plane.
  double horizon_row() const;
};

struct BoxFootprint {
  Vec2 min;
  Vec2 max;
};

/// Convex polygon, any winding.
struct PolygonFootprint {
  std::vector<Vec2> vertices;
};

struct CylinderFootprint {
  Vec2 center;
  double radius = 0.0;
};

using Footprint = std::variant<BoxFootprint, PolygonFootprint, CylinderFootprint>;

/// Vertical prism standing on the ground plane.
struct Obstacle {
  Footprint footprint;
  double height = 1.0;
  SegClass cls = SegClass::Object;
};

struct GroundExtent {
  Vec2 min{-10.0, -10.0};
  Vec2 max{10.0, 10.0};

  bool contains(const Vec2& p) const {
    return p.x() >= min.x() && p.x() <= max.x() && p.y() >= min.y() && p.y() <= max.y();
  }
};

struct Scene {
  GroundExtent ground_extent;
  std::vector<Obstacle> obstacles;
  Pose2 robot_start;

  void validate() const;
};

/// Counter-clockwise outline of an obstacle footprint; cylinders are tessellated.
std::vector<Vec2> footprint_outline(const Footprint& footprint, int cylinder_segments = 32);

/// Distance along `dir` from `origin` to the first point of the prism, if any (t > 0).
std::optional<double> intersect_ray(const Obstacle& obstacle, const Vec3& origin, const Vec3& dir);

struct VelocityLimits {
  double v_max = 1.0;
  double w_max = 1.0;
};

struct VelocityCommand {
  double v = 0.0;
  double w = 0.0;
};

struct DynamicsStep {
  Pose2 pose;
  bool clamped = false;
};

/// Exact unicycle integration over `dt` (arc formula; straight line for |w| < 1e-9).
/// Commands beyond `limits` are clamped and flagged.
DynamicsStep step_dynamics(const Pose2& pose, VelocityCommand cmd, double dt,
                           const VelocityLimits& limits = {});

/// Ray-casts one label per pixel: nearest obstacle -> its class; ground hit
/// inside the extent -> road; otherwise sky. Non-finite geometry -> unlabeled.
SegMask render_segmentation(const Scene& scene, const Pose2& robot_pose, const CameraModel& camera);

struct WheelNoise {
  double sigma_trans = 0.0;
  double sigma_rot = 0.0;
};

/// True incremental motion perturbed by zero-mean Gaussian noise.
Pose2 wheel_odometry(const Pose2& true_delta, const WheelNoise& noise, std::mt19937_64& rng);

struct LossWindow {
  double start = 0.0;
  double end = 0.0;
};

struct VisualOdomConfig {
  double scale_factor = 1.0;   // unknown monocular scale applied to positions
  double drift_rate = 0.0;     // meters of lateral drift per meter traveled
  std::vector<LossWindow> loss_windows;
  int init_frames = 10;
  double init_translation = 0.2;

  void validate() const;
};

enum class SlamEvent : std::uint8_t {
  ImageArrived,
  InitSucceeded,
  LossEvent,
  RelocalizedEvent,
  Reset,
};

std::string_view to_string(SlamEvent e);

struct VisualPose {
  Vec3 position = Vec3::Zero();  // unscaled units, frame anchored at the start pose
  double yaw = 0.0;
};

struct VisualObservation {
  std::optional<VisualPose> pose;
  std::vector<SlamEvent> events;
};

/// Stand-in for a monocular SLAM front end: emits scaled-by-lambda, drifting
/// poses once initialized and outside loss windows, plus lifecycle events.
class VisualOdometrySim {
 public:
  VisualOdometrySim(VisualOdomConfig config, const Pose2& start);

  /// Called once per camera frame with the ground-truth pose.
  VisualObservation observe(double stamp, const Pose2& true_pose);

  bool initialized() const { return initialized_; }
  /// Raw pose before gating (used by evaluation).
  VisualPose raw_pose(const Pose2& true_pose) const;

 private:
  bool in_loss(double stamp) const;

  VisualOdomConfig config_;
  Pose2 start_;
  std::optional<Pose2> last_true_;
  std::optional<Vec2> first_frame_position_;
  double distance_ = 0.0;
  int frames_ = 0;
  bool initialized_ = false;
  bool lost_ = false;
};

}  // namespace groundmap
