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

#include "groundmap/sim_world.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "groundmap/errors.hpp"

namespace groundmap {

void CameraModel::validate() const {
  if (!(fx > 0.0) || !(fy > 0.0)) {
    throw Error(ErrorCode::InvalidInput, "camera focal lengths must be > 0");
  }
  if (width <= 0 || height <= 0) {
    throw Error(ErrorCode::InvalidInput, "camera image size must be positive");
  }
  if (!(cx >= 0.0 && cx < width) || !(cy >= 0.0 && cy < height)) {
    throw Error(ErrorCode::InvalidInput, "camera principal point outside the image");
  }
  if (!(mount_height > 0.0)) {
    throw Error(ErrorCode::InvalidInput, "camera must be mounted above the ground");
  }
  if (!std::isfinite(mount_pitch) || !std::isfinite(mount_lateral_offset)) {
    throw Error(ErrorCode::InvalidInput, "camera mount must be finite");
  }
}

Vec3 CameraModel::ray_direction(double u, double v) const {
  const double a = (u - cx) / fx;
  const double b = (v - cy) / fy;
  const double c = std::cos(mount_pitch);
  const double s = std::sin(mount_pitch);
  return {c - b * s, -a, -s - b * c};
}

double CameraModel::horizon_row() const { return cy - fy * std::tan(mount_pitch); }

void Scene::validate() const {
  if (!(ground_extent.min.x() < ground_extent.max.x()) ||
      !(ground_extent.min.y() < ground_extent.max.y())) {
    throw Error(ErrorCode::InvalidInput, "ground extent is empty");
  }
  for (std::size_t i = 0; i < obstacles.size(); ++i) {
    const auto& o = obstacles[i];
    const std::string tag = "obstacle " + std::to_string(i);
    if (!(o.height > 0.0)) {
      throw Error(ErrorCode::InvalidInput, tag + ": height must be > 0");
    }
    if (o.cls != SegClass::Object && o.cls != SegClass::Person) {
      throw Error(ErrorCode::InvalidInput, tag + ": class must be object or person");
    }
    if (const auto* cyl = std::get_if<CylinderFootprint>(&o.footprint); cyl && !(cyl->radius > 0.0)) {
      throw Error(ErrorCode::InvalidInput, tag + ": radius must be > 0");
    }
    const auto outline = footprint_outline(o.footprint);
    if (outline.size() < 3) {
      throw Error(ErrorCode::InvalidInput, tag + ": footprint needs at least 3 vertices");
    }
    for (const auto& p : outline) {
      if (!ground_extent.contains(p)) {
        throw Error(ErrorCode::InvalidInput, tag + ": footprint leaves the ground extent");
      }
    }
  }
}

namespace {

double signed_area(const std::vector<Vec2>& poly) {
  double area = 0.0;
  for (std::size_t i = 0; i < poly.size(); ++i) {
    const auto& a = poly[i];
    const auto& b = poly[(i + 1) % poly.size()];
    area += a.x() * b.y() - b.x() * a.y();
  }
  return 0.5 * area;
}

std::optional<double> intersect_convex_prism(const std::vector<Vec2>& ccw, double height,
                                             const Vec3& o, const Vec3& d) {
  constexpr double kEps = 1e-12;
  double t_min = 1e-9;
  double t_max = std::numeric_limits<double>::infinity();
  if (std::abs(d.z()) < kEps) {
    if (o.z() < 0.0 || o.z() > height) {
      return std::nullopt;
    }
  } else {
    double t0 = -o.z() / d.z();
    double t1 = (height - o.z()) / d.z();
    if (t0 > t1) {
      std::swap(t0, t1);
    }
    t_min = std::max(t_min, t0);
    t_max = std::min(t_max, t1);
  }
  for (std::size_t i = 0; i < ccw.size() && t_min <= t_max; ++i) {
    const Vec2& p = ccw[i];
    const Vec2 e = ccw[(i + 1) % ccw.size()] - p;
    const Vec2 n(e.y(), -e.x());  // outward for counter-clockwise winding
    const double num = n.x() * (o.x() - p.x()) + n.y() * (o.y() - p.y());
    const double den = n.x() * d.x() + n.y() * d.y();
    if (std::abs(den) < kEps) {
      if (num > 0.0) {
        return std::nullopt;
      }
      continue;
    }
    const double t = -num / den;
    if (den < 0.0) {
      t_min = std::max(t_min, t);
    } else {
      t_max = std::min(t_max, t);
    }
  }
  if (t_min <= t_max) {
    return t_min;
  }
  return std::nullopt;
}

std::optional<double> intersect_cylinder(const CylinderFootprint& cyl, double height, const Vec3& o,
                                         const Vec3& d) {
  constexpr double kEps = 1e-12;
  double t_min = 1e-9;
  double t_max = std::numeric_limits<double>::infinity();
  if (std::abs(d.z()) < kEps) {
    if (o.z() < 0.0 || o.z() > height) {
      return std::nullopt;
    }
  } else {
    double t0 = -o.z() / d.z();
    double t1 = (height - o.z()) / d.z();
    if (t0 > t1) {
      std::swap(t0, t1);
    }
    t_min = std::max(t_min, t0);
    t_max = std::min(t_max, t1);
  }
  const double ox = o.x() - cyl.center.x();
  const double oy = o.y() - cyl.center.y();
  const double a = d.x() * d.x() + d.y() * d.y();
  const double b = 2.0 * (d.x() * ox + d.y() * oy);
  const double c = ox * ox + oy * oy - cyl.radius * cyl.radius;
  if (a < kEps) {
    if (c > 0.0) {
      return std::nullopt;
    }
  } else {
    const double disc = b * b - 4.0 * a * c;
    if (disc < 0.0) {
      return std::nullopt;
    }
    const double sq = std::sqrt(disc);
    t_min = std::max(t_min, (-b - sq) / (2.0 * a));
    t_max = std::min(t_max, (-b + sq) / (2.0 * a));
  }
  if (t_min <= t_max) {
    return t_min;
  }
  return std::nullopt;
}

}  // namespace

std::vector<Vec2> footprint_outline(const Footprint& footprint, int cylinder_segments) {
  std::vector<Vec2> out;
  if (const auto* box = std::get_if<BoxFootprint>(&footprint)) {
    out = {box->min, {box->max.x(), box->min.y()}, box->max, {box->min.x(), box->max.y()}};
  } else if (const auto* poly = std::get_if<PolygonFootprint>(&footprint)) {
    out = poly->vertices;
  } else {
    const auto& cyl = std::get<CylinderFootprint>(footprint);
    for (int i = 0; i < cylinder_segments; ++i) {
      const double a = 2.0 * kPi * i / cylinder_segments;
      out.emplace_back(cyl.center.x() + cyl.radius * std::cos(a), cyl.center.y() + cyl.radius * std::sin(a));
    }
  }
  if (out.size() >= 3 && signed_area(out) < 0.0) {
    std::reverse(out.begin(), out.end());
  }
  return out;
}

std::optional<double> intersect_ray(const Obstacle& obstacle, const Vec3& origin, const Vec3& dir) {
  if (const auto* cyl = std::get_if<CylinderFootprint>(&obstacle.footprint)) {
    return intersect_cylinder(*cyl, obstacle.height, origin, dir);
  }
  return intersect_convex_prism(footprint_outline(obstacle.footprint), obstacle.height, origin, dir);
}

DynamicsStep step_dynamics(const Pose2& pose, VelocityCommand cmd, double dt, const VelocityLimits& limits) {
  if (!(dt > 0.0)) {
    throw Error(ErrorCode::InvalidInput, "step_dynamics: dt must be > 0");
  }
  DynamicsStep out;
  if (!std::isfinite(cmd.v) || !std::isfinite(cmd.w)) {
    cmd = {};
    out.clamped = true;
  }
  if (std::abs(cmd.v) > limits.v_max) {
    cmd.v = std::copysign(limits.v_max, cmd.v);
    out.clamped = true;
  }
  if (std::abs(cmd.w) > limits.w_max) {
    cmd.w = std::copysign(limits.w_max, cmd.w);
    out.clamped = true;
  }
  Pose2 next = pose;
  if (std::abs(cmd.w) < 1e-9) {
    next.x += cmd.v * dt * std::cos(pose.yaw);
    next.y += cmd.v * dt * std::sin(pose.yaw);
    next.yaw = normalize_angle(pose.yaw + cmd.w * dt);
  } else {
    const double radius = cmd.v / cmd.w;
    const double yaw_end = pose.yaw + cmd.w * dt;
    next.x += radius * (std::sin(yaw_end) - std::sin(pose.yaw));
    next.y -= radius * (std::cos(yaw_end) - std::cos(pose.yaw));
    next.yaw = normalize_angle(yaw_end);
  }
  out.pose = next;
  return out;
}

SegMask render_segmentation(const Scene& scene, const Pose2& robot_pose, const CameraModel& camera) {
  SegMask mask(camera.width, camera.height, SegClass::Unlabeled);
  const double cy_ = std::cos(robot_pose.yaw);
  const double sy = std::sin(robot_pose.yaw);
  const Vec2 cam_xy = robot_pose.transform_point({0.0, camera.mount_lateral_offset});
  const Vec3 origin(cam_xy.x(), cam_xy.y(), camera.mount_height);
  const Vec2 heading(cy_, sy);

  struct Candidate {
    const Obstacle* obstacle;
    std::vector<Vec2> outline;
    Vec2 center;
    double radius;
  };
  std::vector<Candidate> candidates;
  for (const auto& obstacle : scene.obstacles) {
    Candidate c{&obstacle, footprint_outline(obstacle.footprint), Vec2::Zero(), 0.0};
    for (const auto& p : c.outline) {
      c.center += p;
    }
    c.center /= static_cast<double>(c.outline.size());
    for (const auto& p : c.outline) {
      c.radius = std::max(c.radius, (p - c.center).norm());
    }
    // The camera looks forward; anything entirely behind it is never hit.
    if ((c.center - cam_xy).dot(heading) < -c.radius) {
      continue;
    }
    candidates.push_back(std::move(c));
  }

  for (int v = 0; v < camera.height; ++v) {
    for (int u = 0; u < camera.width; ++u) {
      const Vec3 d_robot = camera.ray_direction(u, v);
      const Vec3 d(cy_ * d_robot.x() - sy * d_robot.y(), sy * d_robot.x() + cy_ * d_robot.y(), d_robot.z());
      double best = std::numeric_limits<double>::infinity();
      SegClass label = SegClass::Sky;
      if (d.z() < 0.0) {
        const double t = -origin.z() / d.z();
        const Vec2 hit(origin.x() + t * d.x(), origin.y() + t * d.y());
        if (std::isfinite(t) && scene.ground_extent.contains(hit)) {
          best = t;
          label = SegClass::Road;
        }
      }
      const double dxy2 = d.x() * d.x() + d.y() * d.y();
      for (const auto& c : candidates) {
        // Cheap reject: the ray's ground track must pass within the bounding circle.
        const double rx = c.center.x() - origin.x();
        const double ry = c.center.y() - origin.y();
        const double cross = rx * d.y() - ry * d.x();
        if (cross * cross > c.radius * c.radius * dxy2 * (1.0 + 1e-9)) {
          continue;
        }
        std::optional<double> t;
        if (const auto* cyl = std::get_if<CylinderFootprint>(&c.obstacle->footprint)) {
          t = intersect_cylinder(*cyl, c.obstacle->height, origin, d);
        } else {
          t = intersect_convex_prism(c.outline, c.obstacle->height, origin, d);
        }
        if (t && *t < best) {
          best = *t;
          label = c.obstacle->cls;
        }
      }
      if (!d.allFinite()) {
        label = SegClass::Unlabeled;
      }
      mask.set(u, v, label);
    }
  }
  return mask;
}

Pose2 wheel_odometry(const Pose2& true_delta, const WheelNoise& noise, std::mt19937_64& rng) {
  if (noise.sigma_trans < 0.0 || noise.sigma_rot < 0.0) {
    throw Error(ErrorCode::InvalidInput, "wheel noise sigma must be >= 0");
  }
  Pose2 out = true_delta;
  if (noise.sigma_trans > 0.0) {
    std::normal_distribution<double> n(0.0, noise.sigma_trans);
    out.x += n(rng);
    out.y += n(rng);
  }
  if (noise.sigma_rot > 0.0) {
    std::normal_distribution<double> n(0.0, noise.sigma_rot);
    out.yaw = normalize_angle(out.yaw + n(rng));
  }
  return out;
}

void VisualOdomConfig::validate() const {
  if (!(scale_factor > 0.0) || !std::isfinite(scale_factor)) {
    throw Error(ErrorCode::InvalidInput, "visual odometry scale factor must be > 0");
  }
  if (!(drift_rate >= 0.0)) {
    throw Error(ErrorCode::InvalidInput, "visual odometry drift rate must be >= 0");
  }
  for (std::size_t i = 0; i < loss_windows.size(); ++i) {
    const auto& w = loss_windows[i];
    if (!(w.start < w.end)) {
      throw Error(ErrorCode::InvalidInput, "loss window must have start < end");
    }
    if (i > 0 && !(loss_windows[i - 1].end <= w.start)) {
      throw Error(ErrorCode::InvalidInput, "loss windows must be ordered and non-overlapping");
    }
  }
  if (init_frames < 0 || init_translation < 0.0) {
    throw Error(ErrorCode::InvalidInput, "initialization thresholds must be >= 0");
  }
}

std::string_view to_string(SlamEvent e) {
  switch (e) {
    case SlamEvent::ImageArrived: return "ImageArrived";
    case SlamEvent::InitSucceeded: return "InitSucceeded";
    case SlamEvent::LossEvent: return "LossEvent";
    case SlamEvent::RelocalizedEvent: return "RelocalizedEvent";
    case SlamEvent::Reset: return "Reset";
  }
  return "invalid";
}

VisualOdometrySim::VisualOdometrySim(VisualOdomConfig config, const Pose2& start)
    : config_(std::move(config)), start_(start) {
  config_.validate();
}

bool VisualOdometrySim::in_loss(double stamp) const {
  return std::any_of(config_.loss_windows.begin(), config_.loss_windows.end(),
                     [&](const LossWindow& w) { return stamp >= w.start && stamp < w.end; });
}

VisualPose VisualOdometrySim::raw_pose(const Pose2& true_pose) const {
  const Pose2 rel = between(start_, true_pose);
  VisualPose out;
  out.position = {config_.scale_factor * rel.x,
                  config_.scale_factor * rel.y + config_.drift_rate * distance_, 0.0};
  out.yaw = rel.yaw;
  return out;
}

VisualObservation VisualOdometrySim::observe(double stamp, const Pose2& true_pose) {
  VisualObservation out;
  if (last_true_) {
    distance_ += (true_pose.position() - last_true_->position()).norm();
  }
  last_true_ = true_pose;
  ++frames_;

  const bool lost_now = in_loss(stamp);
  if (lost_now && !lost_) {
    out.events.push_back(SlamEvent::LossEvent);
  } else if (!lost_now && lost_) {
    out.events.push_back(SlamEvent::RelocalizedEvent);
  }
  lost_ = lost_now;

  if (!first_frame_position_) {
    first_frame_position_ = true_pose.position();
  }
  if (!initialized_ && !lost_ && frames_ >= config_.init_frames &&
      (true_pose.position() - *first_frame_position_).norm() >= config_.init_translation) {
    initialized_ = true;
    out.events.push_back(SlamEvent::InitSucceeded);
  }
  if (initialized_ && !lost_) {
    out.pose = raw_pose(true_pose);
  }
  return out;
}

}  // namespace groundmap
