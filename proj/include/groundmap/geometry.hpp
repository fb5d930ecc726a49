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

#include <Eigen/Core>
#include <Eigen/Geometry>

#include <optional>
#include <span>
#include <string>
#include <vector>

namespace groundmap {

using Vec2 = Eigen::Vector2d;
using Vec3 = Eigen::Vector3d;

inline constexpr double kPi = 3.14159265358979323846;

/// Wraps an angle into (-pi, pi]. Throws InvalidInput for non-finite input.
double normalize_angle(double angle);

/// Planar pose: x forward / y left in the parent frame, yaw counter-clockwise.
struct Pose2 {
  double x = 0.0;
  double y = 0.0;
  double yaw = 0.0;

  static Pose2 identity() { return {}; }

  Vec2 position() const { return {x, y}; }
  /// Maps a point expressed in this pose's frame into the parent frame.
  Vec2 transform_point(const Vec2& local) const;
  Pose2 inverse() const;
};

/// SE(2) composition `a * b`: b expressed in a's frame, result in a's parent.
Pose2 compose_pose2(const Pose2& a, const Pose2& b);

/// Relative motion from `from` to `to`, expressed in `from`'s frame.
Pose2 between(const Pose2& from, const Pose2& to);

/// 3-D similarity x -> s * R x + t. The rotation quaternion is kept unit-norm with w >= 0.
class SimilarityTransform3 {
 public:
  SimilarityTransform3() = default;
  SimilarityTransform3(double scale, const Eigen::Quaterniond& rotation, const Vec3& translation);

  static SimilarityTransform3 identity() { return {}; }
  static SimilarityTransform3 from_yaw(double scale, double yaw, const Vec3& translation);

  double scale() const { return scale_; }
  const Eigen::Quaterniond& rotation() const { return rotation_; }
  const Vec3& translation() const { return translation_; }

  Vec3 apply(const Vec3& p) const { return scale_ * (rotation_ * p) + translation_; }
  SimilarityTransform3 inverse() const;

 private:
  double scale_ = 1.0;
  Eigen::Quaterniond rotation_ = Eigen::Quaterniond::Identity();
  Vec3 translation_ = Vec3::Zero();
};

inline Vec3 apply_similarity(const SimilarityTransform3& transform, const Vec3& p) {
  return transform.apply(p);
}

struct TrajectorySample {
  double stamp = 0.0;
  Vec3 position = Vec3::Zero();
  std::optional<Eigen::Quaterniond> orientation;
};

/// Time-ordered position samples; stamps are strictly increasing.
class Trajectory {
 public:
  Trajectory() = default;
  explicit Trajectory(std::vector<TrajectorySample> samples);

  /// Appends a sample; throws InvalidInput if the stamp does not increase.
  void push_back(TrajectorySample sample);

  bool empty() const { return samples_.empty(); }
  std::size_t size() const { return samples_.size(); }
  const TrajectorySample& operator[](std::size_t i) const { return samples_[i]; }
  const TrajectorySample& back() const { return samples_.back(); }
  std::span<const TrajectorySample> samples() const { return samples_; }

  auto begin() const { return samples_.begin(); }
  auto end() const { return samples_.end(); }

 private:
  std::vector<TrajectorySample> samples_;
};

/// Reads `t x y z [qw qx qy qz]` lines; `#` starts a comment.
Trajectory read_trajectory(const std::string& path);
Trajectory parse_trajectory(const std::string& text);
void write_trajectory(const std::string& path, const Trajectory& trajectory);
std::string format_trajectory(const Trajectory& trajectory);

}  // namespace groundmap
