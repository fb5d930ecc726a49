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

#include <optional>
#include <string>
#include <vector>

#include "groundmap/geometry.hpp"
#include "groundmap/segmentation.hpp"
#include "groundmap/sim_world.hpp"

namespace groundmap {

/// Per-column result of the bottom-up scan: the first obstacle-like pixel, if any.
struct RawBoundaryEntry {
  std::optional<int> row;  // nullopt: clear column
  SegClass cls = SegClass::Road;
};

struct RawBoundary {
  std::vector<RawBoundaryEntry> entries;

  std::size_t size() const { return entries.size(); }
};

/// Scans each column from the bottom row upward, skipping road and sky; the
/// first remaining pixel (object, person or unlabeled) marks the boundary.
RawBoundary extract_boundary(const SegMask& mask);

/// Fixed image -> ground mapping of the forward camera. Ground coordinates
/// are (x_lateral, y_forward) in meters, lateral positive to the left of the
/// robot centerline.
class Homography {
 public:
  /// `ground_from_centered` acts on (u - u0, v - v0, 1).
  Homography(const Eigen::Matrix3d& ground_from_centered, const Vec2& pixel_origin, int width, int height);

  /// Full pixel -> ground matrix on raw (top-left origin) pixel coordinates.
  Eigen::Matrix3d matrix() const;
  const Eigen::Matrix3d& centered_matrix() const { return ground_from_centered_; }
  const Vec2& pixel_origin() const { return pixel_origin_; }
  int image_width() const { return width_; }
  int image_height() const { return height_; }

  /// nullopt if (u, v) is at or above the horizon.
  std::optional<Vec2> try_project(double u, double v) const;
  /// Throws HorizonInView if (u, v) does not see the ground.
  Vec2 project(double u, double v) const;
  /// Row where the denominator vanishes.
  double horizon_row() const;

 private:
  Eigen::Matrix3d ground_from_centered_;
  Vec2 pixel_origin_;
  int width_;
  int height_;
};

/// Ground-plane homography from the camera intrinsics and mount. Pixel
/// coordinates are taken from the top-left image origin, and the lateral axis
/// is referenced to the image centerline column (width / 2) so that mirrored
/// columns map to mirrored lateral offsets; the mount's lateral offset is
/// therefore not part of the mapping.
Homography build_homography(const CameraModel& camera);

/// Robot-local footprint covered by one boundary.
struct LocalFootprint {
  double width = 1.1;
  double length = 2.5;

  double half_width() const { return 0.5 * width; }
  bool operator==(const LocalFootprint&) const = default;
};

struct GroundBoundaryEntry {
  enum class Kind : std::uint8_t { Clear, Obstacle, Filtered };

  Kind kind = Kind::Clear;
  std::optional<int> row;
  std::optional<Vec2> point;  // projected (x_lateral, y_forward), when the row sees the ground
  SegClass cls = SegClass::Road;
};

/// Ground trace of one image column, sampled at the robot edge and at max range.
struct ColumnRay {
  Vec2 near;  // y_forward = 0
  Vec2 far;   // y_forward = max_range
};

/// Ground traces of every image column of `homography`.
std::vector<ColumnRay> column_rays(const Homography& homography, double max_range);

struct GroundBoundary {
  std::vector<GroundBoundaryEntry> entries;
  std::vector<ColumnRay> rays;          // derived from `homography`
  std::optional<Homography> homography;
  double max_range = 2.5;
  LocalFootprint footprint;

  std::size_t size() const { return entries.size(); }
};

std::string_view to_string(GroundBoundaryEntry::Kind kind);

struct BoundaryFilterConfig {
  double max_range = 2.5;
  double grad_threshold = 1.0;  // rows per column
  LocalFootprint footprint;
};

/// Projects the raw boundary to the ground and drops what cannot be an
/// obstacle base: entries beyond `max_range` (forward) or outside the
/// footprint become Clear; entries whose row differs by more than
/// `grad_threshold` from either adjacent non-clear column become Filtered.
GroundBoundary filter_boundary(const RawBoundary& raw, const Homography& homography,
                               const BoundaryFilterConfig& config = {});

/// Debug dump: one line per column, `col row_or_NA x_or_NA y_or_NA flag`.
std::string format_boundary_dump(const GroundBoundary& boundary);

}  // namespace groundmap
