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

#include "groundmap/boundary.hpp"

#include <cmath>
#include <cstdio>

#include "groundmap/errors.hpp"

namespace groundmap {

RawBoundary extract_boundary(const SegMask& mask) {
  RawBoundary out;
  out.entries.resize(static_cast<std::size_t>(mask.width()));
  for (int col = 0; col < mask.width(); ++col) {
    for (int row = mask.height() - 1; row >= 0; --row) {
      const SegClass c = mask.at(col, row);
      if (c == SegClass::Road || c == SegClass::Sky) {
        continue;
      }
      out.entries[static_cast<std::size_t>(col)] = {row, c};
      break;
    }
  }
  return out;
}

Homography::Homography(const Eigen::Matrix3d& ground_from_centered, const Vec2& pixel_origin, int width,
                       int height)
    : ground_from_centered_(ground_from_centered), pixel_origin_(pixel_origin), width_(width), height_(height) {
  if (!(std::abs(ground_from_centered_.determinant()) > 1e-12)) {
    throw Error(ErrorCode::InvalidInput, "homography is singular");
  }
}

Eigen::Matrix3d Homography::matrix() const {
  Eigen::Matrix3d shift = Eigen::Matrix3d::Identity();
  shift(0, 2) = -pixel_origin_.x();
  shift(1, 2) = -pixel_origin_.y();
  return ground_from_centered_ * shift;
}

std::optional<Vec2> Homography::try_project(double u, double v) const {
  // Shift first: integer pixel offsets stay exact, which keeps the mapping
  // bit-symmetric about the centerline column.
  const Eigen::Vector3d centered(u - pixel_origin_.x(), v - pixel_origin_.y(), 1.0);
  const Eigen::Vector3d h = ground_from_centered_ * centered;
  if (!(h.z() > 1e-12)) {
    return std::nullopt;
  }
  return Vec2(h.x() / h.z(), h.y() / h.z());
}

Vec2 Homography::project(double u, double v) const {
  if (auto p = try_project(u, v)) {
    return *p;
  }
  throw Error(ErrorCode::HorizonInView,
              "pixel (" + std::to_string(u) + ", " + std::to_string(v) + ") is at or above the horizon");
}

double Homography::horizon_row() const {
  const auto& g = ground_from_centered_;
  // Denominator g20 * du + g21 * dv + g22 = 0 on the centerline (g20 = 0 here).
  return pixel_origin_.y() - g(2, 2) / g(2, 1);
}

Homography build_homography(const CameraModel& camera) {
  camera.validate();
  const double h = camera.mount_height;
  const double c = std::cos(camera.mount_pitch);
  const double s = std::sin(camera.mount_pitch);
  // Ray through centered pixel (du, dv) in the robot frame is
  // (c - b s, -a, -(s + b c)) with a = du / fx, b = dv / fy. Scaling it to
  // hit z = 0 from height h gives lateral -h a / D and forward h (c - b s) / D,
  // D = s + b c.
  Eigen::Matrix3d g;
  g << -h / camera.fx, 0.0, 0.0,
       0.0, -h * s / camera.fy, h * c,
       0.0, c / camera.fy, s;
  const Vec2 origin(0.5 * camera.width, camera.cy);
  Homography out(g, origin, camera.width, camera.height);
  if (!out.try_project(origin.x(), camera.height - 1)) {
    throw Error(ErrorCode::HorizonInView, "bottom image row does not see the ground");
  }
  return out;
}

std::string_view to_string(GroundBoundaryEntry::Kind kind) {
  switch (kind) {
    case GroundBoundaryEntry::Kind::Clear: return "CLEAR";
    case GroundBoundaryEntry::Kind::Obstacle: return "OBSTACLE";
    case GroundBoundaryEntry::Kind::Filtered: return "FILTERED";
  }
  return "INVALID";
}

namespace {

ColumnRay column_ray(const Homography& homography, int col, double max_range) {
  const double bottom = homography.image_height() - 1;
  const double horizon = homography.horizon_row();
  const double mid = 0.5 * (bottom + std::max(horizon, -1.0));
  const Vec2 a = homography.project(col, bottom);
  const Vec2 b = homography.project(col, mid);
  const double dy = b.y() - a.y();
  const double slope = std::abs(dy) > 1e-15 ? (b.x() - a.x()) / dy : 0.0;
  return {{a.x() + slope * (0.0 - a.y()), 0.0}, {a.x() + slope * (max_range - a.y()), max_range}};
}

}  // namespace

std::vector<ColumnRay> column_rays(const Homography& homography, double max_range) {
  std::vector<ColumnRay> rays;
  rays.reserve(static_cast<std::size_t>(homography.image_width()));
  for (int col = 0; col < homography.image_width(); ++col) {
    rays.push_back(column_ray(homography, col, max_range));
  }
  return rays;
}

GroundBoundary filter_boundary(const RawBoundary& raw, const Homography& homography,
                               const BoundaryFilterConfig& config) {
  using Kind = GroundBoundaryEntry::Kind;
  if (raw.size() != static_cast<std::size_t>(homography.image_width())) {
    throw Error(ErrorCode::InvalidInput, "boundary length does not match the homography image width");
  }
  GroundBoundary out;
  out.max_range = config.max_range;
  out.footprint = config.footprint;
  out.entries.resize(raw.size());
  out.rays = column_rays(homography, config.max_range);
  out.homography = homography;
  const double half_width = config.footprint.half_width();

  for (std::size_t col = 0; col < raw.size(); ++col) {
    const auto& in = raw.entries[col];
    auto& entry = out.entries[col];
    entry.row = in.row;
    entry.cls = in.cls;
    if (!in.row) {
      continue;
    }
    entry.point = homography.try_project(static_cast<double>(col), *in.row);
    if (!entry.point || entry.point->y() > config.max_range || std::abs(entry.point->x()) > half_width) {
      entry.kind = Kind::Clear;
      continue;
    }
    entry.kind = Kind::Obstacle;
  }

  // Gradient test against the immediate neighbours that carry a boundary row.
  std::vector<bool> steep(raw.size(), false);
  for (std::size_t col = 0; col + 1 < raw.size(); ++col) {
    const auto& a = raw.entries[col].row;
    const auto& b = raw.entries[col + 1].row;
    if (a && b && std::abs(*a - *b) > config.grad_threshold) {
      steep[col] = true;
      steep[col + 1] = true;
    }
  }
  for (std::size_t col = 0; col < raw.size(); ++col) {
    if (steep[col] && out.entries[col].kind == Kind::Obstacle) {
      out.entries[col].kind = Kind::Filtered;
    }
  }
  return out;
}

std::string format_boundary_dump(const GroundBoundary& boundary) {
  std::string out;
  char line[160];
  for (std::size_t col = 0; col < boundary.size(); ++col) {
    const auto& e = boundary.entries[col];
    const std::string row = e.row ? std::to_string(*e.row) : "NA";
    std::string x = "NA";
    std::string y = "NA";
    if (e.point) {
      std::snprintf(line, sizeof(line), "%.6f", e.point->x());
      x = line;
      std::snprintf(line, sizeof(line), "%.6f", e.point->y());
      y = line;
    }
    const int n = std::snprintf(line, sizeof(line), "%zu %s %s %s %s\n", col, row.c_str(), x.c_str(), y.c_str(),
                                std::string(to_string(e.kind)).c_str());
    out.append(line, static_cast<std::size_t>(n));
  }
  return out;
}

}  // namespace groundmap
