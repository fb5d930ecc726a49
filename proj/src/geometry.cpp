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

#include "groundmap/geometry.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "groundmap/errors.hpp"

namespace groundmap {

double normalize_angle(double angle) {
  if (!std::isfinite(angle)) {
    throw Error(ErrorCode::InvalidInput, "normalize_angle: non-finite angle");
  }
  double r = std::fmod(angle + kPi, 2.0 * kPi);
  if (r <= 0.0) {
    r += 2.0 * kPi;
  }
  return r - kPi;
}

Vec2 Pose2::transform_point(const Vec2& local) const {
  const double c = std::cos(yaw);
  const double s = std::sin(yaw);
  return {x + c * local.x() - s * local.y(), y + s * local.x() + c * local.y()};
}

Pose2 Pose2::inverse() const {
  const double c = std::cos(yaw);
  const double s = std::sin(yaw);
  return {-c * x - s * y, s * x - c * y, normalize_angle(-yaw)};
}

Pose2 compose_pose2(const Pose2& a, const Pose2& b) {
  const Vec2 p = a.transform_point(b.position());
  return {p.x(), p.y(), normalize_angle(a.yaw + b.yaw)};
}

Pose2 between(const Pose2& from, const Pose2& to) {
  return compose_pose2(from.inverse(), to);
}

namespace {

Eigen::Quaterniond canonical(Eigen::Quaterniond q) {
  q.normalize();
  if (q.w() < 0.0) {
    q.coeffs() = -q.coeffs();
  }
  return q;
}

}  // namespace

SimilarityTransform3::SimilarityTransform3(double scale, const Eigen::Quaterniond& rotation,
                                           const Vec3& translation)
    : scale_(scale), rotation_(canonical(rotation)), translation_(translation) {
  if (!(scale > 0.0) || !std::isfinite(scale)) {
    throw Error(ErrorCode::InvalidInput, "similarity scale must be finite and > 0");
  }
  if (!std::isfinite(rotation.norm()) || rotation.norm() == 0.0 || !translation.allFinite()) {
    throw Error(ErrorCode::InvalidInput, "similarity rotation/translation must be finite");
  }
}

SimilarityTransform3 SimilarityTransform3::from_yaw(double scale, double yaw,
                                                    const Vec3& translation) {
  return {scale, Eigen::Quaterniond(Eigen::AngleAxisd(yaw, Vec3::UnitZ())), translation};
}

SimilarityTransform3 SimilarityTransform3::inverse() const {
  const Eigen::Quaterniond inv_rot = rotation_.conjugate();
  const double inv_scale = 1.0 / scale_;
  return {inv_scale, inv_rot, -inv_scale * (inv_rot * translation_)};
}

Trajectory::Trajectory(std::vector<TrajectorySample> samples) {
  samples_.reserve(samples.size());
  for (auto& s : samples) {
    push_back(std::move(s));
  }
}

void Trajectory::push_back(TrajectorySample sample) {
  if (!std::isfinite(sample.stamp) || !sample.position.allFinite()) {
    throw Error(ErrorCode::InvalidInput, "trajectory sample must be finite");
  }
  if (!samples_.empty() && !(sample.stamp > samples_.back().stamp)) {
    throw Error(ErrorCode::InvalidInput, "trajectory stamps must be strictly increasing");
  }
  samples_.push_back(std::move(sample));
}

Trajectory parse_trajectory(const std::string& text) {
  Trajectory out;
  std::istringstream in(text);
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string::npos) {
      line.erase(hash);
    }
    std::istringstream fields(line);
    std::vector<double> values;
    double v = 0.0;
    while (fields >> v) {
      values.push_back(v);
    }
    if (!fields.eof()) {
      throw Error(ErrorCode::InvalidInput,
                  "trajectory line " + std::to_string(line_no) + ": non-numeric field");
    }
    if (values.empty()) {
      continue;
    }
    if (values.size() != 4 && values.size() != 8) {
      throw Error(ErrorCode::InvalidInput, "trajectory line " + std::to_string(line_no) +
                                               ": expected 4 or 8 fields");
    }
    TrajectorySample s;
    s.stamp = values[0];
    s.position = {values[1], values[2], values[3]};
    if (values.size() == 8) {
      s.orientation = Eigen::Quaterniond(values[4], values[5], values[6], values[7]).normalized();
    }
    try {
      out.push_back(s);
    } catch (const Error& e) {
      throw Error(ErrorCode::InvalidInput,
                  "trajectory line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  return out;
}

Trajectory read_trajectory(const std::string& path) {
  std::ifstream in(path);
  if (!in) {
    throw Error(ErrorCode::Io, "cannot open trajectory file " + path);
  }
  std::stringstream buffer;
  buffer << in.rdbuf();
  return parse_trajectory(buffer.str());
}

std::string format_trajectory(const Trajectory& trajectory) {
  std::string out = "# t x y z [qw qx qy qz]\n";
  char line[256];
  for (const auto& s : trajectory) {
    int n = std::snprintf(line, sizeof(line), "%.9f %.9f %.9f %.9f", s.stamp, s.position.x(),
                          s.position.y(), s.position.z());
    out.append(line, static_cast<std::size_t>(n));
    if (s.orientation) {
      const auto& q = *s.orientation;
      n = std::snprintf(line, sizeof(line), " %.9f %.9f %.9f %.9f", q.w(), q.x(), q.y(), q.z());
      out.append(line, static_cast<std::size_t>(n));
    }
    out.push_back('\n');
  }
  return out;
}

void write_trajectory(const std::string& path, const Trajectory& trajectory) {
  std::ofstream out(path, std::ios::binary);
  if (!out) {
    throw Error(ErrorCode::Io, "cannot write trajectory file " + path);
  }
  out << format_trajectory(trajectory);
}

}  // namespace groundmap
