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

#include "groundmap/alignment.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <tuple>

#include "groundmap/errors.hpp"

namespace groundmap {

namespace {

Vec3 centroid(std::span<const Vec3> points) {
  Vec3 c = Vec3::Zero();
  for (const auto& p : points) {
    c += p;
  }
  return c / static_cast<double>(points.size());
}

}  // namespace

SimilarityTransform3 estimate_similarity(std::span<const Vec3> source, std::span<const Vec3> target) {
  if (source.size() != target.size()) {
    throw Error(ErrorCode::DegenerateInput, "estimate_similarity: point count mismatch");
  }
  if (source.size() < 3) {
    throw Error(ErrorCode::DegenerateInput, "estimate_similarity: need at least 3 point pairs");
  }
  const Vec3 src_c = centroid(source);
  const Vec3 tgt_c = centroid(target);

  double src_spread = 0.0;
  double tgt_spread = 0.0;
  double src_mag = 0.0;
  double tgt_mag = 0.0;
  Eigen::Matrix3d cross = Eigen::Matrix3d::Zero();
  for (std::size_t i = 0; i < source.size(); ++i) {
    const Vec3 a = source[i] - src_c;
    const Vec3 b = target[i] - tgt_c;
    src_spread += a.squaredNorm();
    tgt_spread += b.squaredNorm();
    src_mag += source[i].squaredNorm();
    tgt_mag += target[i].squaredNorm();
    cross += a * b.transpose();
  }
  // Spread below ~1e-12 of the raw magnitude is indistinguishable from round-off.
  constexpr double kRelativeSpreadFloor = 1e-24;
  if (!(src_spread > kRelativeSpreadFloor * std::max(src_mag, 1.0)) ||
      !(tgt_spread > kRelativeSpreadFloor * std::max(tgt_mag, 1.0))) {
    throw Error(ErrorCode::DegenerateInput, "estimate_similarity: point set has no spread");
  }

  const double sxx = cross(0, 0), sxy = cross(0, 1), sxz = cross(0, 2);
  const double syx = cross(1, 0), syy = cross(1, 1), syz = cross(1, 2);
  const double szx = cross(2, 0), szy = cross(2, 1), szz = cross(2, 2);
  Eigen::Matrix4d n;
  n << sxx + syy + szz, syz - szy, szx - sxz, sxy - syx,
       syz - szy, sxx - syy - szz, sxy + syx, szx + sxz,
       szx - sxz, sxy + syx, -sxx + syy - szz, syz + szy,
       sxy - syx, szx + sxz, syz + szy, -sxx - syy + szz;

  Eigen::SelfAdjointEigenSolver<Eigen::Matrix4d> solver(n);
  if (solver.info() != Eigen::Success || !solver.eigenvectors().allFinite()) {
    throw Error(ErrorCode::NumericalFailure, "estimate_similarity: eigen-solve did not converge");
  }
  // Eigenvalues are sorted ascending.
  const Eigen::Vector4d q = solver.eigenvectors().col(3);
  const Eigen::Quaterniond rotation(q(0), q(1), q(2), q(3));

  const double scale = std::sqrt(tgt_spread / src_spread);
  const SimilarityTransform3 partial(scale, rotation, Vec3::Zero());
  return {scale, rotation, tgt_c - partial.apply(src_c)};
}

double alignment_rmse(const SimilarityTransform3& transform, std::span<const Vec3> source,
                      std::span<const Vec3> target) {
  if (source.size() != target.size()) {
    throw Error(ErrorCode::InvalidInput, "alignment_rmse: point count mismatch");
  }
  if (source.empty()) {
    throw Error(ErrorCode::InvalidInput, "alignment_rmse: empty input");
  }
  double sum = 0.0;
  for (std::size_t i = 0; i < source.size(); ++i) {
    sum += (target[i] - transform.apply(source[i])).squaredNorm();
  }
  return std::sqrt(sum / static_cast<double>(source.size()));
}

std::vector<Vec3> PairedSamples::visual_points() const {
  std::vector<Vec3> out;
  out.reserve(pairs.size());
  for (const auto& p : pairs) {
    out.push_back(p.visual);
  }
  return out;
}

std::vector<Vec3> PairedSamples::wheel_points() const {
  std::vector<Vec3> out;
  out.reserve(pairs.size());
  for (const auto& p : pairs) {
    out.push_back(p.wheel);
  }
  return out;
}

PairedSamples associate_by_timestamp(const Trajectory& visual, const Trajectory& wheel,
                                     double max_gap) {
  struct Candidate {
    double gap;
    std::size_t vi;
    std::size_t wi;
  };
  std::vector<Candidate> candidates;
  const auto wheel_samples = wheel.samples();
  for (std::size_t vi = 0; vi < visual.size(); ++vi) {
    const double t = visual[vi].stamp;
    auto it = std::lower_bound(wheel_samples.begin(), wheel_samples.end(), t - max_gap,
                               [](const TrajectorySample& s, double v) { return s.stamp < v; });
    for (; it != wheel_samples.end() && it->stamp <= t + max_gap; ++it) {
      const double gap = std::abs(it->stamp - t);
      if (gap <= max_gap) {
        candidates.push_back(
            {gap, vi, static_cast<std::size_t>(it - wheel_samples.begin())});
      }
    }
  }
  std::sort(candidates.begin(), candidates.end(), [](const Candidate& a, const Candidate& b) {
    return std::tie(a.gap, a.vi, a.wi) < std::tie(b.gap, b.vi, b.wi);
  });

  std::vector<std::ptrdiff_t> match(visual.size(), -1);
  std::vector<bool> wheel_used(wheel.size(), false);
  for (const auto& c : candidates) {
    if (match[c.vi] < 0 && !wheel_used[c.wi]) {
      match[c.vi] = static_cast<std::ptrdiff_t>(c.wi);
      wheel_used[c.wi] = true;
    }
  }

  PairedSamples out;
  for (std::size_t vi = 0; vi < visual.size(); ++vi) {
    if (match[vi] >= 0) {
      const auto& w = wheel[static_cast<std::size_t>(match[vi])];
      out.pairs.push_back({visual[vi].position, w.position, visual[vi].stamp, w.stamp});
    }
  }
  return out;
}

ScaleEstimator::ScaleEstimator(double period, double max_gap) : period_(period), max_gap_(max_gap) {
  if (!(period > 0.0)) {
    throw Error(ErrorCode::InvalidInput, "ScaleEstimator: period must be > 0");
  }
}

void ScaleEstimator::add_visual(double stamp, const Vec3& position) {
  visual_.push_back({stamp, position, std::nullopt});
}

void ScaleEstimator::add_wheel(double stamp, const Vec3& position) {
  wheel_.push_back({stamp, position, std::nullopt});
}

std::optional<ScaleEstimator::Update> ScaleEstimator::poll(double now) {
  if (!next_update_) {
    next_update_ = period_;
  }
  // Tolerate round-off in stamps that are meant to land on the boundary.
  if (now + 1e-9 < *next_update_) {
    return std::nullopt;
  }
  while (*next_update_ <= now + 1e-9) {
    *next_update_ += period_;
  }
  return estimate();
}

ScaleEstimator::Update ScaleEstimator::estimate() {
  Update update{current_, valid_, false, 0.0, 0};
  if (visual_.empty() || wheel_.empty()) {
    return update;
  }
  const PairedSamples paired = associate_by_timestamp(visual_, wheel_, max_gap_);
  update.pairs = paired.pairs.size();
  if (paired.pairs.size() < 3) {
    return update;
  }
  const auto src = paired.visual_points();
  const auto tgt = paired.wheel_points();
  try {
    current_ = estimate_similarity(src, tgt);
    valid_ = true;
    update.transform = current_;
    update.valid = true;
    update.refreshed = true;
    update.rmse = alignment_rmse(current_, src, tgt);
  } catch (const Error&) {
    // Degenerate history (e.g. robot still stationary): hold the last good transform.
  }
  return update;
}

}  // namespace groundmap
