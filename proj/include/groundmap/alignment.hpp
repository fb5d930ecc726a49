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

#include <optional>
#include <span>
#include <vector>

#include "groundmap/geometry.hpp"

namespace groundmap {

/// Closed-form least-squares similarity (Horn, unit quaternions) mapping
/// `source` onto `target`:
///
///   argmin_{s,R,t} sum_i || target_i - (s R source_i + t) ||^2
///
/// Both sets are demeaned; the scale uses the symmetric ratio of RMS spreads;
/// the rotation is the dominant eigenvector of the 4x4 matrix built from the
/// cross-covariance; the translation closes the centroids.
///
/// Throws DegenerateInput for fewer than three points, mismatched lengths, or
/// a set with no spread, and NumericalFailure if the eigen-solve fails.
SimilarityTransform3 estimate_similarity(std::span<const Vec3> source, std::span<const Vec3> target);

/// sqrt(mean ||target_i - T(source_i)||^2). Throws InvalidInput on a length mismatch or empty input.
double alignment_rmse(const SimilarityTransform3& transform, std::span<const Vec3> source,
                      std::span<const Vec3> target);

struct SamplePair {
  Vec3 visual;
  Vec3 wheel;
  double visual_stamp = 0.0;
  double wheel_stamp = 0.0;
};

struct PairedSamples {
  std::vector<SamplePair> pairs;

  std::vector<Vec3> visual_points() const;
  std::vector<Vec3> wheel_points() const;
};

inline constexpr double kDefaultMaxAssociationGap = 0.1;

/// One-to-one nearest-first association: candidate pairs within `max_gap` are
/// accepted greedily in increasing |dt| (ties broken by visual then wheel index).
/// Output is ordered by visual stamp.
PairedSamples associate_by_timestamp(const Trajectory& visual, const Trajectory& wheel,
                                     double max_gap = kDefaultMaxAssociationGap);

/// Re-estimates the visual -> wheel similarity over the whole accumulated path
/// once per period of simulation time.
class ScaleEstimator {
 public:
  struct Update {
    SimilarityTransform3 transform;
    bool valid = false;   // false until the first successful estimate
    bool refreshed = false;  // true if this update produced a new estimate
    double rmse = 0.0;
    std::size_t pairs = 0;
  };

  explicit ScaleEstimator(double period = 1.0, double max_gap = kDefaultMaxAssociationGap);

  void add_visual(double stamp, const Vec3& position);
  void add_wheel(double stamp, const Vec3& position);

  /// Returns an update when `now` has reached the next period boundary.
  std::optional<Update> poll(double now);

  const SimilarityTransform3& current() const { return current_; }
  bool valid() const { return valid_; }
  const Trajectory& visual_path() const { return visual_; }
  const Trajectory& wheel_path() const { return wheel_; }

 private:
  Update estimate();

  double period_;
  double max_gap_;
  std::optional<double> next_update_;
  Trajectory visual_;
  Trajectory wheel_;
  SimilarityTransform3 current_;
  bool valid_ = false;
};

}  // namespace groundmap
