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
#include <span>
#include <string>
#include <vector>

#include "groundmap/boundary.hpp"
#include "groundmap/geometry.hpp"
#include "groundmap/sim_world.hpp"

namespace groundmap {

enum class Occupancy : std::uint8_t { Unknown = 0, Free = 1, Occupied = 2 };

std::string_view to_string(Occupancy o);

/// Fixed robot-local grid in front of the robot. Column i spans lateral
/// [-w/2 + i r, -w/2 + (i+1) r); row j spans forward [j r, (j+1) r).
class LocalMap {
 public:
  explicit LocalMap(double resolution = 0.05, LocalFootprint footprint = {});

  double resolution() const { return resolution_; }
  const LocalFootprint& footprint() const { return footprint_; }
  int cols() const { return cols_; }
  int rows() const { return rows_; }
  std::size_t cell_count() const { return cells_.size(); }

  Occupancy at(int col, int row) const { return cells_[index(col, row)]; }
  void set(int col, int row, Occupancy o) { cells_[index(col, row)] = o; }
  const std::vector<Occupancy>& cells() const { return cells_; }

  /// (x_lateral, y_forward) of the cell center.
  Vec2 cell_center(int col, int row) const;
  /// Cell containing a local point, if inside the footprint.
  std::optional<std::pair<int, int>> cell_of(const Vec2& local) const;

  bool operator==(const LocalMap&) const = default;

 private:
  std::size_t index(int col, int row) const { return static_cast<std::size_t>(row) * cols_ + col; }

  double resolution_;
  LocalFootprint footprint_;
  int cols_;
  int rows_;
  std::vector<Occupancy> cells_;
};

/// Rasterizes one boundary: clear columns free their whole ray, obstacle
/// columns free the ray up to the obstacle and occupy its cell, filtered
/// columns leave their ray unknown.
LocalMap build_local_map(const GroundBoundary& boundary, double resolution = 0.05);

struct CellIndex {
  std::int64_t x = 0;
  std::int64_t y = 0;

  bool operator==(const CellIndex&) const = default;
};

/// Rectangular block of ternary cells in world-anchored cell coordinates;
/// rows run south to north (row 0 at origin_y).
struct GridPatch {
  std::uint64_t epoch = 0;
  bool snapshot = false;
  std::int32_t origin_x = 0;
  std::int32_t origin_y = 0;
  std::uint32_t width = 0;
  std::uint32_t height = 0;
  std::vector<Occupancy> cells;

  bool empty() const { return width == 0 || height == 0; }
  Occupancy at(std::uint32_t col, std::uint32_t row) const { return cells[static_cast<std::size_t>(row) * width + col]; }
  bool operator==(const GridPatch&) const = default;
};

struct LogOddsParams {
  double occupied_increment = 2.0;
  double free_increment = -1.8;
  double clamp = 4.0;
  double occupied_probability = 0.85;
  double free_probability = 0.15;
};

/// World-anchored occupancy grid that grows on demand. Cell (x, y) covers
/// [x r, (x+1) r) x [y r, (y+1) r); growing never moves a cell.
class GlobalMap {
 public:
  explicit GlobalMap(double resolution = 0.05, LogOddsParams params = {});

  double resolution() const { return resolution_; }
  const LogOddsParams& params() const { return params_; }
  bool empty() const { return width_ == 0 || height_ == 0; }
  CellIndex min_cell() const { return min_cell_; }
  int width() const { return width_; }
  int height() const { return height_; }
  /// World coordinates of the lower-left corner of the grid.
  Vec2 origin() const { return {static_cast<double>(min_cell_.x) * resolution_, static_cast<double>(min_cell_.y) * resolution_}; }
  std::uint64_t epoch() const { return epoch_; }

  CellIndex cell_of(const Vec2& world) const;
  Vec2 cell_center(CellIndex c) const;
  bool contains(CellIndex c) const;

  double log_odds(CellIndex c) const;
  std::uint32_t observations(CellIndex c) const;
  Occupancy state(CellIndex c) const;
  Occupancy classify(double log_odds) const;

  /// Writes a raw log-odds value, growing the grid to include `c`.
  void set_log_odds(CellIndex c, double value);
  /// Grows the grid to include the inclusive cell rectangle.
  void ensure(CellIndex lo, CellIndex hi);

  /// Applies one evidence update per cell; returns the touched cells' new states.
  GridPatch apply_updates(const std::vector<std::pair<CellIndex, Occupancy>>& updates);

  GridPatch snapshot() const;

 private:
  std::size_t index(CellIndex c) const {
    return static_cast<std::size_t>(c.y - min_cell_.y) * static_cast<std::size_t>(width_) +
           static_cast<std::size_t>(c.x - min_cell_.x);
  }

  double resolution_;
  LogOddsParams params_;
  CellIndex min_cell_;
  int width_ = 0;
  int height_ = 0;
  std::vector<double> log_odds_;
  std::vector<std::uint32_t> observations_;
  std::uint64_t epoch_ = 0;
};

/// Transforms every known local cell center by `pose` and accumulates its
/// evidence in the global map. A global cell hit by several local cells in
/// one call receives a single update (Occupied wins). Returns the delta patch.
GridPatch fuse_local(GlobalMap& global, const LocalMap& local, const Pose2& pose);

/// Binary P5 image: 254 free, 0 occupied, 205 unknown; first row is north.
std::string encode_map_pgm(const GlobalMap& global);
/// Same image from a full-grid snapshot.
std::string encode_grid_pgm(const GridPatch& grid);
/// Sidecar metadata (resolution, origin, dimensions).
std::string encode_map_metadata(const GlobalMap& global, const std::string& image_name);
/// Writes `<stem>.pgm` and `<stem>.yaml`. Throws EmptyMap or Io.
void export_map(const GlobalMap& global, const std::string& stem);

/// Overlap between mapped obstacles and the true obstacle edges that face
/// at least one viewpoint (all edges if none are given). Both the occupied
/// cells and the true edges are dilated by `band`; truth is restricted to
/// the observed part of the map. Obstacle-free scenes score 1.
double map_iou(const GlobalMap& global, const Scene& scene, double band = 0.1,
               std::span<const Vec2> viewpoints = {});

}  // namespace groundmap
