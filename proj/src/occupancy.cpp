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

#include "groundmap/occupancy.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>

#include "groundmap/errors.hpp"

namespace groundmap {

std::string_view to_string(Occupancy o) {
  switch (o) {
    case Occupancy::Unknown: return "unknown";
    case Occupancy::Free: return "free";
    case Occupancy::Occupied: return "occupied";
  }
  return "invalid";
}

namespace {

// Dimensions like 1.1 / 0.05 land a hair above the integer in floating point.
int cell_span(double extent, double resolution) {
  return static_cast<int>(std::ceil(extent / resolution - 1e-9));
}

}  // namespace

LocalMap::LocalMap(double resolution, LocalFootprint footprint)
    : resolution_(resolution), footprint_(footprint) {
  if (!(resolution > 0.0) || !(footprint.width > 0.0) || !(footprint.length > 0.0)) {
    throw Error(ErrorCode::InvalidInput, "local map resolution and footprint must be > 0");
  }
  cols_ = cell_span(footprint.width, resolution);
  rows_ = cell_span(footprint.length, resolution);
  cells_.assign(static_cast<std::size_t>(cols_) * static_cast<std::size_t>(rows_), Occupancy::Unknown);
}

Vec2 LocalMap::cell_center(int col, int row) const {
  return {-footprint_.half_width() + (col + 0.5) * resolution_, (row + 0.5) * resolution_};
}

std::optional<std::pair<int, int>> LocalMap::cell_of(const Vec2& local) const {
  const double hw = footprint_.half_width();
  if (!(local.x() >= -hw && local.x() <= hw && local.y() >= 0.0 && local.y() <= footprint_.length)) {
    return std::nullopt;
  }
  const int col = std::min(static_cast<int>(std::floor((local.x() + hw) / resolution_)), cols_ - 1);
  const int row = std::min(static_cast<int>(std::floor(local.y() / resolution_)), rows_ - 1);
  return std::make_pair(col, row);
}

namespace {

// Liang-Barsky clip of p0 -> p1 against the footprint rectangle.
std::optional<std::pair<Vec2, Vec2>> clip_segment(const Vec2& p0, const Vec2& p1, double hw, double length) {
  const Vec2 d = p1 - p0;
  double t0 = 0.0;
  double t1 = 1.0;
  const double p[4] = {-d.x(), d.x(), -d.y(), d.y()};
  const double q[4] = {p0.x() + hw, hw - p0.x(), p0.y(), length - p0.y()};
  for (int i = 0; i < 4; ++i) {
    if (std::abs(p[i]) < 1e-15) {
      if (q[i] < 0.0) {
        return std::nullopt;
      }
      continue;
    }
    const double r = q[i] / p[i];
    if (p[i] < 0.0) {
      t0 = std::max(t0, r);
    } else {
      t1 = std::min(t1, r);
    }
  }
  if (t0 > t1) {
    return std::nullopt;
  }
  return std::make_pair(Vec2(p0 + t0 * d), Vec2(p0 + t1 * d));
}

// Grid traversal (Amanatides & Woo) marking every cell the segment crosses.
void trace_free(LocalMap& map, const Vec2& from, const Vec2& to) {
  const double hw = map.footprint().half_width();
  const auto clipped = clip_segment(from, to, hw, map.footprint().length);
  if (!clipped) {
    return;
  }
  const auto [a, b] = *clipped;
  const auto start = map.cell_of(a);
  const auto end = map.cell_of(b);
  if (!start || !end) {
    return;
  }
  const double res = map.resolution();
  const double gx0 = (a.x() + hw) / res;
  const double gy0 = a.y() / res;
  const double dx = (b.x() - a.x()) / res;
  const double dy = (b.y() - a.y()) / res;
  int col = start->first;
  int row = start->second;
  const int step_x = dx > 0 ? 1 : (dx < 0 ? -1 : 0);
  const int step_y = dy > 0 ? 1 : (dy < 0 ? -1 : 0);
  const double inf = std::numeric_limits<double>::infinity();
  double t_max_x = step_x == 0 ? inf : ((step_x > 0 ? col + 1 : col) - gx0) / dx;
  double t_max_y = step_y == 0 ? inf : ((step_y > 0 ? row + 1 : row) - gy0) / dy;
  const double t_delta_x = step_x == 0 ? inf : std::abs(1.0 / dx);
  const double t_delta_y = step_y == 0 ? inf : std::abs(1.0 / dy);
  const int max_steps = map.cols() + map.rows() + 2;
  for (int i = 0; i <= max_steps; ++i) {
    if (col < 0 || col >= map.cols() || row < 0 || row >= map.rows()) {
      break;
    }
    map.set(col, row, Occupancy::Free);
    if (col == end->first && row == end->second) {
      break;
    }
    if (t_max_x < t_max_y) {
      if (t_max_x > 1.0) break;
      col += step_x;
      t_max_x += t_delta_x;
    } else {
      if (t_max_y > 1.0) break;
      row += step_y;
      t_max_y += t_delta_y;
    }
  }
}

}  // namespace

LocalMap build_local_map(const GroundBoundary& boundary, double resolution) {
  using Kind = GroundBoundaryEntry::Kind;
  LocalMap map(resolution, boundary.footprint);
  for (std::size_t col = 0; col < boundary.size(); ++col) {
    const auto& e = boundary.entries[col];
    const auto& ray = boundary.rays[col];
    if (e.kind == Kind::Clear) {
      trace_free(map, ray.near, ray.far);
    } else if (e.kind == Kind::Obstacle) {
      trace_free(map, ray.near, *e.point);
    }
  }
  for (const auto& e : boundary.entries) {
    if (e.kind == Kind::Obstacle) {
      if (const auto cell = map.cell_of(*e.point)) {
        map.set(cell->first, cell->second, Occupancy::Occupied);
      }
    }
  }
  return map;
}

GlobalMap::GlobalMap(double resolution, LogOddsParams params) : resolution_(resolution), params_(params) {
  if (!(resolution > 0.0)) {
    throw Error(ErrorCode::InvalidInput, "global map resolution must be > 0");
  }
}

CellIndex GlobalMap::cell_of(const Vec2& world) const {
  return {static_cast<std::int64_t>(std::floor(world.x() / resolution_)),
          static_cast<std::int64_t>(std::floor(world.y() / resolution_))};
}

Vec2 GlobalMap::cell_center(CellIndex c) const {
  return {(static_cast<double>(c.x) + 0.5) * resolution_, (static_cast<double>(c.y) + 0.5) * resolution_};
}

bool GlobalMap::contains(CellIndex c) const {
  return !empty() && c.x >= min_cell_.x && c.x < min_cell_.x + width_ && c.y >= min_cell_.y &&
         c.y < min_cell_.y + height_;
}

double GlobalMap::log_odds(CellIndex c) const { return contains(c) ? log_odds_[index(c)] : 0.0; }

std::uint32_t GlobalMap::observations(CellIndex c) const { return contains(c) ? observations_[index(c)] : 0; }

Occupancy GlobalMap::classify(double l) const {
  const double p = 1.0 / (1.0 + std::exp(-l));
  if (p > params_.occupied_probability) {
    return Occupancy::Occupied;
  }
  if (p < params_.free_probability) {
    return Occupancy::Free;
  }
  return Occupancy::Unknown;
}

Occupancy GlobalMap::state(CellIndex c) const { return classify(log_odds(c)); }

void GlobalMap::ensure(CellIndex lo, CellIndex hi) {
  CellIndex new_min = lo;
  CellIndex new_max = hi;
  if (!empty()) {
    new_min = {std::min(lo.x, min_cell_.x), std::min(lo.y, min_cell_.y)};
    new_max = {std::max(hi.x, min_cell_.x + width_ - 1), std::max(hi.y, min_cell_.y + height_ - 1)};
    if (new_min == min_cell_ && new_max.x == min_cell_.x + width_ - 1 && new_max.y == min_cell_.y + height_ - 1) {
      return;
    }
  }
  const int new_width = static_cast<int>(new_max.x - new_min.x + 1);
  const int new_height = static_cast<int>(new_max.y - new_min.y + 1);
  std::vector<double> lo_odds(static_cast<std::size_t>(new_width) * new_height, 0.0);
  std::vector<std::uint32_t> obs(lo_odds.size(), 0);
  for (int row = 0; row < height_; ++row) {
    for (int col = 0; col < width_; ++col) {
      const std::size_t src = static_cast<std::size_t>(row) * width_ + col;
      const std::size_t dst = static_cast<std::size_t>(row + (min_cell_.y - new_min.y)) * new_width +
                              static_cast<std::size_t>(col + (min_cell_.x - new_min.x));
      lo_odds[dst] = log_odds_[src];
      obs[dst] = observations_[src];
    }
  }
  log_odds_ = std::move(lo_odds);
  observations_ = std::move(obs);
  min_cell_ = new_min;
  width_ = new_width;
  height_ = new_height;
}

void GlobalMap::set_log_odds(CellIndex c, double value) {
  ensure(c, c);
  log_odds_[index(c)] = std::clamp(value, -params_.clamp, params_.clamp);
}

GridPatch GlobalMap::apply_updates(const std::vector<std::pair<CellIndex, Occupancy>>& updates) {
  GridPatch patch;
  patch.epoch = ++epoch_;
  if (updates.empty()) {
    return patch;
  }
  CellIndex lo = updates.front().first;
  CellIndex hi = lo;
  for (const auto& [c, _] : updates) {
    lo = {std::min(lo.x, c.x), std::min(lo.y, c.y)};
    hi = {std::max(hi.x, c.x), std::max(hi.y, c.y)};
  }
  ensure(lo, hi);
  for (const auto& [c, occ] : updates) {
    const double delta = occ == Occupancy::Occupied ? params_.occupied_increment
                         : occ == Occupancy::Free   ? params_.free_increment
                                                    : 0.0;
    if (delta == 0.0) {
      continue;
    }
    auto& l = log_odds_[index(c)];
    l = std::clamp(l + delta, -params_.clamp, params_.clamp);
    ++observations_[index(c)];
  }
  patch.origin_x = static_cast<std::int32_t>(lo.x);
  patch.origin_y = static_cast<std::int32_t>(lo.y);
  patch.width = static_cast<std::uint32_t>(hi.x - lo.x + 1);
  patch.height = static_cast<std::uint32_t>(hi.y - lo.y + 1);
  patch.cells.reserve(static_cast<std::size_t>(patch.width) * patch.height);
  for (std::int64_t y = lo.y; y <= hi.y; ++y) {
    for (std::int64_t x = lo.x; x <= hi.x; ++x) {
      patch.cells.push_back(state({x, y}));
    }
  }
  return patch;
}

GridPatch GlobalMap::snapshot() const {
  GridPatch patch;
  patch.epoch = epoch_;
  patch.snapshot = true;
  if (empty()) {
    return patch;
  }
  patch.origin_x = static_cast<std::int32_t>(min_cell_.x);
  patch.origin_y = static_cast<std::int32_t>(min_cell_.y);
  patch.width = static_cast<std::uint32_t>(width_);
  patch.height = static_cast<std::uint32_t>(height_);
  patch.cells.reserve(log_odds_.size());
  for (double l : log_odds_) {
    patch.cells.push_back(classify(l));
  }
  return patch;
}

GridPatch fuse_local(GlobalMap& global, const LocalMap& local, const Pose2& pose) {
  std::vector<std::pair<CellIndex, Occupancy>> updates;
  for (int row = 0; row < local.rows(); ++row) {
    for (int col = 0; col < local.cols(); ++col) {
      const Occupancy occ = local.at(col, row);
      if (occ == Occupancy::Unknown) {
        continue;
      }
      const Vec2 c = local.cell_center(col, row);
      // Local (lateral-left, forward) is the robot frame (forward, left).
      const Vec2 world = pose.transform_point({c.y(), c.x()});
      updates.emplace_back(global.cell_of(world), occ);
    }
  }
  std::sort(updates.begin(), updates.end(), [](const auto& a, const auto& b) {
    if (a.first.y != b.first.y) return a.first.y < b.first.y;
    if (a.first.x != b.first.x) return a.first.x < b.first.x;
    return a.second > b.second;  // Occupied first
  });
  updates.erase(std::unique(updates.begin(), updates.end(),
                            [](const auto& a, const auto& b) { return a.first == b.first; }),
                updates.end());
  return global.apply_updates(updates);
}

std::string encode_grid_pgm(const GridPatch& grid) {
  if (grid.empty()) {
    throw Error(ErrorCode::EmptyMap, "cannot export an empty map");
  }
  std::string out = "P5\n" + std::to_string(grid.width) + " " + std::to_string(grid.height) + "\n255\n";
  for (std::uint32_t row = grid.height; row-- > 0;) {
    for (std::uint32_t col = 0; col < grid.width; ++col) {
      switch (grid.at(col, row)) {
        case Occupancy::Free: out.push_back(static_cast<char>(254)); break;
        case Occupancy::Occupied: out.push_back(static_cast<char>(0)); break;
        case Occupancy::Unknown: out.push_back(static_cast<char>(205)); break;
      }
    }
  }
  return out;
}

std::string encode_map_pgm(const GlobalMap& global) {
  if (global.empty()) {
    throw Error(ErrorCode::EmptyMap, "cannot export an empty map");
  }
  return encode_grid_pgm(global.snapshot());
}

std::string encode_map_metadata(const GlobalMap& global, const std::string& image_name) {
  if (global.empty()) {
    throw Error(ErrorCode::EmptyMap, "cannot export an empty map");
  }
  char buf[512];
  const Vec2 origin = global.origin();
  const int n = std::snprintf(buf, sizeof(buf),
                              "image: %s\nresolution: %.6f\norigin: [%.6f, %.6f, 0.0]\nwidth: %d\nheight: %d\n"
                              "negate: 0\noccupied_thresh: %.2f\nfree_thresh: %.2f\n",
                              image_name.c_str(), global.resolution(), origin.x(), origin.y(), global.width(),
                              global.height(), global.params().occupied_probability,
                              global.params().free_probability);
  return std::string(buf, static_cast<std::size_t>(n));
}

void export_map(const GlobalMap& global, const std::string& stem) {
  const std::string pgm = encode_map_pgm(global);
  const auto slash = stem.find_last_of('/');
  const std::string image_name = (slash == std::string::npos ? stem : stem.substr(slash + 1)) + ".pgm";
  const std::string meta = encode_map_metadata(global, image_name);
  for (const auto& [path, bytes] : {std::pair{stem + ".pgm", pgm}, std::pair{stem + ".yaml", meta}}) {
    std::ofstream out(path, std::ios::binary);
    if (!out) {
      throw Error(ErrorCode::Io, "cannot write " + path);
    }
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!out) {
      throw Error(ErrorCode::Io, "write failed for " + path);
    }
  }
}

namespace {

double point_segment_distance(const Vec2& p, const Vec2& a, const Vec2& b) {
  const Vec2 ab = b - a;
  const double len2 = ab.squaredNorm();
  double t = len2 > 0.0 ? (p - a).dot(ab) / len2 : 0.0;
  t = std::clamp(t, 0.0, 1.0);
  return (p - (a + t * ab)).norm();
}

}  // namespace

double map_iou(const GlobalMap& global, const Scene& scene, double band, std::span<const Vec2> viewpoints) {
  if (scene.obstacles.empty()) {
    return 1.0;
  }
  if (global.empty()) {
    return 0.0;
  }
  struct Edge {
    Vec2 a;
    Vec2 b;
  };
  std::vector<Edge> edges;
  for (const auto& obstacle : scene.obstacles) {
    const auto outline = footprint_outline(obstacle.footprint);
    for (std::size_t i = 0; i < outline.size(); ++i) {
      const Vec2& a = outline[i];
      const Vec2& b = outline[(i + 1) % outline.size()];
      const Vec2 normal(b.y() - a.y(), a.x() - b.x());
      const Vec2 mid = 0.5 * (a + b);
      const bool facing = viewpoints.empty() || std::any_of(viewpoints.begin(), viewpoints.end(), [&](const Vec2& v) {
                            return normal.dot(v - mid) > 0.0;
                          });
      if (facing) {
        edges.push_back({a, b});
      }
    }
  }

  const double res = global.resolution();
  const int margin = static_cast<int>(std::ceil(band / res)) + 1;
  const CellIndex lo{global.min_cell().x - margin, global.min_cell().y - margin};
  const CellIndex hi{global.min_cell().x + global.width() - 1 + margin, global.min_cell().y + global.height() - 1 + margin};
  const double reach = band + 1e-9;

  std::size_t inter = 0;
  std::size_t uni = 0;
  for (std::int64_t y = lo.y; y <= hi.y; ++y) {
    for (std::int64_t x = lo.x; x <= hi.x; ++x) {
      const Vec2 center = global.cell_center({x, y});
      bool near_occupied = false;
      bool near_observed = false;
      for (std::int64_t dy = -margin; dy <= margin && !(near_occupied && near_observed); ++dy) {
        for (std::int64_t dx = -margin; dx <= margin; ++dx) {
          const CellIndex n{x + dx, y + dy};
          if (!global.contains(n) || (global.cell_center(n) - center).norm() > reach) {
            continue;
          }
          near_observed = near_observed || global.observations(n) > 0;
          near_occupied = near_occupied || global.state(n) == Occupancy::Occupied;
        }
      }
      bool truth = false;
      if (near_observed) {
        for (const auto& e : edges) {
          if (point_segment_distance(center, e.a, e.b) <= reach) {
            truth = true;
            break;
          }
        }
      }
      inter += (near_occupied && truth) ? 1 : 0;
      uni += (near_occupied || truth) ? 1 : 0;
    }
  }
  return uni == 0 ? 0.0 : static_cast<double>(inter) / static_cast<double>(uni);
}

}  // namespace groundmap
