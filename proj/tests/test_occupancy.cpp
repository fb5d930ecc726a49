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

#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>

#include "groundmap/errors.hpp"
#include "groundmap/occupancy.hpp"

namespace groundmap {
namespace {

using Kind = GroundBoundaryEntry::Kind;

// One-column boundary along the centerline with an explicit ray.
GroundBoundary centerline_boundary(Kind kind, std::optional<Vec2> point = std::nullopt) {
  GroundBoundary b;
  GroundBoundaryEntry e;
  e.kind = kind;
  e.point = point;
  b.entries.push_back(e);
  b.rays.push_back({{0.0, 0.0}, {0.0, 2.5}});
  return b;
}

// Many-column boundary: every ray parallel to the forward axis, spread across the footprint.
GroundBoundary parallel_boundary(Kind kind, int columns = 200) {
  GroundBoundary b;
  for (int i = 0; i < columns; ++i) {
    const double x = -0.55 + 1.1 * (i + 0.5) / columns;
    GroundBoundaryEntry e;
    e.kind = kind;
    if (kind != Kind::Clear) {
      e.point = Vec2(x, 1.0);
      e.row = 100;
    }
    b.entries.push_back(e);
    b.rays.push_back({{x, 0.0}, {x, 2.5}});
  }
  return b;
}

double logit(double p) { return std::log(p / (1.0 - p)); }

TEST(LocalMap, DimensionsFollowFootprint) {
  const LocalMap m(0.05);
  EXPECT_EQ(m.cols(), 22);
  EXPECT_EQ(m.rows(), 50);
  EXPECT_EQ(m.cell_count(), 1100u);
  for (double r : {0.05, 0.1, 0.07, 0.03}) {
    const LocalMap lm(r);
    EXPECT_EQ(lm.cols(), static_cast<int>(std::ceil(1.1 / r - 1e-9)));
    EXPECT_EQ(lm.rows(), static_cast<int>(std::ceil(2.5 / r - 1e-9)));
    EXPECT_EQ(build_local_map(parallel_boundary(Kind::Clear), r).cell_count(), lm.cell_count());
  }
  EXPECT_THROW(LocalMap(0.0), Error);
}

TEST(LocalMap, AllClearIsAllFree) {
  const LocalMap m = build_local_map(parallel_boundary(Kind::Clear), 0.05);
  for (auto c : m.cells()) {
    EXPECT_EQ(c, Occupancy::Free);
  }
}

TEST(LocalMap, AllFilteredIsAllUnknown) {
  const LocalMap m = build_local_map(parallel_boundary(Kind::Filtered), 0.05);
  for (auto c : m.cells()) {
    EXPECT_EQ(c, Occupancy::Unknown);
  }
}

TEST(LocalMap, SingleObstacleOnCenterline) {
  const double r = 0.05;
  const LocalMap m = build_local_map(centerline_boundary(Kind::Obstacle, Vec2(0.0, 1.0)), r);
  // Analytic indexing: column spans [-0.55 + i r, ...), row spans [j r, ...).
  const int col = static_cast<int>(std::floor((0.0 + 0.55) / r));
  const int occ_row = static_cast<int>(std::floor(1.0 / r));
  EXPECT_EQ(occ_row, 20);
  EXPECT_EQ(m.at(col, occ_row), Occupancy::Occupied);
  const Vec2 center = m.cell_center(col, occ_row);
  EXPECT_NEAR(center.x(), 0.0, r);
  EXPECT_NEAR(center.y(), 1.0, r);
  for (int row = 0; row < occ_row; ++row) {
    EXPECT_EQ(m.at(col, row), Occupancy::Free) << row;
  }
  for (int row = occ_row + 1; row < m.rows(); ++row) {
    EXPECT_EQ(m.at(col, row), Occupancy::Unknown) << row;
  }
  int touched = 0;
  for (int c = 0; c < m.cols(); ++c) {
    for (int row = 0; row < m.rows(); ++row) {
      touched += m.at(c, row) != Occupancy::Unknown;
    }
  }
  EXPECT_EQ(touched, occ_row + 1);
}

TEST(GlobalMap, Thresholds) {
  const GlobalMap g;
  EXPECT_EQ(g.classify(0.0), Occupancy::Unknown);
  EXPECT_EQ(g.classify(logit(0.85) + 1e-9), Occupancy::Occupied);
  EXPECT_EQ(g.classify(logit(0.15) - 1e-9), Occupancy::Free);
  EXPECT_EQ(g.classify(logit(0.85) - 1e-6), Occupancy::Unknown);
}

TEST(GlobalMap, IdentityFuseReproducesLocal) {
  LocalMap local(0.05);
  std::mt19937_64 rng(51);
  for (int c = 0; c < local.cols(); ++c) {
    for (int row = 0; row < local.rows(); ++row) {
      local.set(c, row, static_cast<Occupancy>(rng() % 3));
    }
  }
  GlobalMap g(0.05);
  fuse_local(g, local, Pose2::identity());
  for (int c = 0; c < local.cols(); ++c) {
    for (int row = 0; row < local.rows(); ++row) {
      const Vec2 lc = local.cell_center(c, row);
      const CellIndex gc{static_cast<std::int64_t>(std::floor(lc.y() / 0.05)),
                         static_cast<std::int64_t>(std::floor(lc.x() / 0.05))};
      EXPECT_EQ(g.state(gc), local.at(c, row)) << c << "," << row;
    }
  }
}

TEST(GlobalMap, TwiceFusedIsStable) {
  LocalMap local = build_local_map(centerline_boundary(Kind::Obstacle, Vec2(0.0, 1.0)), 0.05);
  GlobalMap once(0.05), twice(0.05);
  fuse_local(once, local, {});
  fuse_local(twice, local, {});
  fuse_local(twice, local, {});
  const auto a = once.snapshot();
  const auto b = twice.snapshot();
  EXPECT_EQ(a.cells, b.cells);
  // Hand computation: occupied 2.0 then 4.0 (clamped at 4); free -1.8 then -3.6.
  const CellIndex occ = twice.cell_of({1.025, 0.025});
  EXPECT_DOUBLE_EQ(once.log_odds(occ), 2.0);
  EXPECT_DOUBLE_EQ(twice.log_odds(occ), 4.0);
  const CellIndex free = twice.cell_of({0.525, 0.025});
  EXPECT_DOUBLE_EQ(once.log_odds(free), -1.8);
  EXPECT_DOUBLE_EQ(twice.log_odds(free), -3.6);
}

TEST(GlobalMap, RotatedFuseMatchesRotationOracle) {
  LocalMap local = build_local_map(centerline_boundary(Kind::Obstacle, Vec2(0.2, 1.0)), 0.05);
  int oc = -1, orow = -1;
  for (int c = 0; c < local.cols(); ++c) {
    for (int row = 0; row < local.rows(); ++row) {
      if (local.at(c, row) == Occupancy::Occupied) {
        oc = c;
        orow = row;
      }
    }
  }
  ASSERT_GE(oc, 0);
  GlobalMap g(0.05);
  const Pose2 pose{1.0, -2.0, kPi / 2};
  fuse_local(g, local, pose);
  const Vec2 lc = local.cell_center(oc, orow);
  // Robot frame (forward, left) = (lc.y, lc.x); rotate by +90 deg then translate.
  const Vec2 world(1.0 - lc.x(), -2.0 + lc.y());
  EXPECT_EQ(g.state(g.cell_of(world)), Occupancy::Occupied);
  std::size_t occupied = 0;
  const auto snap = g.snapshot();
  for (auto c : snap.cells) {
    occupied += c == Occupancy::Occupied;
  }
  EXPECT_EQ(occupied, 1u);
  // Footprint extends along +y in the world after the rotation.
  EXPECT_GT(snap.height, snap.width);
}

TEST(GlobalMap, DisjointFusesCommute) {
  const LocalMap a = build_local_map(parallel_boundary(Kind::Obstacle), 0.05);
  const LocalMap b = build_local_map(parallel_boundary(Kind::Clear), 0.05);
  const Pose2 pa{0.0, 0.0, 0.3};
  const Pose2 pb{10.0, 5.0, -1.2};
  GlobalMap ab(0.05), ba(0.05);
  fuse_local(ab, a, pa);
  fuse_local(ab, b, pb);
  fuse_local(ba, b, pb);
  fuse_local(ba, a, pa);
  EXPECT_EQ(ab.snapshot(), ba.snapshot());
}

TEST(GlobalMap, GrowingKeepsCells) {
  GlobalMap g(0.05);
  g.set_log_odds({0, 0}, 3.0);
  g.set_log_odds({-20, 35}, -3.0);
  g.ensure({100, -100}, {101, -99});
  EXPECT_DOUBLE_EQ(g.log_odds({0, 0}), 3.0);
  EXPECT_DOUBLE_EQ(g.log_odds({-20, 35}), -3.0);
  EXPECT_EQ(g.state({0, 0}), Occupancy::Occupied);
  EXPECT_EQ(g.min_cell(), (CellIndex{-20, -100}));
}

TEST(GlobalMap, SingleFreeNeverClearsOccupied) {
  std::mt19937_64 rng(52);
  for (int trial = 0; trial < 2000; ++trial) {
    GlobalMap g(0.05);
    for (int i = 0; i < 12; ++i) {
      const Occupancy before = g.state({0, 0});
      const Occupancy obs = static_cast<Occupancy>(rng() % 3);
      g.apply_updates({{{0, 0}, obs}});
      const double l = g.log_odds({0, 0});
      EXPECT_GE(l, -4.0);
      EXPECT_LE(l, 4.0);
      if (before == Occupancy::Occupied && obs == Occupancy::Free) {
        EXPECT_NE(g.state({0, 0}), Occupancy::Free);
      }
    }
  }
}

TEST(GlobalMap, UpdatesStayInsideFootprint) {
  const LocalMap local = build_local_map(parallel_boundary(Kind::Clear), 0.05);
  std::mt19937_64 rng(53);
  std::uniform_real_distribution<double> u(-5.0, 5.0);
  for (int trial = 0; trial < 20; ++trial) {
    const Pose2 pose{u(rng), u(rng), normalize_angle(u(rng))};
    GlobalMap g(0.05);
    fuse_local(g, local, pose);
    const auto snap = g.snapshot();
    for (std::uint32_t row = 0; row < snap.height; ++row) {
      for (std::uint32_t col = 0; col < snap.width; ++col) {
        if (snap.at(col, row) == Occupancy::Unknown) {
          continue;
        }
        const Vec2 center = g.cell_center({static_cast<std::int64_t>(snap.origin_x) + col, static_cast<std::int64_t>(snap.origin_y) + row});
        const Pose2 rel = between(pose, {center.x(), center.y(), 0.0});
        // Cell centers are within one cell diagonal of the footprint rectangle.
        const double slack = 0.05 * std::sqrt(2.0);
        EXPECT_GE(rel.x, -slack);
        EXPECT_LE(rel.x, 2.5 + slack);
        EXPECT_LE(std::abs(rel.y), 0.55 + slack);
      }
    }
  }
}

TEST(Export, TwoByTwoBytes) {
  GlobalMap g(0.05);
  // North row: Free, Occupied. South row: Unknown, Free.
  g.set_log_odds({0, 1}, -4.0);
  g.set_log_odds({1, 1}, 4.0);
  g.set_log_odds({0, 0}, 0.0);
  g.set_log_odds({1, 0}, -4.0);
  const std::string pgm = encode_map_pgm(g);
  const std::string header = "P5\n2 2\n255\n";
  ASSERT_EQ(pgm.size(), header.size() + 4);
  EXPECT_EQ(pgm.substr(0, header.size()), header);
  const std::string payload = pgm.substr(header.size());
  EXPECT_EQ(static_cast<unsigned char>(payload[0]), 0xFE);
  EXPECT_EQ(static_cast<unsigned char>(payload[1]), 0x00);
  EXPECT_EQ(static_cast<unsigned char>(payload[2]), 0xCD);
  EXPECT_EQ(static_cast<unsigned char>(payload[3]), 0xFE);
}

TEST(Export, EmptyMapFails) {
  const GlobalMap g(0.05);
  try {
    encode_map_pgm(g);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::EmptyMap);
  }
  EXPECT_THROW(export_map(g, "/tmp/never"), Error);
}

TEST(Export, WritesImageAndMetadata) {
  GlobalMap g(0.05);
  g.set_log_odds({-2, 3}, 4.0);
  const auto dir = std::filesystem::temp_directory_path() / "groundmap_export_test";
  std::filesystem::create_directories(dir);
  export_map(g, (dir / "m").string());
  std::ifstream meta(dir / "m.yaml");
  std::string text((std::istreambuf_iterator<char>(meta)), std::istreambuf_iterator<char>());
  EXPECT_NE(text.find("image: m.pgm"), std::string::npos);
  EXPECT_NE(text.find("resolution: 0.050000"), std::string::npos);
  EXPECT_NE(text.find("origin: [-0.100000, 0.150000, 0.0]"), std::string::npos);
  EXPECT_TRUE(std::filesystem::exists(dir / "m.pgm"));
  try {
    export_map(g, "/nonexistent-dir/x/m");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::Io);
    EXPECT_NE(std::string(e.what()).find("/nonexistent-dir/x/m.pgm"), std::string::npos);
  }
}

Scene box_scene() {
  Scene s;
  s.ground_extent = {{-5, -5}, {10, 5}};
  s.obstacles.push_back({BoxFootprint{{3.0, -0.4}, {3.5, 0.4}}, 0.8, SegClass::Object});
  return s;
}

TEST(MapIou, Conventions) {
  Scene empty_scene;
  GlobalMap g(0.05);
  EXPECT_EQ(map_iou(g, empty_scene), 1.0);
  EXPECT_EQ(map_iou(g, box_scene()), 0.0);
  g.set_log_odds({0, 0}, -4.0);
  EXPECT_EQ(map_iou(g, box_scene()), 0.0);
}

TEST(MapIou, PerfectFrontEdge) {
  // Observed free space in front of the box, occupied cells on its front edge.
  std::vector<std::pair<CellIndex, Occupancy>> updates;
  for (std::int64_t x = 0; x < 60; ++x) {
    for (std::int64_t y = -8; y < 8; ++y) {
      updates.push_back({{x, y}, Occupancy::Free});
    }
  }
  for (std::int64_t y = -8; y < 8; ++y) {
    updates.push_back({{60, y}, Occupancy::Occupied});
  }
  GlobalMap g(0.05);
  g.apply_updates(updates);
  const std::vector<Vec2> viewpoints{{0.0, 0.0}};
  const double iou = map_iou(g, box_scene(), 0.1, viewpoints);
  EXPECT_GE(iou, 0.7);
  EXPECT_LE(iou, 1.0);
  // Shifting the mapped edge a metre away destroys the overlap.
  for (auto& [cell, occ] : updates) {
    if (occ == Occupancy::Occupied) {
      cell.x = 40;
    } else if (cell.x >= 40) {
      occ = Occupancy::Unknown;
    }
  }
  GlobalMap shifted(0.05);
  shifted.apply_updates(updates);
  EXPECT_LT(map_iou(shifted, box_scene(), 0.1, viewpoints), 0.1);
}

}  // namespace
}  // namespace groundmap
