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

#include <random>

#include "groundmap/errors.hpp"
#include "groundmap/pipeline.hpp"
#include "groundmap/scenario.hpp"
#include "groundmap/wire.hpp"

namespace groundmap {
namespace {

GridPatch random_patch(std::mt19937_64& rng) {
  GridPatch p;
  p.epoch = rng() >> (rng() % 64);
  p.snapshot = rng() % 2 == 0;
  p.origin_x = static_cast<std::int32_t>(rng());
  p.origin_y = static_cast<std::int32_t>(rng());
  p.width = static_cast<std::uint32_t>(rng() % 80);
  p.height = static_cast<std::uint32_t>(rng() % 80);
  const std::size_t n = static_cast<std::size_t>(p.width) * p.height;
  const int run_bias = static_cast<int>(rng() % 4);
  Occupancy cur = Occupancy::Unknown;
  for (std::size_t i = 0; i < n; ++i) {
    if (run_bias == 0 || rng() % (1u << (2 * run_bias)) == 0) {
      cur = static_cast<Occupancy>(rng() % 3);
    }
    p.cells.push_back(cur);
  }
  return p;
}

TEST(GridPatchCodec, RandomRoundTrip) {
  std::mt19937_64 rng(71);
  for (int i = 0; i < 1000; ++i) {
    const GridPatch p = random_patch(rng);
    const auto bytes = wire::encode_grid_patch(p);
    EXPECT_EQ(wire::decode_grid_patch(bytes), p) << "trial " << i;
  }
}

TEST(GridPatchCodec, EmptyDeltaIsHeaderOnly) {
  GridPatch p;
  p.epoch = 5;
  const auto bytes = wire::encode_grid_patch(p);
  EXPECT_EQ(bytes.size(), wire::kPatchHeaderSize);
  EXPECT_EQ(wire::decode_grid_patch(bytes), p);
}

TEST(GridPatchCodec, HeaderLayout) {
  GridPatch p;
  p.epoch = 0x0102030405060708ull;
  p.snapshot = true;
  p.origin_x = -2;
  p.origin_y = 3;
  p.width = 2;
  p.height = 1;
  p.cells = {Occupancy::Free, Occupancy::Free};
  const auto b = wire::encode_grid_patch(p);
  const std::vector<std::uint8_t> want = {'G', 'P', 1, 1,                      //
                                          8, 7, 6, 5, 4, 3, 2, 1,              // epoch
                                          0xFE, 0xFF, 0xFF, 0xFF,              // origin_x = -2
                                          3, 0, 0, 0, 2, 0, 0, 0, 1, 0, 0, 0,  // origin_y, width, height
                                          1, 2};                               // one run of 2 free
  EXPECT_EQ(b, want);
}

TEST(GridPatchCodec, LocalFootprintCompresses) {
  // 22 x 50 footprint, every run at least 3 cells long.
  GridPatch p;
  p.width = 22;
  p.height = 50;
  std::mt19937_64 rng(72);
  while (p.cells.size() < 1100) {
    const auto state = static_cast<Occupancy>(rng() % 3);
    const std::size_t len = std::min<std::size_t>(3 + rng() % 10, 1100 - p.cells.size());
    p.cells.insert(p.cells.end(), len, state);
  }
  const auto bytes = wire::encode_grid_patch(p);
  // Raw form: one byte per cell after the same header.
  EXPECT_LT(bytes.size(), wire::kPatchHeaderSize + p.cells.size());
  // Each run costs at most 2 bytes (state + single-byte count below 128).
  EXPECT_LE(bytes.size(), wire::kPatchHeaderSize + 2 * (1100 / 3 + 1));
}

TEST(GridPatchCodec, MalformedFrames) {
  GridPatch p;
  p.width = 2;
  p.height = 2;
  p.cells.assign(4, Occupancy::Occupied);
  const auto good = wire::encode_grid_patch(p);
  auto bad_magic = good;
  bad_magic[0] = 'X';
  EXPECT_THROW(wire::decode_grid_patch(bad_magic), Error);
  auto truncated = good;
  truncated.pop_back();
  EXPECT_THROW(wire::decode_grid_patch(truncated), Error);
  auto trailing = good;
  trailing.push_back(0);
  EXPECT_THROW(wire::decode_grid_patch(trailing), Error);
  auto bad_state = good;
  bad_state[wire::kPatchHeaderSize] = 7;
  EXPECT_THROW(wire::decode_grid_patch(bad_state), Error);
  EXPECT_THROW(wire::decode_grid_patch(std::vector<std::uint8_t>(5, 0)), Error);
}

TEST(GridReconstructor, FollowsGlobalMap) {
  std::mt19937_64 rng(73);
  GlobalMap g(0.05);
  wire::GridReconstructor client;
  LocalMap local(0.05);
  for (int c = 0; c < local.cols(); ++c) {
    for (int r = 0; r < local.rows(); ++r) {
      local.set(c, r, static_cast<Occupancy>(rng() % 3));
    }
  }
  std::uniform_real_distribution<double> u(-3.0, 3.0);
  for (int i = 0; i < 50; ++i) {
    const GridPatch delta = fuse_local(g, local, {u(rng), u(rng), u(rng)});
    if (i == 0) {
      EXPECT_EQ(client.apply(delta), wire::GridReconstructor::Result::NeedSnapshot);
      EXPECT_EQ(client.apply(g.snapshot()), wire::GridReconstructor::Result::Applied);
      continue;
    }
    const auto decoded = wire::decode_grid_patch(wire::encode_grid_patch(delta));
    ASSERT_EQ(client.apply(decoded), wire::GridReconstructor::Result::Applied);
    ASSERT_EQ(client.grid(), g.snapshot()) << "epoch " << g.epoch();
  }
  // A skipped epoch forces a resync.
  fuse_local(g, local, {});
  const GridPatch next = fuse_local(g, local, {1.0, 1.0, 0.0});
  EXPECT_EQ(client.apply(next), wire::GridReconstructor::Result::NeedSnapshot);
  EXPECT_FALSE(client.synced());
  client.apply(g.snapshot());
  EXPECT_TRUE(client.synced());
  EXPECT_EQ(client.grid(), g.snapshot());
}

TEST(GridReconstructor, DriveByClientMatchesServerExport) {
  Pipeline pipeline(load_scenario(std::string(GROUNDMAP_SCENARIO_DIR) + "/drive-by.yaml"));
  auto sub = pipeline.bus().subscribe(topics::kGlobalMap, 1 << 12);
  wire::GridReconstructor client;
  bool joined = false;
  std::size_t deltas = 0;
  while (!pipeline.finished()) {
    pipeline.step();
    while (auto env = sub.try_pop()) {
      const auto& msg = env->get<GlobalMapMsg>();
      if (!joined) {
        ASSERT_TRUE(msg.snapshot.has_value()) << "first map message must carry a snapshot";
        joined = true;
      }
      const auto wire_delta = wire::decode_grid_patch(wire::encode_grid_patch(msg.patch));
      if (client.apply(wire_delta) == wire::GridReconstructor::Result::Applied) {
        ++deltas;
      } else {
        ASSERT_TRUE(msg.snapshot.has_value()) << "out of sync without a snapshot to recover from";
        client.apply(wire::decode_grid_patch(wire::encode_grid_patch(*msg.snapshot)));
      }
      if (msg.snapshot) {
        ASSERT_EQ(client.grid(), *msg.snapshot);
      }
    }
  }
  ASSERT_TRUE(joined);
  EXPECT_GT(deltas, 1u);
  EXPECT_EQ(encode_grid_pgm(client.grid()), encode_map_pgm(pipeline.mapping().global_map()));
}

TEST(WireMessages, ServerMessagesAreTagged) {
  const auto s = wire::state_message(1.5, TrackingState::Tracking, true, false, true);
  EXPECT_EQ(s["schema"], 1);
  EXPECT_EQ(s["type"], "state");
  EXPECT_EQ(s["stamp"], 1.5);
  EXPECT_EQ(s["tracking"], "Tracking");
  EXPECT_EQ(s["kill"], true);
  const auto p = wire::pose_message(2.0, {1, 2, 3}, "truth", false);
  EXPECT_EQ(p["type"], "pose");
  EXPECT_EQ(p["x"], 1.0);
  const auto r = wire::report_tick_message(3.0, 4, 5, 6);
  EXPECT_EQ(r["type"], "report_tick");
  EXPECT_EQ(r["frames"], 4);
  EXPECT_EQ(wire::error_message(0.0, "nope")["type"], "error");

  BoundaryMsg b;
  b.boundary.entries.resize(512);
  const auto t = wire::boundary_thumbnail_message(1.0, b, 64);
  EXPECT_EQ(t["type"], "boundary_thumbnail");
  EXPECT_EQ(t["samples"].size(), 64u);
  EXPECT_EQ(t["columns"], 512);
}

TEST(WireMessages, ClientRequestsRoundTrip) {
  const auto cmd = wire::parse_client_message(wire::cmd_vel_request(1.0, 0.5, -0.1).dump());
  ASSERT_TRUE(std::holds_alternative<wire::CmdVelRequest>(cmd));
  EXPECT_EQ(std::get<wire::CmdVelRequest>(cmd).linear, 0.5);
  EXPECT_EQ(std::get<wire::CmdVelRequest>(cmd).angular, -0.1);

  const auto kill = wire::parse_client_message(wire::kill_request(1.0, false).dump());
  ASSERT_TRUE(std::holds_alternative<wire::KillRequest>(kill));
  EXPECT_FALSE(std::get<wire::KillRequest>(kill).engage);

  const auto rel = wire::parse_client_message(wire::session_request(1.0, wire::SessionRequest::Action::Release).dump());
  ASSERT_TRUE(std::holds_alternative<wire::SessionRequest>(rel));
  EXPECT_EQ(std::get<wire::SessionRequest>(rel).action, wire::SessionRequest::Action::Release);

  for (const char* bad : {"not json", "[]", R"({"schema":2,"type":"kill","stamp":0,"engage":true})",
                          R"({"schema":1,"type":"dance","stamp":0})",
                          R"({"schema":1,"type":"cmd_vel","stamp":0,"linear":"fast","angular":0})",
                          R"({"schema":1,"type":"session_control","stamp":0,"action":"steal"})",
                          R"({"schema":1,"type":"kill","engage":true})"}) {
    EXPECT_THROW(wire::parse_client_message(bad), Error) << bad;
  }
}

}  // namespace
}  // namespace groundmap
