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

#include <filesystem>
#include <fstream>
#include <random>

#include "groundmap/bus_log.hpp"
#include "groundmap/errors.hpp"
#include "groundmap/message_codec.hpp"

namespace groundmap {
namespace {

PipelineEnvelope envelope(const std::string& topic, Message msg, double stamp = 1.25) {
  PipelineEnvelope env;
  env.header = {topic, "pub", 3, 17, stamp};
  env.payload = std::make_shared<const Message>(std::move(msg));
  return env;
}

SegMask sample_mask() {
  std::mt19937_64 rng(61);
  SegMask m(16, 8);
  for (int r = 0; r < 8; ++r) {
    for (int c = 0; c < 16; ++c) {
      m.set(c, r, static_cast<SegClass>(r < 3 ? 4 : (rng() % 4 == 0 ? 2 : 1)));
    }
  }
  return m;
}

GroundBoundary sample_boundary() {
  const CameraModel cam;
  RawBoundary raw;
  raw.entries.assign(static_cast<std::size_t>(cam.width), {});
  for (int c = 200; c < 300; ++c) {
    raw.entries[static_cast<std::size_t>(c)] = {c == 250 ? 150 : 200, SegClass::Object};
  }
  raw.entries[10] = {60, SegClass::Person};
  return filter_boundary(raw, build_homography(cam));
}

std::vector<PipelineEnvelope> one_of_each() {
  std::vector<PipelineEnvelope> out;
  out.push_back(envelope(topics::kWheelOdom, WheelOdomMsg{{1.5, -2.25, 0.3}, {0.05, 0.0, 0.01}}));
  VisualOdomMsg vo;
  vo.pose.position = Vec3(0.37, 0.1, 0.0);
  vo.pose.yaw = -0.7;
  out.push_back(envelope(topics::kVisualOdom, vo));
  out.push_back(envelope(topics::kSlamEvent, SlamEventMsg{SlamEvent::RelocalizedEvent}));
  out.push_back(envelope(topics::kSlamState, TrackingStateMsg{TrackingState::TrackingLost}));
  out.push_back(envelope(topics::kScaledOdom, ScaledOdomMsg{{1.0, 2.0, 3.0}, true, 2.7027027027027026}));
  out.push_back(envelope(topics::kCameraFrame, CameraFrameMsg{42}));
  auto mask = std::make_shared<const SegMask>(sample_mask());
  out.push_back(envelope(topics::kCameraMask, MaskMsg{7, mask}));
  out.push_back(envelope(topics::kKeyframe, KeyframeMsg{7, mask, {0.1, 0.2, 0.3}, true}));
  const GroundBoundary boundary = sample_boundary();
  out.push_back(envelope(topics::kBoundary, BoundaryMsg{7, boundary, {0.1, 0.2, 0.3}, true}));
  out.push_back(envelope(topics::kLocalMap, LocalMapMsg{7, build_local_map(boundary, 0.05), {0.1, 0.2, 0.3}, true}));
  GlobalMap g(0.05);
  const GridPatch patch = fuse_local(g, build_local_map(boundary, 0.05), {0.1, 0.2, 0.3});
  out.push_back(envelope(topics::kGlobalMap, GlobalMapMsg{patch, g.snapshot(), g.width(), g.height()}));
  out.push_back(envelope(topics::kGlobalMap, GlobalMapMsg{patch, std::nullopt, g.width(), g.height()}));
  out.push_back(envelope(topics::kCmdVel, CmdVelMsg{{0.5, -0.25, 1.0, CmdSource::Script}}));
  out.push_back(envelope(topics::kKill, KillMsg{true}));
  out.push_back(envelope(topics::kSimCmd, SimCmdMsg{{{1.0, 0.0, 1.0, CmdSource::Retrace}, true, false}}));
  out.push_back(envelope(topics::kTruth, TruthMsg{{3.0, 4.0, -3.0}, {0.5, 0.1}, true}));
  return out;
}

TEST(Codec, EveryMessageRoundTrips) {
  const auto all = one_of_each();
  std::size_t kinds = 0;
  std::vector<bool> seen(std::variant_size_v<Message>, false);
  for (const auto& env : all) {
    const std::string line = encode_envelope(env);
    EXPECT_EQ(line.find('\n'), std::string::npos);
    const PipelineEnvelope back = decode_envelope(line);
    EXPECT_EQ(back.header.topic, env.header.topic);
    EXPECT_EQ(back.header.publisher, env.header.publisher);
    EXPECT_EQ(back.header.seq, env.header.seq);
    EXPECT_EQ(back.header.global_seq, env.header.global_seq);
    EXPECT_EQ(back.header.stamp, env.header.stamp);
    EXPECT_EQ(back.payload->index(), env.payload->index());
    EXPECT_EQ(encode_envelope(back), line) << env.header.topic;
    if (!seen[env.payload->index()]) {
      seen[env.payload->index()] = true;
      ++kinds;
    }
  }
  EXPECT_EQ(kinds, std::variant_size_v<Message>);
}

TEST(Codec, PayloadDetailsSurvive) {
  const auto all = one_of_each();
  const auto mask_back = decode_envelope(encode_envelope(all[6]));
  EXPECT_EQ(*mask_back.get<MaskMsg>().mask, *all[6].get<MaskMsg>().mask);

  const auto b_back = decode_envelope(encode_envelope(all[8])).get<BoundaryMsg>();
  const auto& b = all[8].get<BoundaryMsg>();
  ASSERT_EQ(b_back.boundary.size(), b.boundary.size());
  for (std::size_t i = 0; i < b.boundary.size(); ++i) {
    EXPECT_EQ(b_back.boundary.entries[i].kind, b.boundary.entries[i].kind);
    EXPECT_EQ(b_back.boundary.entries[i].row, b.boundary.entries[i].row);
    EXPECT_EQ(b_back.boundary.entries[i].cls, b.boundary.entries[i].cls);
    EXPECT_EQ(b_back.boundary.entries[i].point.has_value(), b.boundary.entries[i].point.has_value());
    if (b.boundary.entries[i].point) {
      EXPECT_EQ(*b_back.boundary.entries[i].point, *b.boundary.entries[i].point);
    }
    EXPECT_EQ(b_back.boundary.rays[i].near, b.boundary.rays[i].near);
    EXPECT_EQ(b_back.boundary.rays[i].far, b.boundary.rays[i].far);
  }
  // Rebuilding the local map from a decoded boundary gives the same cells.
  EXPECT_EQ(build_local_map(b_back.boundary, 0.05), build_local_map(b.boundary, 0.05));

  const auto lm = decode_envelope(encode_envelope(all[9])).get<LocalMapMsg>();
  EXPECT_EQ(lm.map, all[9].get<LocalMapMsg>().map);

  const auto gm = decode_envelope(encode_envelope(all[10])).get<GlobalMapMsg>();
  EXPECT_EQ(gm.patch, all[10].get<GlobalMapMsg>().patch);
  ASSERT_TRUE(gm.snapshot.has_value());
  EXPECT_EQ(*gm.snapshot, *all[10].get<GlobalMapMsg>().snapshot);

  const auto cmd = decode_envelope(encode_envelope(all[12])).get<CmdVelMsg>();
  EXPECT_EQ(cmd.cmd.source, CmdSource::Script);
  EXPECT_EQ(cmd.cmd.w, -0.25);
}

TEST(Codec, RejectsMalformedLines) {
  for (const char* bad : {"", "{", "[]", R"({"topic":"nope","pub":"p","seq":1,"gseq":1,"stamp":0,"payload":{}})",
                          R"({"topic":"ctrl/kill","pub":"p","seq":1,"gseq":1,"stamp":0})",
                          R"({"topic":"ctrl/kill","pub":"p","seq":1,"gseq":1,"stamp":0,"payload":{"x":1}})"}) {
    try {
      decode_envelope(bad);
      ADD_FAILURE() << "accepted: " << bad;
    } catch (const Error& e) {
      EXPECT_EQ(e.code(), ErrorCode::CorruptLog) << bad;
    }
  }
}

std::string log_text(const std::vector<PipelineEnvelope>& envs) {
  const auto path = std::filesystem::temp_directory_path() / "groundmap_codec_log.jsonl";
  {
    BusLogWriter w(path.string(), {"demo", 9, "duration: 1.0\n"});
    for (const auto& e : envs) {
      w.write(e);
    }
  }
  std::ifstream in(path, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

TEST(BusLog, WriteThenParse) {
  const auto envs = one_of_each();
  const std::string text = log_text(envs);
  const BusLog log = parse_bus_log(text);
  EXPECT_EQ(log.meta.scenario_name, "demo");
  EXPECT_EQ(log.meta.seed, 9u);
  EXPECT_EQ(log.meta.scenario_text, "duration: 1.0\n");
  EXPECT_FALSE(log.truncated);
  ASSERT_EQ(log.envelopes.size(), envs.size());
  for (std::size_t i = 0; i < envs.size(); ++i) {
    EXPECT_EQ(encode_envelope(log.envelopes[i]), encode_envelope(envs[i]));
  }
}

TEST(BusLog, TruncatedTailIsAWarning) {
  const auto envs = one_of_each();
  const std::string text = log_text(envs);
  const std::string cut = text.substr(0, text.size() - 20);
  const BusLog log = parse_bus_log(cut, "cut.jsonl");
  EXPECT_TRUE(log.truncated);
  EXPECT_EQ(log.envelopes.size(), envs.size() - 1);
  EXPECT_NE(log.warning.find("cut.jsonl:" + std::to_string(envs.size() + 1)), std::string::npos) << log.warning;

  // Cut exactly at a line end but without the newline: complete JSON, still flagged.
  const std::string no_newline = text.substr(0, text.size() - 1);
  const BusLog log2 = parse_bus_log(no_newline);
  EXPECT_TRUE(log2.truncated);
  EXPECT_EQ(log2.envelopes.size(), envs.size());
}

TEST(BusLog, CorruptMiddleLineNamesPosition) {
  const auto envs = one_of_each();
  std::string text = log_text(envs);
  // Damage line 4 (third envelope).
  std::size_t pos = 0;
  for (int i = 0; i < 3; ++i) {
    pos = text.find('\n', pos) + 1;
  }
  text.insert(pos, "garbage");
  try {
    parse_bus_log(text, "bad.jsonl");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::CorruptLog);
    EXPECT_NE(std::string(e.what()).find("bad.jsonl:4:"), std::string::npos) << e.what();
  }
}

TEST(BusLog, HeaderIsRequired) {
  EXPECT_THROW(parse_bus_log(""), Error);
  EXPECT_THROW(parse_bus_log("{\"format\":\"other\",\"version\":1}\n"), Error);
  EXPECT_THROW(read_bus_log("/nonexistent/log.jsonl"), Error);
}

}  // namespace
}  // namespace groundmap
