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

// Acceptance suite: one PASS/FAIL line per criterion, nonzero exit on any failure.

#include <boost/asio.hpp>
#include <boost/beast/core.hpp>
#include <boost/beast/websocket.hpp>

#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <random>
#include <sstream>
#include <thread>

#include "groundmap/alignment.hpp"
#include "groundmap/boundary.hpp"
#include "groundmap/errors.hpp"
#include "groundmap/pipeline.hpp"
#include "groundmap/telemetry_server.hpp"
#include "groundmap/tracking.hpp"
#include "groundmap/wire.hpp"

namespace fs = std::filesystem;
using namespace groundmap;
using Clock = std::chrono::steady_clock;

namespace {

int failures = 0;

struct Outcome {
  bool pass = false;
  std::string detail;
};

void check(const std::string& name, const std::function<Outcome()>& body) {
  const auto t0 = Clock::now();
  Outcome out;
  try {
    out = body();
  } catch (const std::exception& e) {
    out = {false, std::string("exception: ") + e.what()};
  }
  const double secs = std::chrono::duration<double>(Clock::now() - t0).count();
  if (!out.pass) {
    ++failures;
  }
  std::printf("%s  %-34s %s (%.2f s)\n", out.pass ? "PASS" : "FAIL", name.c_str(), out.detail.c_str(), secs);
  std::fflush(stdout);
}

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof(buf), f, args...);
  return buf;
}

std::string scenario_path(const std::string& name) { return std::string(GROUNDMAP_SCENARIO_DIR) + "/" + name + ".yaml"; }

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

fs::path scratch() {
  static const fs::path dir = [] {
    auto d = fs::temp_directory_path() / "groundmap_acceptance";
    fs::remove_all(d);
    fs::create_directories(d);
    return d;
  }();
  return dir;
}

// ---------------------------------------------------------------- alignment

Outcome horn_alignment() {
  const auto t0 = Clock::now();
  std::mt19937_64 rng(1000);
  std::uniform_real_distribution<double> coord(-5.0, 5.0);
  std::uniform_real_distribution<double> log_scale(std::log(0.1), std::log(10.0));
  std::uniform_real_distribution<double> shift(-10.0, 10.0);
  std::normal_distribution<double> noise(0.0, 0.01);
  double worst = 0.0;
  int within = 0;
  double worst_rmse = 0.0;
  constexpr int kTrials = 1000;
  for (int trial = 0; trial < kTrials; ++trial) {
    std::vector<Vec3> src(10);
    for (auto& p : src) {
      p = Vec3(coord(rng), coord(rng), coord(rng));
    }
    const double s = std::exp(log_scale(rng));
    const Eigen::Quaterniond q = Eigen::Quaterniond::UnitRandom();
    const Vec3 t(shift(rng), shift(rng), shift(rng));
    std::vector<Vec3> tgt;
    for (const auto& p : src) {
      tgt.push_back(s * (q * p) + t);  // independent of the library's apply()
    }
    const auto est = estimate_similarity(src, tgt);
    const double rel_s = std::abs(est.scale() - s) / s;
    const double rel_q = est.rotation().angularDistance(q);
    const double rel_t = (est.translation() - t).norm() / std::max(1.0, t.norm());
    worst = std::max({worst, rel_s, rel_q, rel_t});

    std::vector<Vec3> noisy = tgt;
    for (auto& p : noisy) {
      p += Vec3(noise(rng), noise(rng), noise(rng));
    }
    const auto fit = estimate_similarity(src, noisy);
    double sum = 0.0;
    for (std::size_t i = 0; i < src.size(); ++i) {
      sum += (noisy[i] - (fit.scale() * (fit.rotation() * src[i]) + fit.translation())).squaredNorm();
    }
    const double rmse = std::sqrt(sum / static_cast<double>(src.size()));
    worst_rmse = std::max(worst_rmse, rmse);
    within += rmse <= 0.03 ? 1 : 0;
  }
  const double secs = seconds_since(t0);
  const bool pass = worst <= 1e-9 && within >= 990 && secs < 5.0;
  return {pass, fmt("max rel err %.2e (<= 1e-9), noisy RMSE <= 0.03 in %d/1000 (>= 990), max %.4f, %.2f s (< 5)",
                    worst, within, worst_rmse, secs)};
}

// ---------------------------------------------------------- scaled odometry

Outcome scaled_square() {
  const auto t0 = Clock::now();
  Pipeline p(load_scenario(scenario_path("square")));
  p.run();
  const double secs = seconds_since(t0);
  const auto e = p.evaluator().errors();
  if (!e.scaled_ate || !e.raw_ate) {
    return {false, "no trajectory samples"};
  }
  const bool pass = *e.scaled_ate <= 0.05 && *e.scaled_ate < *e.raw_ate && secs < 10.0;
  return {pass, fmt("scaled ATE %.2e m (<= 0.05), raw ATE %.3f m, %.2f s (< 10)", *e.scaled_ate, *e.raw_ate, secs)};
}

// ------------------------------------------------------------------ boundary

Outcome boundary_oracle() {
  const auto t0 = Clock::now();
  std::mt19937_64 rng(500);
  std::uniform_int_distribution<int> cls(0, kNumSegClasses - 1);
  int mismatches = 0;
  for (int trial = 0; trial < 500; ++trial) {
    SegMask m(64, 32);
    const int style = static_cast<int>(rng() % 3);
    for (int col = 0; col < 64; ++col) {
      for (int row = 0; row < 32; ++row) {
        auto c = static_cast<SegClass>(cls(rng));
        if (style == 1 && rng() % 8 != 0) {
          c = SegClass::Road;
        }
        m.set(col, row, c);
      }
    }
    const auto got = extract_boundary(m);
    for (int col = 0; col < 64; ++col) {
      std::optional<int> want;
      for (int row = 0; row < 32; ++row) {
        const auto c = m.at(col, row);
        if (c != SegClass::Road && c != SegClass::Sky) {
          want = row;
        }
      }
      const auto& e = got.entries.at(static_cast<std::size_t>(col));
      if (e.row != want || (want && e.cls != m.at(col, *want))) {
        ++mismatches;
      }
    }
  }
  const double secs = seconds_since(t0);
  return {mismatches == 0 && secs < 2.0, fmt("%d mismatched columns over 500 masks, %.2f s (< 2)", mismatches, secs)};
}

Outcome homography() {
  CameraModel cam;
  cam.mount_lateral_offset = 0.13;
  const Homography h = build_homography(cam);
  const int c = cam.width / 2;
  const int first = static_cast<int>(std::ceil(h.horizon_row())) + 1;
  int asym = 0;
  for (int v = first; v < cam.height; ++v) {
    for (int d = 1; d <= c; ++d) {
      const Vec2 l = h.project(c - d, v);
      const Vec2 r = h.project(c + d, v);
      asym += (l.x() != -r.x() || l.y() != r.y()) ? 1 : 0;
    }
  }
  // Ray-plane intersection built from the camera axes.
  const CameraModel plain;
  const Homography hp = build_homography(plain);
  std::mt19937_64 rng(20);
  std::uniform_int_distribution<int> col(0, plain.width - 1);
  std::uniform_int_distribution<int> row(static_cast<int>(std::ceil(plain.horizon_row())) + 1, plain.height - 1);
  double worst = 0.0;
  const double p = plain.mount_pitch;
  for (int i = 0; i < 20; ++i) {
    const int u = col(rng);
    const int v = row(rng);
    const Vec3 ray = Vec3(std::cos(p), 0.0, -std::sin(p)) + ((u - plain.cx) / plain.fx) * Vec3(0.0, -1.0, 0.0) +
                     ((v - plain.cy) / plain.fy) * Vec3(-std::sin(p), 0.0, -std::cos(p));
    const double t = plain.mount_height / -ray.z();
    const Vec2 got = hp.project(u, v);
    worst = std::max({worst, std::abs(got.x() - t * ray.y()), std::abs(got.y() - t * ray.x())});
  }
  return {asym == 0 && worst <= 1e-9,
          fmt("%d asymmetric mirrored pairs (0), max oracle error %.2e m over 20 pixels (<= 1e-9)", asym, worst)};
}

// ----------------------------------------------------------- runs and logs

struct RunOutput {
  std::string log;
  std::string map;
  RunReport report;
  double wall = 0.0;
};

RunOutput run_logged(const Scenario& sc, const std::string& tag) {
  const fs::path log = scratch() / (tag + ".jsonl");
  const auto t0 = Clock::now();
  Pipeline p(sc, PipelineOptions{std::nullopt, log.string()});
  p.run();
  p.flush_log();
  RunOutput out;
  out.wall = seconds_since(t0);
  out.report = p.report(out.wall);
  out.log = slurp(log);
  const auto& map = p.mapping().global_map();
  out.map = map.empty() ? std::string() : encode_map_pgm(map);
  fs::remove(log);
  return out;
}

std::map<std::string, RunOutput> first_runs;

Outcome frame_accounting() {
  const std::vector<std::pair<std::string, std::uint64_t>> expected = {
      {"parking", 762}, {"construction", 909}, {"parking-sunny", 570}};
  bool pass = true;
  std::string detail;
  for (const auto& [name, frames] : expected) {
    auto out = run_logged(load_scenario(scenario_path(name)), name + "-a");
    const auto got = out.report.frames_processed;
    const bool ok = (got + 1 >= frames && got <= frames + 1) && out.wall < 60.0;
    pass &= ok;
    detail += fmt("%s %llu/%llu in %.1f s; ", name.c_str(), static_cast<unsigned long long>(got),
                  static_cast<unsigned long long>(frames), out.wall);
    first_runs[name] = std::move(out);
  }
  return {pass, detail + "(+-1 frame, < 60 s each)"};
}

Outcome drive_by() {
  auto out = run_logged(load_scenario(scenario_path("drive-by")), "drive-by-a");
  const std::string golden = slurp(fs::path(GROUNDMAP_TEST_DATA_DIR) / "drive-by.pgm");
  const double iou = out.report.map_iou.value_or(0.0);
  const bool same = !golden.empty() && golden == out.map;
  first_runs["drive-by"] = std::move(out);
  return {iou >= 0.7 && same, fmt("IoU %.4f (>= 0.7), export %s golden", iou, same ? "matches" : "DIFFERS from")};
}

// ------------------------------------------------------------------- safety

Outcome fsm_audit() {
  std::mt19937_64 rng(10000);
  std::uniform_int_distribution<int> ev(0, 4);
  std::uniform_int_distribution<int> len(1, 60);
  int leaks = 0;
  int skipped_init = 0;
  std::uint64_t forwarded = 0;
  for (int seq = 0; seq < 10000; ++seq) {
    TrackingState s = TrackingState::WaitingForImages;
    bool saw_not_initialized = false;
    KeyframeGate gate;
    const int n = len(rng);
    for (int i = 0; i < n; ++i) {
      s = step_tracking(s, static_cast<SlamEvent>(ev(rng)));
      saw_not_initialized |= s == TrackingState::NotInitialized;
      if (s == TrackingState::Tracking && !saw_not_initialized) {
        ++skipped_init;
      }
      const bool out = gate.forward(i, s).has_value();
      forwarded += out ? 1 : 0;
      if (out && s != TrackingState::Tracking) {
        ++leaks;
      }
    }
  }
  return {leaks == 0 && skipped_init == 0 && forwarded > 0,
          fmt("%d masks outside Tracking, %d Tracking without NotInitialized, %llu forwarded", leaks, skipped_init,
              static_cast<unsigned long long>(forwarded))};
}

Outcome kill_switch() {
  const Scenario base = load_scenario(scenario_path("square"));
  int stopped = 0;
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    std::mt19937_64 rng(seed);
    Pipeline p(base, PipelineOptions{seed, ""});
    auto truth = p.bus().subscribe(topics::kTruth, 1 << 14);
    const std::int64_t at = std::uniform_int_distribution<std::int64_t>(1, base.total_ticks() - 2)(rng);
    while (p.tick() < at) {
      p.step();
    }
    p.bus().publish(topics::kKill, publishers::kOperator, p.now(), KillMsg{true});
    while (truth.try_pop()) {
    }
    const Pose2 before = p.sim().true_pose();
    p.step();
    bool zero = true;
    while (auto env = truth.try_pop()) {
      const auto& t = env->get<TruthMsg>();
      zero &= t.velocity.v == 0.0 && t.velocity.w == 0.0;
    }
    const Pose2 after = p.sim().true_pose();
    zero &= after.x == before.x && after.y == before.y && after.yaw == before.yaw;
    stopped += zero ? 1 : 0;
  }
  return {stopped == 100, fmt("%d/100 trials stationary on the next tick", stopped)};
}

Outcome retrace() {
  const Scenario sc = load_scenario(scenario_path("retrace"));
  const double loss_start = sc.visual_odometry.loss_windows.at(0).start;
  const double loss_end = sc.visual_odometry.loss_windows.at(0).end;
  Pipeline p(sc);
  const Pose2 start = p.sim().true_pose();
  // The robot drove straight from rest, so retracing the whole history returns it to the start.
  double travelled = 0.0;
  while (p.now() < loss_start - 1e-9) {
    p.step();
  }
  travelled = (p.sim().true_pose().position() - start.position()).norm();
  double best = std::numeric_limits<double>::infinity();
  Pose2 settled;
  while (p.now() < loss_end - 0.5) {
    p.step();
    best = std::min(best, (p.sim().true_pose().position() - start.position()).norm());
    settled = p.sim().true_pose();
  }
  const double err = (settled.position() - start.position()).norm();
  const double yaw_err = std::abs(settled.yaw - start.yaw);
  return {err <= 1e-6 && yaw_err <= 1e-6 && travelled > 1.0,
          fmt("drove %.3f m before loss, settled %.2e m / %.2e rad from the pre-segment pose (<= 1e-6)", travelled,
              err, yaw_err)};
}

Outcome determinism() {
  bool pass = true;
  std::string detail;
  for (const auto& entry : fs::directory_iterator(GROUNDMAP_SCENARIO_DIR)) {
    if (entry.path().extension() != ".yaml") {
      continue;
    }
    const Scenario sc = load_scenario(entry.path().string());
    const std::string name = entry.path().stem().string();
    auto it = first_runs.find(name);
    RunOutput a = it != first_runs.end() ? std::move(it->second) : run_logged(sc, name + "-a");
    RunOutput b = run_logged(sc, name + "-b");
    const bool same = !a.log.empty() && a.log == b.log && a.map == b.map;
    pass &= same;
    detail += name + (same ? " ok; " : " DIFFERS; ");
  }
  first_runs.clear();
  return {pass, detail + "(byte-identical logs and maps)"};
}

// ---------------------------------------------------------------- secondary

Outcome wire_round_trip() {
  std::mt19937_64 rng(1000);
  int bad = 0;
  for (int i = 0; i < 1000; ++i) {
    GridPatch p;
    p.epoch = rng();
    p.origin_x = static_cast<std::int32_t>(rng() % 2001) - 1000;
    p.origin_y = static_cast<std::int32_t>(rng() % 2001) - 1000;
    p.width = static_cast<std::uint32_t>(rng() % 60);
    p.height = static_cast<std::uint32_t>(rng() % 60);
    Occupancy cur = Occupancy::Unknown;
    for (std::size_t k = 0; k < static_cast<std::size_t>(p.width) * p.height; ++k) {
      if (rng() % 6 == 0) {
        cur = static_cast<Occupancy>(rng() % 3);
      }
      p.cells.push_back(cur);
    }
    bad += wire::decode_grid_patch(wire::encode_grid_patch(p)) == p ? 0 : 1;
  }
  Pipeline pipeline(load_scenario(scenario_path("drive-by")));
  auto sub = pipeline.bus().subscribe(topics::kGlobalMap, 1 << 12);
  wire::GridReconstructor client;
  while (!pipeline.finished()) {
    pipeline.step();
    while (auto env = sub.try_pop()) {
      const auto& msg = env->get<GlobalMapMsg>();
      const auto bytes = wire::encode_grid_patch(msg.snapshot && !client.synced() ? *msg.snapshot : msg.patch);
      client.apply(wire::decode_grid_patch(bytes));
    }
  }
  const bool same = encode_grid_pgm(client.grid()) == encode_map_pgm(pipeline.mapping().global_map());
  return {bad == 0 && same, fmt("%d/1000 patches differ after decode; client grid %s server export", bad,
                                same ? "equals" : "DIFFERS from")};
}

Outcome teleop_loop() {
  namespace beast = boost::beast;
  namespace websocket = beast::websocket;
  using tcp = boost::asio::ip::tcp;
  Pipeline p(load_scenario(scenario_path("teleop")));
  TelemetryServer server(p.bus(), TelemetryConfig{0, p.scenario().limits}, [&p] { return p.now(); });
  server.start();
  boost::asio::io_context ioc;
  websocket::stream<tcp::socket> ws(ioc);
  tcp::resolver resolver(ioc);
  boost::asio::connect(ws.next_layer(), resolver.resolve("127.0.0.1", std::to_string(server.port())));
  ws.handshake("127.0.0.1", "/");
  auto read_until = [&](const std::function<bool(const nlohmann::json&)>& match) {
    for (;;) {
      beast::flat_buffer buf;
      ws.read(buf);
      if (!ws.got_binary() && match(nlohmann::json::parse(beast::buffers_to_string(buf.data())))) {
        return;
      }
    }
  };
  auto wait_published = [&](const char* topic, std::uint64_t n) {
    const auto deadline = Clock::now() + std::chrono::seconds(5);
    while (p.bus().stats(topic).published < n) {
      if (Clock::now() > deadline) {
        throw Error(ErrorCode::Io, std::string("timed out waiting for ") + topic);
      }
      std::this_thread::sleep_for(std::chrono::milliseconds(1));
    }
  };
  ws.write(boost::asio::buffer(wire::session_request(0.0, wire::SessionRequest::Action::Acquire).dump()));
  read_until([](const nlohmann::json& j) { return j["type"] == "state" && j["driver"] == true; });
  ws.write(boost::asio::buffer(wire::cmd_vel_request(0.0, 0.5, 0.0).dump()));
  wait_published(topics::kCmdVel, 1);
  const Pose2 start = p.sim().true_pose();
  for (int i = 0; i < p.scenario().sim_rate; ++i) {
    p.step();
  }
  const double advanced = p.sim().true_pose().x - start.x;
  // Last pose the client sees should reflect the motion.
  double reported = 0.0;
  read_until([&](const nlohmann::json& j) {
    if (j["type"] == "pose" && j["frame"] == "truth") {
      reported = j["x"].get<double>();
      return reported - start.x > 0.45;
    }
    return false;
  });
  ws.write(boost::asio::buffer(wire::kill_request(0.0, true).dump()));
  wait_published(topics::kKill, 1);
  const Pose2 at_kill = p.sim().true_pose();
  p.step();
  const bool halted = p.sim().true_pose().x == at_kill.x;
  beast::error_code ec;
  ws.next_layer().shutdown(tcp::socket::shutdown_both, ec);
  server.stop();
  const double tol = p.scenario().limits.v_max * p.scenario().tick_seconds();
  return {std::abs(advanced - 0.5) <= tol && halted,
          fmt("advanced %.4f m (0.5 +- %.3f), client saw %.4f m, halted next tick after kill: %s", advanced, tol,
              reported - start.x, halted ? "yes" : "no")};
}

}  // namespace

int main() {
  std::printf("groundmap acceptance suite\n");
  check("horn-alignment", horn_alignment);
  check("scaled-odometry-square", scaled_square);
  check("boundary-extraction", boundary_oracle);
  check("homography", homography);
  check("frame-accounting", frame_accounting);
  check("drive-by-mapping", drive_by);
  check("fsm-audit", fsm_audit);
  check("kill-switch", kill_switch);
  check("retrace", retrace);
  check("determinism", determinism);
  check("secondary: wire-round-trip", wire_round_trip);
  check("secondary: teleop-loop", teleop_loop);
  fs::remove_all(scratch());
  std::printf("%s: %d failing criteria\n", failures == 0 ? "ALL PASS" : "FAILURES", failures);
  return failures == 0 ? 0 : 1;
}
