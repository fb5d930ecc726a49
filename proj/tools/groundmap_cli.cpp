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

#include <CLI11.hpp>
#include <spdlog/spdlog.h>

#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <thread>

#include "groundmap/errors.hpp"
#include "groundmap/pipeline.hpp"
#include "groundmap/replay.hpp"
#include "groundmap/telemetry_server.hpp"

namespace fs = std::filesystem;
using namespace groundmap;

namespace {

enum ExitCode : int {
  kOk = 0,
  kUsage = 1,
  kFailure = 2,
  kTruncated = 3,
  kReplayMismatch = 4,
};

std::string env_or(const char* name, const std::string& fallback) {
  const char* v = std::getenv(name);
  return v && *v ? std::string(v) : fallback;
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out || !(out << text)) {
    throw Error(ErrorCode::Io, "cannot write " + path.string());
  }
}

void write_report(const fs::path& dir, const RunReport& report) {
  write_text(dir / "report.json", report_to_json(report).dump(2) + "\n");
  write_text(dir / "report.txt", format_report_text(report));
}

struct RunArgs {
  std::string scenario;
  std::optional<std::uint64_t> seed;
  bool realtime = false;
  std::optional<int> serve_port;
  std::string out;
};

int cmd_run(const RunArgs& args) {
  Scenario scenario = load_scenario(args.scenario);
  const fs::path out = args.out.empty() ? fs::path(env_or("GROUNDMAP_OUT_DIR", "runs")) / scenario.name : fs::path(args.out);
  fs::create_directories(out);

  Pipeline pipeline(std::move(scenario), PipelineOptions{args.seed, (out / "bus.jsonl").string()});
  const auto& sc = pipeline.scenario();
  spdlog::info("running '{}' seed {} for {:.1f} s simulated ({} ticks), output in {}", sc.name, sc.seed, sc.duration,
               sc.total_ticks(), out.string());

  std::unique_ptr<TelemetryServer> server;
  if (args.serve_port) {
    server = std::make_unique<TelemetryServer>(pipeline.bus(), TelemetryConfig{static_cast<std::uint16_t>(*args.serve_port),
                                                                                sc.limits},
                                               [&pipeline] { return pipeline.now(); });
    server->start();
    spdlog::info("telemetry on ws://127.0.0.1:{}/", server->port());
  }

  const bool realtime = args.realtime || args.serve_port.has_value();
  const auto t0 = std::chrono::steady_clock::now();
  const auto tick = std::chrono::duration<double>(sc.tick_seconds());
  std::int64_t last_logged = -1;
  while (!pipeline.finished()) {
    pipeline.step();
    if (realtime) {
      std::this_thread::sleep_until(t0 + std::chrono::duration_cast<std::chrono::steady_clock::duration>(
                                             tick * static_cast<double>(pipeline.tick())));
    }
    const auto minute = static_cast<std::int64_t>(pipeline.now() / 60.0);
    if (minute != last_logged) {
      last_logged = minute;
      spdlog::debug("t = {:.0f} s, state {}", pipeline.now(), to_string(pipeline.slam().state()));
    }
  }
  pipeline.flush_log();
  if (server) {
    server->stop();
  }
  const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

  const auto& map = pipeline.mapping().global_map();
  if (!map.empty()) {
    export_map(map, (out / "map").string());
  } else {
    spdlog::warn("global map is empty; no map exported");
  }
  write_trajectory((out / "truth.txt").string(), pipeline.evaluator().truth());
  write_trajectory((out / "scaled.txt").string(), pipeline.evaluator().scaled());
  write_trajectory((out / "visual.txt").string(), pipeline.evaluator().raw_visual());
  const auto report = pipeline.report(wall);
  write_report(out, report);
  std::cout << format_report_text(report);
  return kOk;
}

struct ReplayArgs {
  std::string log;
  std::string modules;
  std::optional<double> resolution;
  std::string out;
};

int cmd_replay(const ReplayArgs& args) {
  const BusLog log = read_bus_log(args.log);
  if (log.truncated) {
    spdlog::warn("{}", log.warning);
  }
  ReplayOptions options;
  if (!args.modules.empty()) {
    options.modules.clear();
    std::stringstream ss(args.modules);
    for (std::string m; std::getline(ss, m, ',');) {
      if (!m.empty()) {
        options.modules.push_back(m);
      }
    }
  }
  options.map_resolution = args.resolution;
  const auto result = replay_log(log, options);
  const fs::path out = args.out.empty() ? fs::path(args.log).parent_path() / "replay" : fs::path(args.out);
  fs::create_directories(out);
  if (result.map && !result.map->empty()) {
    export_map(*result.map, (out / "map").string());
  }
  write_report(out, result.report);
  std::cout << format_report_text(result.report);
  for (const auto& d : result.report.config_divergence) {
    spdlog::warn("config divergence: {}", d);
  }
  if (log.truncated) {
    return kTruncated;
  }
  if (result.report.output_mismatches > 0) {
    if (result.report.config_divergence.empty()) {
      spdlog::error("replayed outputs differ from the recording ({})", result.first_mismatch);
      return kReplayMismatch;
    }
    spdlog::info("outputs differ as expected under the changed configuration ({})", result.first_mismatch);
  }
  return kOk;
}

int cmd_report(const std::string& dir, const std::string& format) {
  const fs::path path = fs::path(dir) / "report.json";
  std::ifstream in(path);
  if (!in) {
    throw Error(ErrorCode::Io, "missing run artifact " + path.string());
  }
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::Schema, path.string() + ": " + e.what());
  }
  const auto report = report_from_json(j);
  for (const char* artifact : {"bus.jsonl", "map.pgm", "map.yaml"}) {
    if (report.mode == "run" && !fs::exists(fs::path(dir) / artifact)) {
      spdlog::warn("missing run artifact {}", (fs::path(dir) / artifact).string());
    }
  }
  if (format == "json") {
    std::cout << report_to_json(report).dump(2) << "\n";
  } else {
    std::cout << format_report_text(report);
  }
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"groundmap: simulated monocular mapping pipeline"};
  app.require_subcommand(1);
  std::string log_level = env_or("GROUNDMAP_LOG_LEVEL", "info");
  app.add_option("--log-level", log_level, "trace, debug, info, warn, error (env GROUNDMAP_LOG_LEVEL)");

  RunArgs run;
  auto* run_cmd = app.add_subcommand("run", "run a scenario and write its artifacts");
  run_cmd->add_option("scenario", run.scenario, "scenario YAML file")->required()->check(CLI::ExistingFile);
  run_cmd->add_option("--seed", run.seed, "override the scenario seed");
  run_cmd->add_flag("--realtime", run.realtime, "pace the simulation with the wall clock");
  run_cmd->add_option("--serve", run.serve_port, "serve telemetry over WebSocket on this port (implies --realtime)")
      ->check(CLI::Range(0, 65535));
  run_cmd->add_option("--out", run.out, "output directory (env GROUNDMAP_OUT_DIR, default runs/<name>)");

  ReplayArgs replay;
  auto* replay_cmd = app.add_subcommand("replay", "re-run modules over a recorded bus log");
  replay_cmd->add_option("log", replay.log, "bus.jsonl from a run")->required()->check(CLI::ExistingFile);
  replay_cmd->add_option("--modules", replay.modules, "comma-separated subset of slam,context,mapping");
  replay_cmd->add_option("--resolution", replay.resolution, "override the mapping resolution (m/cell)");
  replay_cmd->add_option("--out", replay.out, "output directory (default <log dir>/replay)");

  std::string report_dir;
  std::string report_format = "text";
  auto* report_cmd = app.add_subcommand("report", "print the report of a finished run");
  report_cmd->add_option("dir", report_dir, "run output directory")->required();
  report_cmd->add_option("--format", report_format, "text or json")->check(CLI::IsMember({"text", "json"}));

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? kOk : kUsage;
  }
  spdlog::set_level(spdlog::level::from_str(log_level));
  spdlog::set_pattern("[%l] %v");

  try {
    if (*run_cmd) {
      return cmd_run(run);
    }
    if (*replay_cmd) {
      return cmd_replay(replay);
    }
    if (*report_cmd) {
      return cmd_report(report_dir, report_format);
    }
  } catch (const Error& e) {
    spdlog::error("{} ({})", e.what(), to_string(e.code()));
    return kFailure;
  } catch (const std::exception& e) {
    spdlog::error("{}", e.what());
    return kFailure;
  }
  return kUsage;
}
