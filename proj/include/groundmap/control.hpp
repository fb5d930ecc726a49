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
#include <deque>
#include <optional>
#include <string_view>
#include <vector>

#include "groundmap/sim_world.hpp"
#include "groundmap/tracking.hpp"

namespace groundmap {

enum class CmdSource : std::uint8_t { Teleop, Script, Retrace };

std::string_view to_string(CmdSource s);
std::optional<CmdSource> cmd_source_from_string(std::string_view s);

struct CmdVel {
  double v = 0.0;
  double w = 0.0;
  double stamp = 0.0;
  CmdSource source = CmdSource::Teleop;
};

struct ForwardedCmd {
  CmdVel cmd;
  bool clamped = false;
  bool killed = false;
};

/// Limits a command; non-finite components become zero. Every command source
/// goes through this before reaching the robot.
ForwardedCmd clamp_command(const CmdVel& cmd, const VelocityLimits& limits);

/// Most recent forwarded commands as (command, tick count) runs, bounded by
/// a capacity in seconds.
class CommandHistory {
 public:
  struct Entry {
    VelocityCommand cmd;
    std::int64_t ticks = 0;
  };

  CommandHistory(double tick_seconds, double capacity_seconds = 30.0);

  void push(const VelocityCommand& cmd);
  /// Removes the newest tick and returns its command.
  std::optional<VelocityCommand> pop_newest();
  void clear() { entries_.clear(); total_ticks_ = 0; }

  bool empty() const { return total_ticks_ == 0; }
  double duration() const { return static_cast<double>(total_ticks_) * tick_seconds_; }
  double capacity() const { return static_cast<double>(capacity_ticks_) * tick_seconds_; }
  const std::deque<Entry>& entries() const { return entries_; }

 private:
  double tick_seconds_;
  std::int64_t capacity_ticks_;
  std::int64_t total_ticks_ = 0;
  std::deque<Entry> entries_;
};

/// Command arbitration for the robot: kill switch first, then retrace while
/// tracking is lost, then the latest operator or script command.
class Controller {
 public:
  struct Config {
    VelocityLimits limits;
    double tick_seconds = 0.05;
    double history_seconds = 30.0;
    double teleop_timeout = 1.0;  // a silent teleop stream decays to zero
  };

  explicit Controller(Config config);

  /// Clamps, or zeroes under kill, and records the result in the history.
  ForwardedCmd handle_cmd(const CmdVel& cmd, bool kill_engaged);

  /// Latched; engaging flushes pending and held commands.
  void kill_switch(bool engage);
  bool kill_engaged() const { return kill_; }

  /// Queues an operator/script command for the next tick.
  void submit(const CmdVel& cmd);
  void on_tracking_state(TrackingState state);

  /// Produces the command the robot executes during the coming tick.
  ForwardedCmd tick(double now);

  bool retracing() const { return retracing_; }
  const CommandHistory& history() const { return history_; }
  std::uint64_t clamp_count() const { return clamp_count_; }

 private:
  Config config_;
  CommandHistory history_;
  std::vector<CmdVel> pending_;
  std::optional<CmdVel> held_;
  TrackingState tracking_ = TrackingState::WaitingForImages;
  bool kill_ = false;
  bool retracing_ = false;
  std::uint64_t clamp_count_ = 0;
};

}  // namespace groundmap
