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

#include "groundmap/control.hpp"

#include <cmath>

#include "groundmap/errors.hpp"

namespace groundmap {

std::string_view to_string(CmdSource s) {
  switch (s) {
    case CmdSource::Teleop: return "teleop";
    case CmdSource::Script: return "script";
    case CmdSource::Retrace: return "retrace";
  }
  return "invalid";
}

std::optional<CmdSource> cmd_source_from_string(std::string_view s) {
  for (auto src : {CmdSource::Teleop, CmdSource::Script, CmdSource::Retrace}) {
    if (to_string(src) == s) {
      return src;
    }
  }
  return std::nullopt;
}

ForwardedCmd clamp_command(const CmdVel& cmd, const VelocityLimits& limits) {
  ForwardedCmd out{cmd, false, false};
  if (!std::isfinite(out.cmd.v) || !std::isfinite(out.cmd.w)) {
    out.cmd.v = 0.0;
    out.cmd.w = 0.0;
    out.clamped = true;
  }
  if (std::abs(out.cmd.v) > limits.v_max) {
    out.cmd.v = std::copysign(limits.v_max, out.cmd.v);
    out.clamped = true;
  }
  if (std::abs(out.cmd.w) > limits.w_max) {
    out.cmd.w = std::copysign(limits.w_max, out.cmd.w);
    out.clamped = true;
  }
  return out;
}

CommandHistory::CommandHistory(double tick_seconds, double capacity_seconds)
    : tick_seconds_(tick_seconds),
      capacity_ticks_(static_cast<std::int64_t>(std::floor(capacity_seconds / tick_seconds + 1e-9))) {
  if (!(tick_seconds > 0.0) || !(capacity_seconds >= 0.0)) {
    throw Error(ErrorCode::InvalidInput, "command history needs tick > 0 and capacity >= 0");
  }
}

void CommandHistory::push(const VelocityCommand& cmd) {
  if (capacity_ticks_ == 0) {
    return;
  }
  if (!entries_.empty() && entries_.back().cmd.v == cmd.v && entries_.back().cmd.w == cmd.w) {
    ++entries_.back().ticks;
  } else {
    entries_.push_back({cmd, 1});
  }
  ++total_ticks_;
  while (total_ticks_ > capacity_ticks_) {
    auto& oldest = entries_.front();
    --oldest.ticks;
    --total_ticks_;
    if (oldest.ticks == 0) {
      entries_.pop_front();
    }
  }
}

std::optional<VelocityCommand> CommandHistory::pop_newest() {
  if (entries_.empty()) {
    return std::nullopt;
  }
  auto& newest = entries_.back();
  const VelocityCommand cmd = newest.cmd;
  --newest.ticks;
  --total_ticks_;
  if (newest.ticks == 0) {
    entries_.pop_back();
  }
  return cmd;
}

Controller::Controller(Config config)
    : config_(config), history_(config.tick_seconds, config.history_seconds) {}

ForwardedCmd Controller::handle_cmd(const CmdVel& cmd, bool kill_engaged) {
  ForwardedCmd out;
  if (kill_engaged) {
    out.cmd = {0.0, 0.0, cmd.stamp, cmd.source};
    out.killed = true;
  } else {
    out = clamp_command(cmd, config_.limits);
  }
  clamp_count_ += out.clamped ? 1 : 0;
  history_.push({out.cmd.v, out.cmd.w});
  return out;
}

void Controller::kill_switch(bool engage) {
  if (engage) {
    pending_.clear();
    held_.reset();
  } else if (kill_) {
    pending_.clear();
  }
  kill_ = engage;
}

void Controller::submit(const CmdVel& cmd) { pending_.push_back(cmd); }

void Controller::on_tracking_state(TrackingState state) {
  if (state == TrackingState::TrackingLost && tracking_ != TrackingState::TrackingLost) {
    retracing_ = true;
    held_.reset();
  } else if (state != TrackingState::TrackingLost) {
    retracing_ = false;
  }
  tracking_ = state;
}

ForwardedCmd Controller::tick(double now) {
  if (kill_) {
    pending_.clear();
    return handle_cmd({0.0, 0.0, now, CmdSource::Teleop}, true);
  }
  if (retracing_) {
    pending_.clear();
    ForwardedCmd out;
    out.cmd = {0.0, 0.0, now, CmdSource::Retrace};
    if (const auto step = history_.pop_newest()) {
      out.cmd.v = -step->v;
      out.cmd.w = -step->w;
    }
    return out;
  }
  if (!pending_.empty()) {
    held_ = pending_.back();
    pending_.clear();
  }
  if (held_ && held_->source == CmdSource::Teleop && now - held_->stamp > config_.teleop_timeout) {
    held_.reset();
  }
  const CmdVel cmd = held_ ? CmdVel{held_->v, held_->w, now, held_->source} : CmdVel{0.0, 0.0, now, CmdSource::Teleop};
  return handle_cmd(cmd, false);
}

}  // namespace groundmap
