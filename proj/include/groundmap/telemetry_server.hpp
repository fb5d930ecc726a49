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
#include <functional>
#include <memory>

#include "groundmap/messages.hpp"

namespace groundmap {

struct TelemetryConfig {
  std::uint16_t port = 0;  // 0 picks a free port
  VelocityLimits limits;
  /// Outgoing messages buffered per connection before grid patches are dropped.
  std::size_t send_queue_limit = 64;
};

/// WebSocket bridge between the bus and operator clients. Text frames carry
/// JSON messages; grid patches travel as binary frames (see wire.hpp).
/// One client at a time holds the driver token; every client may engage the
/// kill switch.
class TelemetryServer {
 public:
  using SimClock = std::function<double()>;

  TelemetryServer(PipelineBus& bus, TelemetryConfig config, SimClock now);
  ~TelemetryServer();

  TelemetryServer(const TelemetryServer&) = delete;
  TelemetryServer& operator=(const TelemetryServer&) = delete;

  /// Binds and starts serving. Throws Error(Io) if the port is unavailable.
  void start();
  void stop();

  std::uint16_t port() const;
  std::size_t client_count() const;
  std::uint64_t dropped_patches() const;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace groundmap
