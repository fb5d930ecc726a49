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
#include <fstream>
#include <string>
#include <vector>

#include "groundmap/messages.hpp"

namespace groundmap {

inline constexpr const char* kBusLogFormat = "groundmap-buslog";
inline constexpr int kBusLogVersion = 1;

/// First line of every log: what produced it.
struct BusLogMeta {
  std::string scenario_name;
  std::uint64_t seed = 0;
  std::string scenario_text;
};

/// Line-delimited JSON recorder: a meta line, then one envelope per line.
class BusLogWriter {
 public:
  BusLogWriter(const std::string& path, const BusLogMeta& meta);

  void write(const PipelineEnvelope& envelope);
  void flush();
  const std::string& path() const { return path_; }

 private:
  std::string path_;
  std::ofstream out_;
};

struct BusLog {
  BusLogMeta meta;
  std::vector<PipelineEnvelope> envelopes;
  /// Set when the final line was incomplete; `warning` says where.
  bool truncated = false;
  std::string warning;
};

/// Reads a whole log. A malformed final line is treated as truncation; any
/// other malformed line throws CorruptLog naming the line number.
BusLog read_bus_log(const std::string& path);
BusLog parse_bus_log(const std::string& text, const std::string& source = "<log>");

}  // namespace groundmap
