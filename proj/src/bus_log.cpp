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

#include "groundmap/bus_log.hpp"

#include <nlohmann/json.hpp>

#include <sstream>

#include "groundmap/errors.hpp"
#include "groundmap/message_codec.hpp"

namespace groundmap {

using nlohmann::json;

BusLogWriter::BusLogWriter(const std::string& path, const BusLogMeta& meta) : path_(path), out_(path, std::ios::binary) {
  if (!out_) {
    throw Error(ErrorCode::Io, "cannot write bus log " + path);
  }
  const json head = {{"format", kBusLogFormat},
                     {"version", kBusLogVersion},
                     {"scenario", meta.scenario_name},
                     {"seed", meta.seed},
                     {"scenario_text", meta.scenario_text}};
  out_ << head.dump() << '\n';
}

void BusLogWriter::write(const PipelineEnvelope& envelope) {
  out_ << encode_envelope(envelope) << '\n';
  if (!out_) {
    throw Error(ErrorCode::Io, "write failed on bus log " + path_);
  }
}

void BusLogWriter::flush() { out_.flush(); }

BusLog parse_bus_log(const std::string& text, const std::string& source) {
  BusLog log;
  std::vector<std::string_view> lines;
  std::size_t pos = 0;
  while (pos < text.size()) {
    const auto nl = text.find('\n', pos);
    if (nl == std::string::npos) {
      lines.emplace_back(text.data() + pos, text.size() - pos);
      break;
    }
    lines.emplace_back(text.data() + pos, nl - pos);
    pos = nl + 1;
  }
  const bool ends_cleanly = !text.empty() && text.back() == '\n';
  if (lines.empty()) {
    throw Error(ErrorCode::CorruptLog, source + ":1: empty log");
  }

  try {
    const json head = json::parse(lines[0]);
    if (head.at("format").get<std::string>() != kBusLogFormat || head.at("version").get<int>() != kBusLogVersion) {
      throw Error(ErrorCode::CorruptLog, "unsupported log format");
    }
    log.meta.scenario_name = head.at("scenario").get<std::string>();
    log.meta.seed = head.at("seed").get<std::uint64_t>();
    log.meta.scenario_text = head.at("scenario_text").get<std::string>();
  } catch (const json::exception& e) {
    throw Error(ErrorCode::CorruptLog, source + ":1: bad header: " + e.what());
  } catch (const Error& e) {
    throw Error(ErrorCode::CorruptLog, source + ":1: " + e.what());
  }

  for (std::size_t i = 1; i < lines.size(); ++i) {
    if (lines[i].empty()) {
      continue;
    }
    try {
      log.envelopes.push_back(decode_envelope(lines[i]));
    } catch (const Error& e) {
      const bool last = i + 1 == lines.size();
      if (last && !ends_cleanly) {
        log.truncated = true;
        log.warning = source + ":" + std::to_string(i + 1) + ": incomplete final line ignored";
        break;
      }
      throw Error(ErrorCode::CorruptLog, source + ":" + std::to_string(i + 1) + ": " + e.what());
    }
  }
  if (!log.truncated && !ends_cleanly) {
    log.truncated = true;
    log.warning = source + ": log does not end with a newline";
  }
  return log;
}

BusLog read_bus_log(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw Error(ErrorCode::Io, "cannot open bus log " + path);
  }
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_bus_log(ss.str(), path);
}

}  // namespace groundmap
