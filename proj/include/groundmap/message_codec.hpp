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

#include <nlohmann/json.hpp>

#include <string>
#include <string_view>

#include "groundmap/messages.hpp"

namespace groundmap {

/// JSON form of a payload; the topic determines the type when decoding.
nlohmann::json message_to_json(const Message& message);
/// Throws CorruptLog if `topic` is unknown or the payload does not match its type.
Message message_from_json(std::string_view topic, const nlohmann::json& payload);

/// One log line (no trailing newline): topic, publisher, seq, gseq, stamp, payload.
std::string encode_envelope(const PipelineEnvelope& envelope);
/// Inverse of encode_envelope. Throws CorruptLog.
PipelineEnvelope decode_envelope(std::string_view line);

}  // namespace groundmap
