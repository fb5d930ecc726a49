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

#include "groundmap/errors.hpp"

namespace groundmap {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::InvalidInput: return "InvalidInput";
    case ErrorCode::DegenerateInput: return "DegenerateInput";
    case ErrorCode::NumericalFailure: return "NumericalFailure";
    case ErrorCode::UnknownTopic: return "UnknownTopic";
    case ErrorCode::TypeMismatch: return "TypeMismatch";
    case ErrorCode::HorizonInView: return "HorizonInView";
    case ErrorCode::EmptyMap: return "EmptyMap";
    case ErrorCode::Io: return "Io";
    case ErrorCode::Schema: return "Schema";
    case ErrorCode::CorruptLog: return "CorruptLog";
  }
  return "Unknown";
}

}  // namespace groundmap
