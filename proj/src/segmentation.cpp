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

#include "groundmap/segmentation.hpp"

#include <fstream>
#include <sstream>

#include "groundmap/errors.hpp"

namespace groundmap {

std::string_view to_string(SegClass c) {
  switch (c) {
    case SegClass::Unlabeled: return "unlabeled";
    case SegClass::Road: return "road";
    case SegClass::Object: return "object";
    case SegClass::Person: return "person";
    case SegClass::Sky: return "sky";
  }
  return "invalid";
}

SegMask::SegMask(int width, int height, SegClass fill)
    : width_(width),
      height_(height),
      labels_(static_cast<std::size_t>(width) * static_cast<std::size_t>(height),
              static_cast<std::uint8_t>(fill)) {
  if (width <= 0 || height <= 0) {
    throw Error(ErrorCode::InvalidInput, "mask dimensions must be positive");
  }
}

SegMask::SegMask(int width, int height, std::vector<std::uint8_t> labels)
    : width_(width), height_(height), labels_(std::move(labels)) {
  if (width <= 0 || height <= 0 ||
      labels_.size() != static_cast<std::size_t>(width) * static_cast<std::size_t>(height)) {
    throw Error(ErrorCode::InvalidInput, "mask label count does not match dimensions");
  }
  for (auto v : labels_) {
    if (v >= kNumSegClasses) {
      throw Error(ErrorCode::InvalidInput, "mask label out of range: " + std::to_string(v));
    }
  }
}

std::string encode_mask_pgm(const SegMask& mask) {
  std::string out = "P5\n" + std::to_string(mask.width()) + " " + std::to_string(mask.height()) + "\n255\n";
  out.append(mask.labels().begin(), mask.labels().end());
  return out;
}

SegMask decode_mask_pgm(std::string_view bytes) {
  std::istringstream in{std::string(bytes)};
  std::string magic;
  int width = 0;
  int height = 0;
  int maxval = 0;
  in >> magic >> width >> height >> maxval;
  if (!in || magic != "P5" || maxval <= 0 || maxval > 255) {
    throw Error(ErrorCode::InvalidInput, "not a binary 8-bit PGM");
  }
  in.get();  // single whitespace after maxval
  std::vector<std::uint8_t> labels(static_cast<std::size_t>(width) * static_cast<std::size_t>(height));
  in.read(reinterpret_cast<char*>(labels.data()), static_cast<std::streamsize>(labels.size()));
  if (in.gcount() != static_cast<std::streamsize>(labels.size())) {
    throw Error(ErrorCode::InvalidInput, "PGM payload truncated");
  }
  return {width, height, std::move(labels)};
}

void write_mask_pgm(const std::string& path, const SegMask& mask) {
  std::ofstream out(path, std::ios::binary);
  if (!out) {
    throw Error(ErrorCode::Io, "cannot write " + path);
  }
  out << encode_mask_pgm(mask);
}

SegMask read_mask_pgm(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw Error(ErrorCode::Io, "cannot open " + path);
  }
  std::stringstream buffer;
  buffer << in.rdbuf();
  return decode_mask_pgm(buffer.str());
}

std::vector<std::uint32_t> run_length_encode(const SegMask& mask) {
  std::vector<std::uint32_t> runs;
  const auto& labels = mask.labels();
  for (std::size_t i = 0; i < labels.size();) {
    std::size_t j = i;
    while (j < labels.size() && labels[j] == labels[i]) {
      ++j;
    }
    runs.push_back(labels[i]);
    runs.push_back(static_cast<std::uint32_t>(j - i));
    i = j;
  }
  return runs;
}

SegMask run_length_decode(int width, int height, const std::vector<std::uint32_t>& runs) {
  if (runs.size() % 2 != 0) {
    throw Error(ErrorCode::InvalidInput, "run-length data must come in pairs");
  }
  std::vector<std::uint8_t> labels;
  labels.reserve(static_cast<std::size_t>(width) * static_cast<std::size_t>(height));
  for (std::size_t i = 0; i < runs.size(); i += 2) {
    if (runs[i] >= kNumSegClasses) {
      throw Error(ErrorCode::InvalidInput, "run-length class out of range");
    }
    labels.insert(labels.end(), runs[i + 1], static_cast<std::uint8_t>(runs[i]));
  }
  return {width, height, std::move(labels)};
}

}  // namespace groundmap
