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
#include <string>
#include <string_view>
#include <vector>

namespace groundmap {

/// Label space of the segmentation stage.
enum class SegClass : std::uint8_t {
  Unlabeled = 0,
  Road = 1,
  Object = 2,
  Person = 3,
  Sky = 4,
};

inline constexpr std::uint8_t kNumSegClasses = 5;

std::string_view to_string(SegClass c);

/// Row-major per-pixel class map; row 0 is the top of the image.
class SegMask {
 public:
  SegMask() = default;
  SegMask(int width, int height, SegClass fill = SegClass::Unlabeled);
  SegMask(int width, int height, std::vector<std::uint8_t> labels);

  int width() const { return width_; }
  int height() const { return height_; }

  SegClass at(int col, int row) const {
    return static_cast<SegClass>(labels_[static_cast<std::size_t>(row) * width_ + col]);
  }
  void set(int col, int row, SegClass c) {
    labels_[static_cast<std::size_t>(row) * width_ + col] = static_cast<std::uint8_t>(c);
  }

  const std::vector<std::uint8_t>& labels() const { return labels_; }

  bool operator==(const SegMask&) const = default;

 private:
  int width_ = 0;
  int height_ = 0;
  std::vector<std::uint8_t> labels_;
};

/// Binary portable graymap (P5); the pixel value is the class id.
void write_mask_pgm(const std::string& path, const SegMask& mask);
SegMask read_mask_pgm(const std::string& path);
std::string encode_mask_pgm(const SegMask& mask);
SegMask decode_mask_pgm(std::string_view bytes);

/// Row-major run-length form [class, count, class, count, ...] used in logs.
std::vector<std::uint32_t> run_length_encode(const SegMask& mask);
SegMask run_length_decode(int width, int height, const std::vector<std::uint32_t>& runs);

}  // namespace groundmap
