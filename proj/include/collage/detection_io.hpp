// Copyright 2026 The Collage Inference Authors.
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

#include <cstddef>
#include <iosfwd>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "collage/codec.hpp"

namespace collage {

/// Malformed detection-list input; carries the 1-based line number.
class DetectionFormatError : public std::runtime_error {
 public:
  DetectionFormatError(std::size_t line, const std::string& what);
  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

/// Contents of a detection-list file. Records are `cx cy w h class_id
/// confidence`; an optional `latency <seconds>` line carries the recorded
/// collage-worker latency for trace replay.
struct DetectionFile {
  std::vector<Detection> detections;
  std::optional<double> latency_s;
};

DetectionFile read_detection_list(std::istream& in, int class_count = kDefaultClassCount);
DetectionFile read_detection_file(const std::string& path, int class_count = kDefaultClassCount);
void write_detection_list(std::ostream& out, std::span<const Detection> dets,
                          std::optional<double> latency_s = std::nullopt);

/// `cell_index class_id confidence` or `cell_index empty`, one line per cell.
void write_cell_predictions(std::ostream& out, const CellPredictions& cells);

}  // namespace collage
