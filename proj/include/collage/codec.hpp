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
#include <optional>
#include <span>
#include <vector>

#include "collage/geometry.hpp"

namespace collage {

using ClassId = int;

inline constexpr double kDefaultDetectionThreshold = 0.15;
inline constexpr int kDefaultCanvasPx = 416;
inline constexpr int kDefaultClassCount = 100;

/// K x K grid of ground-truth cell boxes. Image i goes into cell i, in
/// row-major order (i = row * K + col).
class CollageLayout {
 public:
  /// Throws std::invalid_argument for k == 0 or canvas_px <= 0.
  CollageLayout(int k, int canvas_px = kDefaultCanvasPx);

  int k() const noexcept { return k_; }
  std::size_t n() const noexcept { return cells_.size(); }
  int canvas_px() const noexcept { return canvas_px_; }
  std::span<const Box> cells() const noexcept { return cells_; }
  const Box& cell(std::size_t i) const { return cells_.at(i); }

 private:
  int k_;
  int canvas_px_;
  std::vector<Box> cells_;
};

CollageLayout build_layout(int k, int canvas_px = kDefaultCanvasPx);

std::optional<std::size_t> assign_cell(const Box& p, const CollageLayout& layout);

struct Detection {
  Box box;
  ClassId class_id;
  double confidence;

  friend bool operator==(const Detection&, const Detection&) = default;
};

/// Throws std::invalid_argument unless 0 <= class_id < class_count and
/// confidence is in [0,1].
void validate_detection(const Detection& d, int class_count);

/// Raw collage-cnn output: K x K cells, two slots per cell, each slot laid out
/// as [x, y, w, h, objectness, p_0 .. p_{C-1}].
struct PredictionTensor {
  int k = 0;
  int class_count = kDefaultClassCount;
  std::vector<double> values;

  static constexpr int kSlotsPerCell = 2;
  std::size_t slot_stride() const noexcept { return 5 + static_cast<std::size_t>(class_count); }
  std::size_t cell_stride() const noexcept { return kSlotsPerCell * slot_stride(); }
  std::size_t expected_size() const noexcept {
    return static_cast<std::size_t>(k) * static_cast<std::size_t>(k) * cell_stride();
  }
};

/// Zero tensor of the right shape.
PredictionTensor make_prediction_tensor(int k, int class_count = kDefaultClassCount);

/// Emits one Detection per slot whose objectness * max class probability
/// reaches `threshold`. Slots with a non-positive or otherwise invalid box
/// are skipped. Throws std::invalid_argument on a malformed tensor.
std::vector<Detection> parse_prediction_tensor(const PredictionTensor& t, double threshold);

struct CellPrediction {
  ClassId class_id;
  double confidence;

  friend bool operator==(const CellPrediction&, const CellPrediction&) = default;
};

/// One entry per cell; nullopt is an empty prediction.
using CellPredictions = std::vector<std::optional<CellPrediction>>;

/// Maps detections to cells by maximal jaccard similarity. Detections below
/// the threshold, or with zero overlap with every cell, are dropped. When
/// several detections land on one cell the highest confidence wins, then the
/// lowest class id, then the earliest detection.
CellPredictions decode(std::span<const Detection> dets, const CollageLayout& layout,
                       double threshold = kDefaultDetectionThreshold);

struct Recovery {
  std::vector<std::optional<ClassId>> final_predictions;
  std::vector<std::size_t> used_collage;       // ascending
  std::vector<std::size_t> needs_replication;  // ascending

  friend bool operator==(const Recovery&, const Recovery&) = default;
};

/// Final predictions for one batch: an available s-cnn prediction always
/// wins, a missing one falls back to its collage cell, and a request with
/// neither is marked for replication. Throws std::invalid_argument when the
/// lengths differ.
Recovery recover(std::span<const std::optional<ClassId>> scnn, const CellPredictions& cells);

}  // namespace collage
