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

#include "collage/codec.hpp"

#include <algorithm>
#include <stdexcept>
#include <string>

namespace collage {

CollageLayout::CollageLayout(int k, int canvas_px) : k_(k), canvas_px_(canvas_px) {
  if (k < 1) throw std::invalid_argument("collage grid dimension must be >= 1");
  if (canvas_px < 1) throw std::invalid_argument("canvas size must be >= 1 pixel");
  const double side = 1.0 / k;
  cells_.reserve(static_cast<std::size_t>(k) * k);
  for (int r = 0; r < k; ++r) {
    for (int c = 0; c < k; ++c) {
      cells_.emplace_back((c + 0.5) / k, (r + 0.5) / k, side, side);
    }
  }
}

CollageLayout build_layout(int k, int canvas_px) { return CollageLayout(k, canvas_px); }

std::optional<std::size_t> assign_cell(const Box& p, const CollageLayout& layout) {
  return assign_cell(p, layout.cells());
}

void validate_detection(const Detection& d, int class_count) {
  if (d.class_id < 0 || d.class_id >= class_count) {
    throw std::invalid_argument("class id " + std::to_string(d.class_id) + " outside [0, " +
                                std::to_string(class_count) + ")");
  }
  if (!(d.confidence >= 0.0 && d.confidence <= 1.0)) {
    throw std::invalid_argument("confidence outside [0,1]: " + std::to_string(d.confidence));
  }
}

PredictionTensor make_prediction_tensor(int k, int class_count) {
  if (k < 1 || class_count < 1) throw std::invalid_argument("tensor dimensions must be >= 1");
  PredictionTensor t;
  t.k = k;
  t.class_count = class_count;
  t.values.assign(t.expected_size(), 0.0);
  return t;
}

std::vector<Detection> parse_prediction_tensor(const PredictionTensor& t, double threshold) {
  if (t.k < 1 || t.class_count < 1) {
    throw std::invalid_argument("prediction tensor dimensions must be >= 1");
  }
  if (t.values.size() != t.expected_size()) {
    throw std::invalid_argument("prediction tensor has " + std::to_string(t.values.size()) +
                                " values, expected " + std::to_string(t.expected_size()));
  }
  if (!(threshold >= 0.0 && threshold <= 1.0)) {
    throw std::invalid_argument("detection threshold outside [0,1]");
  }

  std::vector<Detection> out;
  const std::size_t cells = static_cast<std::size_t>(t.k) * t.k;
  for (std::size_t cell = 0; cell < cells; ++cell) {
    for (int slot = 0; slot < PredictionTensor::kSlotsPerCell; ++slot) {
      const double* v = t.values.data() + cell * t.cell_stride() + slot * t.slot_stride();
      const double x = v[0], y = v[1], w = v[2], h = v[3], objectness = v[4];
      if (!Box::valid(x, y, w, h)) continue;

      const double* probs = v + 5;
      const auto best = std::max_element(probs, probs + t.class_count);
      const double confidence = objectness * *best;
      if (!(confidence >= 0.0 && confidence <= 1.0)) {
        throw std::invalid_argument("slot confidence outside [0,1] in cell " +
                                    std::to_string(cell));
      }
      if (confidence < threshold) continue;
      out.push_back(Detection{Box(x, y, w, h), static_cast<ClassId>(best - probs), confidence});
    }
  }
  return out;
}

CellPredictions decode(std::span<const Detection> dets, const CollageLayout& layout,
                       double threshold) {
  CellPredictions cells(layout.n());
  for (const Detection& d : dets) {
    if (d.confidence < threshold) continue;
    const auto cell = assign_cell(d.box, layout);
    if (!cell) continue;
    auto& slot = cells[*cell];
    // Strict comparisons keep the earliest detection on a full tie.
    if (!slot || d.confidence > slot->confidence ||
        (d.confidence == slot->confidence && d.class_id < slot->class_id)) {
      slot = CellPrediction{d.class_id, d.confidence};
    }
  }
  return cells;
}

Recovery recover(std::span<const std::optional<ClassId>> scnn, const CellPredictions& cells) {
  if (scnn.size() != cells.size()) {
    throw std::invalid_argument("recover: " + std::to_string(scnn.size()) +
                                " s-cnn slots vs " + std::to_string(cells.size()) + " cells");
  }
  Recovery r;
  r.final_predictions.resize(scnn.size());
  for (std::size_t i = 0; i < scnn.size(); ++i) {
    if (scnn[i]) {
      r.final_predictions[i] = scnn[i];
    } else if (cells[i]) {
      r.final_predictions[i] = cells[i]->class_id;
      r.used_collage.push_back(i);
    } else {
      r.needs_replication.push_back(i);
    }
  }
  return r;
}

}  // namespace collage
