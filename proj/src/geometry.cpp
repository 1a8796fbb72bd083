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

#include "collage/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

namespace collage {

bool Box::valid(double cx, double cy, double w, double h) noexcept {
  // Comparisons are written so that NaN fails every one of them.
  return cx >= 0.0 && cx <= 1.0 && cy >= 0.0 && cy <= 1.0 && w > 0.0 && w <= 1.0 &&
         h > 0.0 && h <= 1.0;
}

Box::Box(double cx, double cy, double w, double h) : cx_(cx), cy_(cy), w_(w), h_(h) {
  if (!valid(cx, cy, w, h)) {
    throw std::invalid_argument("invalid box (cx=" + std::to_string(cx) +
                                ", cy=" + std::to_string(cy) + ", w=" + std::to_string(w) +
                                ", h=" + std::to_string(h) + ")");
  }
}

Box Box::from_edges(double x0, double y0, double x1, double y1) {
  return Box((x0 + x1) / 2, (y0 + y1) / 2, x1 - x0, y1 - y0);
}

Similarity::Similarity(double value) : value_(value) {
  if (!(value >= 0.0 && value <= 1.0)) {
    throw std::invalid_argument("similarity out of [0,1]: " + std::to_string(value));
  }
}

double area(const Box& b) noexcept { return b.w() * b.h(); }

double intersection_area(const Box& a, const Box& b) noexcept {
  const double iw = std::min(a.right(), b.right()) - std::max(a.left(), b.left());
  const double ih = std::min(a.bottom(), b.bottom()) - std::max(a.top(), b.top());
  if (iw <= 0.0 || ih <= 0.0) return 0.0;
  return iw * ih;
}

Similarity jaccard(const Box& a, const Box& b) noexcept {
  if (a == b) return Similarity(1.0);
  const double inter = intersection_area(a, b);
  if (inter <= 0.0) return Similarity(0.0);
  const double uni = area(a) + area(b) - inter;
  return Similarity(std::clamp(inter / uni, 0.0, 1.0));
}

std::optional<std::size_t> best_cell(std::span<const double> similarities) noexcept {
  std::optional<std::size_t> best;
  double best_value = 0.0;
  for (std::size_t i = 0; i < similarities.size(); ++i) {
    if (similarities[i] > best_value) {
      best_value = similarities[i];
      best = i;
    }
  }
  return best;
}

std::optional<std::size_t> assign_cell(const Box& p, std::span<const Box> cells) {
  std::vector<double> sims;
  sims.reserve(cells.size());
  for (const Box& cell : cells) sims.push_back(jaccard(p, cell).value());
  return best_cell(sims);
}

}  // namespace collage
