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

namespace collage {

/// Axis-aligned box in normalized canvas coordinates: center (cx, cy) and
/// size (w, h), all expressed as fractions of the canvas side.
///
/// The center must lie in [0,1] and the size in (0,1]. Edges may extend past
/// the canvas; no clipping is applied anywhere in the IoU math.
class Box {
 public:
  /// Throws std::invalid_argument when the invariants above are violated
  /// (including NaN inputs and zero-area boxes).
  Box(double cx, double cy, double w, double h);

  /// Builds a box from its left/top and right/bottom edges.
  static Box from_edges(double x0, double y0, double x1, double y1);

  /// Same checks as the constructor, without throwing.
  static bool valid(double cx, double cy, double w, double h) noexcept;

  double cx() const noexcept { return cx_; }
  double cy() const noexcept { return cy_; }
  double w() const noexcept { return w_; }
  double h() const noexcept { return h_; }

  double left() const noexcept { return cx_ - w_ / 2; }
  double right() const noexcept { return cx_ + w_ / 2; }
  double top() const noexcept { return cy_ - h_ / 2; }
  double bottom() const noexcept { return cy_ + h_ / 2; }

  friend bool operator==(const Box&, const Box&) = default;

 private:
  double cx_;
  double cy_;
  double w_;
  double h_;
};

/// Intersection-over-union value, always in [0,1].
class Similarity {
 public:
  explicit Similarity(double value);
  double value() const noexcept { return value_; }
  friend auto operator<=>(const Similarity&, const Similarity&) = default;

 private:
  double value_;
};

double area(const Box& b) noexcept;

double intersection_area(const Box& a, const Box& b) noexcept;

/// A_i / (A_a + A_b - A_i). Exactly 1 for identical boxes, 0 when disjoint.
Similarity jaccard(const Box& a, const Box& b) noexcept;

/// Index of the largest similarity; lowest index wins ties. Returns nullopt
/// when the span is empty or every similarity is exactly 0.
std::optional<std::size_t> best_cell(std::span<const double> similarities) noexcept;

/// Ground-truth cell with the largest jaccard similarity to `p`.
std::optional<std::size_t> assign_cell(const Box& p, std::span<const Box> cells);

}  // namespace collage
