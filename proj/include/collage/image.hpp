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

#include <array>
#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "collage/codec.hpp"

namespace collage {

using Rgb = std::array<std::uint8_t, 3>;

/// Row-major RGB raster.
class ImageBuffer {
 public:
  ImageBuffer() = default;
  ImageBuffer(int width, int height, Rgb fill = {0, 0, 0});
  ImageBuffer(int width, int height, std::vector<Rgb> pixels);

  int width() const noexcept { return width_; }
  int height() const noexcept { return height_; }
  bool empty() const noexcept { return pixels_.empty(); }

  const Rgb& at(int x, int y) const { return pixels_.at(index(x, y)); }
  Rgb& at(int x, int y) { return pixels_.at(index(x, y)); }
  std::span<const Rgb> pixels() const noexcept { return pixels_; }

  friend bool operator==(const ImageBuffer&, const ImageBuffer&) = default;

 private:
  std::size_t index(int x, int y) const;

  int width_ = 0;
  int height_ = 0;
  std::vector<Rgb> pixels_;
};

/// Nearest-neighbor resample.
ImageBuffer resize_nearest(const ImageBuffer& src, int width, int height);

/// Places each image, downscaled to floor(canvas/K) square, at its row-major
/// cell origin on a black canvas_px x canvas_px canvas.
ImageBuffer compose_collage(std::span<const ImageBuffer> images, const CollageLayout& layout);

/// Binary PPM (P6, maxval 255).
ImageBuffer read_ppm(std::istream& in);
ImageBuffer read_ppm_file(const std::string& path);
void write_ppm(std::ostream& out, const ImageBuffer& img);
void write_ppm_file(const std::string& path, const ImageBuffer& img);

}  // namespace collage
