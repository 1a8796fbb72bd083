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

#include "collage/image.hpp"

#include <fstream>
#include <istream>
#include <ostream>
#include <stdexcept>

namespace collage {

ImageBuffer::ImageBuffer(int width, int height, Rgb fill)
    : ImageBuffer(width, height,
                  std::vector<Rgb>(width > 0 && height > 0
                                       ? static_cast<std::size_t>(width) * height
                                       : 0,
                                   fill)) {}

ImageBuffer::ImageBuffer(int width, int height, std::vector<Rgb> pixels)
    : width_(width), height_(height), pixels_(std::move(pixels)) {
  if (width <= 0 || height <= 0) throw std::invalid_argument("image dimensions must be positive");
  if (pixels_.size() != static_cast<std::size_t>(width) * height) {
    throw std::invalid_argument("pixel count does not match image dimensions");
  }
}

std::size_t ImageBuffer::index(int x, int y) const {
  if (x < 0 || y < 0 || x >= width_ || y >= height_) throw std::out_of_range("pixel out of range");
  return static_cast<std::size_t>(y) * width_ + x;
}

ImageBuffer resize_nearest(const ImageBuffer& src, int width, int height) {
  if (src.empty()) throw std::invalid_argument("cannot resize an empty image");
  ImageBuffer out(width, height);
  for (int y = 0; y < height; ++y) {
    const int sy = static_cast<int>(static_cast<long long>(y) * src.height() / height);
    for (int x = 0; x < width; ++x) {
      const int sx = static_cast<int>(static_cast<long long>(x) * src.width() / width);
      out.at(x, y) = src.at(sx, sy);
    }
  }
  return out;
}

ImageBuffer compose_collage(std::span<const ImageBuffer> images, const CollageLayout& layout) {
  if (images.size() != layout.n()) {
    throw std::invalid_argument("collage needs " + std::to_string(layout.n()) + " images, got " +
                                std::to_string(images.size()));
  }
  const int side = layout.canvas_px() / layout.k();
  if (side < 1) throw std::invalid_argument("canvas too small for the collage grid");

  ImageBuffer canvas(layout.canvas_px(), layout.canvas_px());
  for (std::size_t i = 0; i < images.size(); ++i) {
    if (images[i].empty()) {
      throw std::invalid_argument("image " + std::to_string(i) + " is empty");
    }
    const ImageBuffer tile = resize_nearest(images[i], side, side);
    const int ox = static_cast<int>(i % layout.k()) * side;
    const int oy = static_cast<int>(i / layout.k()) * side;
    for (int y = 0; y < side; ++y) {
      for (int x = 0; x < side; ++x) canvas.at(ox + x, oy + y) = tile.at(x, y);
    }
  }
  return canvas;
}

namespace {

int read_ppm_int(std::istream& in) {
  // Skips whitespace and '#' comments between header tokens.
  for (;;) {
    in >> std::ws;
    if (in.peek() != '#') break;
    std::string ignored;
    std::getline(in, ignored);
  }
  int v = -1;
  if (!(in >> v) || v < 0) throw std::runtime_error("malformed PPM header");
  return v;
}

}  // namespace

ImageBuffer read_ppm(std::istream& in) {
  std::string magic;
  if (!(in >> magic) || magic != "P6") throw std::runtime_error("not a binary PPM (P6) image");
  const int w = read_ppm_int(in);
  const int h = read_ppm_int(in);
  const int maxval = read_ppm_int(in);
  if (maxval != 255) throw std::runtime_error("only 8-bit PPM images are supported");
  if (w <= 0 || h <= 0) throw std::runtime_error("PPM image has no pixels");
  in.get();  // single whitespace byte before the raster

  std::vector<Rgb> pixels(static_cast<std::size_t>(w) * h);
  in.read(reinterpret_cast<char*>(pixels.data()), static_cast<std::streamsize>(pixels.size() * 3));
  if (in.gcount() != static_cast<std::streamsize>(pixels.size() * 3)) {
    throw std::runtime_error("truncated PPM raster");
  }
  return ImageBuffer(w, h, std::move(pixels));
}

ImageBuffer read_ppm_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path);
  return read_ppm(in);
}

void write_ppm(std::ostream& out, const ImageBuffer& img) {
  out << "P6\n" << img.width() << ' ' << img.height() << "\n255\n";
  out.write(reinterpret_cast<const char*>(img.pixels().data()),
            static_cast<std::streamsize>(img.pixels().size() * 3));
}

void write_ppm_file(const std::string& path, const ImageBuffer& img) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path);
  write_ppm(out, img);
}

}  // namespace collage
