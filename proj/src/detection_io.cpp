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

#include "collage/detection_io.hpp"

#include <fstream>
#include <istream>
#include <ostream>

#include "collage/text.hpp"

namespace collage {

DetectionFormatError::DetectionFormatError(std::size_t line, const std::string& what)
    : std::runtime_error("line " + std::to_string(line) + ": " + what), line_(line) {}

DetectionFile read_detection_list(std::istream& in, int class_count) {
  DetectionFile file;
  std::string raw;
  std::size_t lineno = 0;
  while (std::getline(in, raw)) {
    ++lineno;
    const auto fields = split_ws(trim(strip_comment(raw)));
    if (fields.empty()) continue;

    if (fields[0] == "latency") {
      const auto v = fields.size() == 2 ? parse_real(fields[1]) : std::nullopt;
      if (!v || *v <= 0.0) throw DetectionFormatError(lineno, "expected `latency <seconds>`");
      file.latency_s = *v;
      continue;
    }
    if (fields.size() != 6) {
      throw DetectionFormatError(lineno, "expected 6 fields `cx cy w h class_id confidence`, got " +
                                             std::to_string(fields.size()));
    }
    double num[4];
    for (int i = 0; i < 4; ++i) {
      const auto v = parse_real(fields[i]);
      if (!v) throw DetectionFormatError(lineno, "non-numeric field `" + std::string(fields[i]) + "`");
      num[i] = *v;
    }
    const auto cls = parse_int(fields[4]);
    if (!cls) throw DetectionFormatError(lineno, "class_id must be an integer");
    const auto conf = parse_real(fields[5]);
    if (!conf) throw DetectionFormatError(lineno, "non-numeric confidence");
    if (!Box::valid(num[0], num[1], num[2], num[3])) {
      throw DetectionFormatError(lineno, "box outside the normalized canvas or zero-area");
    }
    Detection d{Box(num[0], num[1], num[2], num[3]), static_cast<ClassId>(*cls), *conf};
    try {
      validate_detection(d, class_count);
    } catch (const std::invalid_argument& e) {
      throw DetectionFormatError(lineno, e.what());
    }
    file.detections.push_back(d);
  }
  return file;
}

DetectionFile read_detection_file(const std::string& path, int class_count) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);
  return read_detection_list(in, class_count);
}

void write_detection_list(std::ostream& out, std::span<const Detection> dets,
                          std::optional<double> latency_s) {
  if (latency_s) out << "latency " << format_real(*latency_s) << '\n';
  for (const Detection& d : dets) {
    out << format_real(d.box.cx()) << ' ' << format_real(d.box.cy()) << ' '
        << format_real(d.box.w()) << ' ' << format_real(d.box.h()) << ' ' << d.class_id << ' '
        << format_real(d.confidence) << '\n';
  }
}

void write_cell_predictions(std::ostream& out, const CellPredictions& cells) {
  for (std::size_t i = 0; i < cells.size(); ++i) {
    if (cells[i]) {
      out << i << ' ' << cells[i]->class_id << ' ' << format_real(cells[i]->confidence) << '\n';
    } else {
      out << i << " empty\n";
    }
  }
}

}  // namespace collage
