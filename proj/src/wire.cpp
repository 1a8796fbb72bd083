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

#include "collage/wire.hpp"

#include "collage/text.hpp"

namespace collage::wire {

namespace {

template <class... Ts>
struct overloaded : Ts... {
  using Ts::operator()...;
};

void check_ref(const std::string& ref) {
  if (ref.empty()) throw ProtocolError(ErrorKind::kUnframeable, "empty image reference");
  if (ref.find_first_of(" \t\r\n") != std::string::npos) {
    throw ProtocolError(ErrorKind::kUnframeable, "image reference contains whitespace");
  }
}

std::vector<std::string_view> split_single_spaces(std::string_view s) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  for (;;) {
    const auto sp = s.find(' ', start);
    out.push_back(s.substr(start, sp - start));
    if (sp == std::string_view::npos) break;
    start = sp + 1;
  }
  return out;
}

std::uint64_t field_id(std::string_view s) {
  const auto v = parse_uint(s);
  if (!v) throw ProtocolError(ErrorKind::kNonNumeric, "request id `" + std::string(s) + "`");
  return *v;
}

ClassId field_class(std::string_view s) {
  const auto v = parse_int(s);
  if (!v) throw ProtocolError(ErrorKind::kNonNumeric, "class id `" + std::string(s) + "`");
  if (*v < 0 || *v > INT32_MAX) {
    throw ProtocolError(ErrorKind::kInvalidValue, "class id out of range");
  }
  return static_cast<ClassId>(*v);
}

double field_real(std::string_view s) {
  const auto v = parse_real(s);
  if (!v) throw ProtocolError(ErrorKind::kNonNumeric, "real field `" + std::string(s) + "`");
  return *v;
}

std::size_t field_count(std::string_view s) {
  const auto v = parse_uint(s);
  if (!v) throw ProtocolError(ErrorKind::kNonNumeric, "count `" + std::string(s) + "`");
  return static_cast<std::size_t>(*v);
}

void expect_arity(const std::vector<std::string_view>& f, std::size_t n, std::string_view tag) {
  if (f.size() != n) {
    throw ProtocolError(ErrorKind::kArity, std::string(tag) + ": expected " + std::to_string(n) +
                                               " fields, got " + std::to_string(f.size()));
  }
}

}  // namespace

const char* to_string(ErrorKind k) noexcept {
  switch (k) {
    case ErrorKind::kUnknownKind:
      return "unknown_kind";
    case ErrorKind::kArity:
      return "arity";
    case ErrorKind::kNonNumeric:
      return "non_numeric";
    case ErrorKind::kInvalidValue:
      return "invalid_value";
    case ErrorKind::kUnframeable:
      return "unframeable";
  }
  return "?";
}

ProtocolError::ProtocolError(ErrorKind kind, const std::string& what)
    : std::runtime_error(std::string(to_string(kind)) + ": " + what), kind_(kind) {}

std::uint64_t request_id(const Message& m) noexcept {
  return std::visit([](const auto& msg) { return msg.id; }, m);
}

std::string frame(const Message& m) {
  return std::visit(
      overloaded{
          [](const ClassifyRequest& r) {
            check_ref(r.image_ref);
            return "req " + std::to_string(r.id) + ' ' + r.image_ref;
          },
          [](const ClassifyResponse& r) {
            if (r.class_id < 0) throw ProtocolError(ErrorKind::kUnframeable, "negative class id");
            return "resp " + std::to_string(r.id) + ' ' + std::to_string(r.class_id);
          },
          [](const CollageRequest& r) {
            std::string out = "creq " + std::to_string(r.id) + ' ' + std::to_string(r.image_refs.size());
            for (const auto& ref : r.image_refs) {
              check_ref(ref);
              out += ' ';
              out += ref;
            }
            return out;
          },
          [](const CollageResponse& r) {
            std::string out = "cresp " + std::to_string(r.id) + ' ' + std::to_string(r.detections.size());
            for (const Detection& d : r.detections) {
              if (d.class_id < 0 || !(d.confidence >= 0.0 && d.confidence <= 1.0)) {
                throw ProtocolError(ErrorKind::kUnframeable, "detection outside its domain");
              }
              for (double v : {d.box.cx(), d.box.cy(), d.box.w(), d.box.h()}) {
                out += ' ';
                out += format_real(v);
              }
              out += ' ' + std::to_string(d.class_id) + ' ' + format_real(d.confidence);
            }
            return out;
          },
          [](const ErrorMessage& e) {
            if (e.reason.empty()) throw ProtocolError(ErrorKind::kUnframeable, "empty error reason");
            if (e.reason.find_first_of("\r\n") != std::string::npos) {
              throw ProtocolError(ErrorKind::kUnframeable, "error reason contains a line break");
            }
            return "err " + std::to_string(e.id) + ' ' + e.reason;
          },
      },
      m);
}

Message parse(std::string_view line) {
  while (!line.empty() && (line.back() == '\n' || line.back() == '\r')) line.remove_suffix(1);
  const auto tag_end = line.find(' ');
  const std::string_view tag = line.substr(0, tag_end);

  if (tag == "err") {
    // The reason is free text after the id.
    if (tag_end == std::string_view::npos) throw ProtocolError(ErrorKind::kArity, "err: missing id");
    const auto rest = line.substr(tag_end + 1);
    const auto id_end = rest.find(' ');
    if (id_end == std::string_view::npos || id_end + 1 == rest.size()) {
      throw ProtocolError(ErrorKind::kArity, "err: expected `err <id> <reason>`");
    }
    return ErrorMessage{field_id(rest.substr(0, id_end)), std::string(rest.substr(id_end + 1))};
  }

  const auto f = split_single_spaces(line);
  if (tag == "req") {
    expect_arity(f, 3, tag);
    if (f[2].empty()) throw ProtocolError(ErrorKind::kArity, "req: empty image reference");
    return ClassifyRequest{field_id(f[1]), std::string(f[2])};
  }
  if (tag == "resp") {
    expect_arity(f, 3, tag);
    return ClassifyResponse{field_id(f[1]), field_class(f[2])};
  }
  if (tag == "creq") {
    if (f.size() < 3) throw ProtocolError(ErrorKind::kArity, "creq: missing count");
    const std::uint64_t id = field_id(f[1]);
    const std::size_t n = field_count(f[2]);
    if (f.size() - 3 != n) {
      throw ProtocolError(ErrorKind::kArity, "creq: count says " + std::to_string(n) + " refs, got " +
                                                 std::to_string(f.size() - 3));
    }
    CollageRequest r{id, {}};
    for (std::size_t i = 0; i < n; ++i) {
      if (f[3 + i].empty()) throw ProtocolError(ErrorKind::kArity, "creq: empty image reference");
      r.image_refs.emplace_back(f[3 + i]);
    }
    return r;
  }
  if (tag == "cresp") {
    if (f.size() < 3) throw ProtocolError(ErrorKind::kArity, "cresp: missing count");
    const std::uint64_t id = field_id(f[1]);
    const std::size_t m = field_count(f[2]);
    if ((f.size() - 3) % 6 != 0 || (f.size() - 3) / 6 != m) {
      throw ProtocolError(ErrorKind::kArity, "cresp: count says " + std::to_string(m) +
                                                 " detections, got " + std::to_string(f.size() - 3) +
                                                 " fields");
    }
    CollageResponse r{id, {}};
    for (std::size_t i = 0; i < m; ++i) {
      const auto* d = &f[3 + 6 * i];
      const double cx = field_real(d[0]), cy = field_real(d[1]), w = field_real(d[2]),
                   h = field_real(d[3]);
      const ClassId cls = field_class(d[4]);
      const double conf = field_real(d[5]);
      if (!Box::valid(cx, cy, w, h)) throw ProtocolError(ErrorKind::kInvalidValue, "cresp: invalid box");
      if (!(conf >= 0.0 && conf <= 1.0)) {
        throw ProtocolError(ErrorKind::kInvalidValue, "cresp: confidence outside [0,1]");
      }
      r.detections.push_back(Detection{Box(cx, cy, w, h), cls, conf});
    }
    return r;
  }
  throw ProtocolError(ErrorKind::kUnknownKind, "unknown message kind `" + std::string(tag) + "`");
}

}  // namespace collage::wire
