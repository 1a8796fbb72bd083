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

#include <cstdint>
#include <stdexcept>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "collage/codec.hpp"

namespace collage::wire {

/// Line protocol between the front node and its workers. One message per
/// line, fields separated by single spaces:
///
///   req   <id> <image_ref>
///   resp  <id> <class_id>
///   creq  <id> <n> <image_ref>{n}
///   cresp <id> <m> (<cx> <cy> <w> <h> <class_id> <confidence>){m}
///   err   <id> <reason...>
///
/// Image refs are opaque whitespace-free tokens. Reals use the shortest text
/// that round-trips exactly.

struct ClassifyRequest {
  std::uint64_t id;
  std::string image_ref;
  friend bool operator==(const ClassifyRequest&, const ClassifyRequest&) = default;
};

struct ClassifyResponse {
  std::uint64_t id;
  ClassId class_id;
  friend bool operator==(const ClassifyResponse&, const ClassifyResponse&) = default;
};

struct CollageRequest {
  std::uint64_t id;
  std::vector<std::string> image_refs;
  friend bool operator==(const CollageRequest&, const CollageRequest&) = default;
};

struct CollageResponse {
  std::uint64_t id;
  std::vector<Detection> detections;
  friend bool operator==(const CollageResponse&, const CollageResponse&) = default;
};

struct ErrorMessage {
  std::uint64_t id;
  std::string reason;
  friend bool operator==(const ErrorMessage&, const ErrorMessage&) = default;
};

using Message =
    std::variant<ClassifyRequest, ClassifyResponse, CollageRequest, CollageResponse, ErrorMessage>;

std::uint64_t request_id(const Message& m) noexcept;

enum class ErrorKind {
  kUnknownKind,   // unrecognized leading tag
  kArity,         // wrong number of fields for the tag
  kNonNumeric,    // a numeric field did not parse
  kInvalidValue,  // parsed, but outside its domain (bad box, confidence, ...)
  kUnframeable,   // frame(): payload cannot be put on one line
};

const char* to_string(ErrorKind k) noexcept;

class ProtocolError : public std::runtime_error {
 public:
  ProtocolError(ErrorKind kind, const std::string& what);
  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

/// Renders one line without the trailing newline. Throws ProtocolError
/// (kUnframeable) for refs containing whitespace, empty refs, or reasons
/// containing a line break.
std::string frame(const Message& m);

/// Inverse of frame(). A trailing "\r" or "\n" is tolerated.
Message parse(std::string_view line);

}  // namespace collage::wire
