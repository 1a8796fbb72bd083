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
#include <mutex>
#include <optional>
#include <string>
#include <string_view>

namespace collage::net {

struct Endpoint {
  std::string host = "127.0.0.1";
  std::uint16_t port = 0;
};

/// Connected TCP stream carrying newline-terminated text lines. Reads and
/// writes may happen on different threads; concurrent writers are
/// serialized.
class LineSocket {
 public:
  LineSocket() = default;
  explicit LineSocket(int fd) : fd_(fd) {}
  ~LineSocket();
  LineSocket(LineSocket&& o) noexcept;
  LineSocket& operator=(LineSocket&& o) noexcept;
  LineSocket(const LineSocket&) = delete;
  LineSocket& operator=(const LineSocket&) = delete;

  /// Throws std::system_error on failure.
  static LineSocket connect(const Endpoint& ep);

  bool is_open() const noexcept { return fd_ >= 0; }

  /// Appends '\n'. Throws std::system_error when the peer is gone.
  void write_line(std::string_view line);

  /// Blocks for the next line (without its terminator); nullopt on EOF.
  std::optional<std::string> read_line();

  /// Wakes a blocked reader: shuts down both directions.
  void shutdown() noexcept;

 private:
  void close() noexcept;

  int fd_ = -1;
  std::string buffer_;
  std::mutex write_mu_;
};

/// Listening socket bound to a loopback (or given) address.
class Listener {
 public:
  /// Port 0 picks an ephemeral port.
  explicit Listener(std::uint16_t port = 0, const std::string& host = "127.0.0.1");
  ~Listener();
  Listener(const Listener&) = delete;
  Listener& operator=(const Listener&) = delete;

  std::uint16_t port() const noexcept { return port_; }

  /// nullopt once shutdown() has been called.
  std::optional<LineSocket> accept();
  void shutdown() noexcept;

 private:
  int fd_ = -1;
  std::uint16_t port_ = 0;
};

}  // namespace collage::net
