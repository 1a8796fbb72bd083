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

#include <atomic>
#include <chrono>
#include <condition_variable>
#include <cstdint>
#include <deque>
#include <memory>
#include <mutex>
#include <optional>
#include <set>
#include <string>
#include <thread>
#include <vector>

#include "collage/codec.hpp"
#include "collage/engine.hpp"
#include "collage/socket.hpp"
#include "collage/wire.hpp"

namespace collage::gateway {

/// Builds an opaque image reference that stub workers can grade:
/// `<name>#<truth>`.
std::string make_image_ref(const std::string& name, ClassId truth);
/// Truth encoded in a reference, if any.
std::optional<ClassId> ref_truth(std::string_view ref);

struct StubOptions {
  enum class Mode { kScnn, kCollage } mode = Mode::kScnn;
  /// Response delay per received request, cycling; empty means no delay.
  std::vector<double> delays_s;
  double accuracy = 1.0;
  int class_count = kDefaultClassCount;
  std::uint64_t seed = 1;
  /// Collage mode only.
  double p_detect = 1.0;
  std::set<std::size_t> empty_cells;
};

/// In-process stub worker serving the wire protocol on a loopback port.
/// Each request is answered after its configured delay on its own timer
/// thread, so requests may be pipelined and answered out of order.
class StubWorker {
 public:
  explicit StubWorker(StubOptions options, std::uint16_t port = 0);
  ~StubWorker();
  StubWorker(const StubWorker&) = delete;
  StubWorker& operator=(const StubWorker&) = delete;

  net::Endpoint endpoint() const { return {"127.0.0.1", listener_.port()}; }
  std::uint64_t requests_seen() const noexcept { return requests_seen_.load(); }

  /// Response for one request, without delay. Exposed for tests.
  std::string answer(const wire::Message& request) const;

  /// Blocks serving connections until stop() (used by the stub executable).
  void wait();
  void stop();

 private:
  void accept_loop();
  void serve(std::shared_ptr<net::LineSocket> conn);

  StubOptions options_;
  net::Listener listener_;
  std::atomic<std::uint64_t> requests_seen_{0};
  std::atomic<bool> stopping_{false};
  std::mutex mu_;
  std::vector<std::shared_ptr<net::LineSocket>> conns_;
  std::vector<std::jthread> threads_;
  std::jthread acceptor_;
};

struct GatewayConfig {
  int k = 3;
  double threshold = kDefaultDetectionThreshold;
  int class_count = kDefaultClassCount;
  /// Deadline for the collage result, measured from batch start.
  double collage_timeout_s = 1.0;
  /// Hard cap on waiting for replicas before giving up on a request.
  double give_up_s = 30.0;
};

struct LiveRequest {
  std::optional<ClassId> prediction;
  std::optional<Source> source;
  double completion_s = 0.0;
};

struct LiveBatchResult {
  /// Arrival time of each s-cnn response seen before the decision point.
  std::vector<std::optional<double>> scnn_arrival_s;
  std::optional<double> collage_arrival_s;
  bool collage_in_time = false;
  CellPredictions cells;
  RecoveryInputs inputs;
  Recovery recovery;
  std::vector<LiveRequest> requests;
  double batch_latency_s = 0.0;
};

/// Front node driving real worker connections with the collage strategy.
/// One reader thread per connection feeds an ordered event queue; the
/// calling thread owns all policy state. Recovery decisions go through the
/// same recovery_inputs()/recover() path as the simulator.
class Coordinator {
 public:
  Coordinator(GatewayConfig cfg, std::vector<net::Endpoint> workers, net::Endpoint collage,
              std::vector<net::Endpoint> replicas);
  ~Coordinator();
  Coordinator(const Coordinator&) = delete;
  Coordinator& operator=(const Coordinator&) = delete;

  /// Classifies one batch of N = K^2 image references.
  LiveBatchResult run_batch(const std::vector<std::string>& image_refs);

 private:
  using Clock = std::chrono::steady_clock;

  struct Event {
    std::size_t conn;
    wire::Message message;
    Clock::time_point at;
  };

  void reader(std::size_t conn);
  std::optional<Event> next_event(Clock::time_point deadline);

  GatewayConfig cfg_;
  CollageLayout layout_;
  std::vector<std::unique_ptr<net::LineSocket>> conns_;  // workers, collage, replicas
  std::size_t n_;
  std::size_t replica_count_;
  std::uint64_t next_id_ = 1;

  std::mutex mu_;
  std::condition_variable cv_;
  std::deque<Event> events_;
  std::vector<std::jthread> readers_;
};

}  // namespace collage::gateway
