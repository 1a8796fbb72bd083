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
#include <random>

namespace collage {

/// Independent random streams keyed by role and index.
enum class StreamRole : std::uint64_t {
  kWorker = 1,   // s-cnn latency and prediction for worker i
  kReplica = 2,  // replicated request to worker i
  kCollage = 3,  // the collage worker
  kTruth = 4,    // ground-truth labels of the request batch
};

std::uint64_t splitmix64(std::uint64_t x) noexcept;

/// Seeded generator with portable draws: the engine is std::mt19937_64 and
/// every distribution below is computed here, so sequences match across
/// standard libraries.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  /// Stream for (role, index) derived from one experiment seed. Streams for
  /// different indices never depend on how many other streams exist.
  static Rng stream(std::uint64_t seed, StreamRole role, std::uint64_t index);

  std::uint64_t next_u64() { return engine_(); }

  /// Uniform on [0, 1) with 53 random bits.
  double uniform01();

  /// Uniform on [lo, hi).
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }

  /// Uniform integer in [0, n); n must be positive.
  std::uint64_t uniform_index(std::uint64_t n);

  bool bernoulli(double p) { return uniform01() < p; }

  /// Standard normal via Box-Muller; the spare variate is cached.
  double normal();

 private:
  std::mt19937_64 engine_;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

}  // namespace collage
