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
#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "collage/backend.hpp"
#include "collage/codec.hpp"
#include "collage/rng.hpp"

namespace collage {

/// Invalid run configuration. `keys()` names the offending config keys.
class ConfigError : public std::invalid_argument {
 public:
  ConfigError(std::vector<std::string> keys, const std::string& what);
  const std::vector<std::string>& keys() const noexcept { return keys_; }

 private:
  std::vector<std::string> keys_;
};

enum class StrategyKind { kNoReplication, kTimeoutReplication, kCollage };

const char* to_string(StrategyKind kind) noexcept;
std::optional<StrategyKind> parse_strategy(std::string_view name) noexcept;

/// Front-node policy. Unset timeouts resolve to the worker latency model's
/// 95th percentile.
struct Strategy {
  StrategyKind kind = StrategyKind::kCollage;
  std::optional<double> timeout_s;
  std::optional<double> collage_timeout_s;

  static Strategy no_replication() { return {StrategyKind::kNoReplication, {}, {}}; }
  static Strategy timeout_replication(std::optional<double> timeout = {}) {
    return {StrategyKind::kTimeoutReplication, timeout, {}};
  }
  static Strategy collage(std::optional<double> collage_timeout = {}) {
    return {StrategyKind::kCollage, {}, collage_timeout};
  }
};

struct RunConfig {
  int n_workers = 9;
  int k = 3;
  int batches = 2000;
  std::uint64_t seed = 1;
  int class_count = kDefaultClassCount;
  int canvas_px = kDefaultCanvasPx;
  double threshold = kDefaultDetectionThreshold;
  WorkerModel worker;
  /// Latency models pinned to individual workers (e.g. a persistently slow
  /// node). Replicas always use `worker`.
  std::map<std::size_t, LatencyModel> worker_latency_overrides;
  CollageModel collage;
  CostModel costs;
  Strategy strategy;
  /// When set, collage results replay detection files from this directory
  /// instead of sampling the oracle model.
  std::string collage_trace_dir;

  /// Throws ConfigError.
  void validate() const;

  double resolved_timeout_s() const;
  double resolved_collage_timeout_s() const;
};

/// The configuration the command-line tool ships with: N=9, K=3, worker
/// latency fitted to mean 0.15 s / p99 0.70 s, collage-cnn mean 0.14 s.
RunConfig default_run_config();

enum class Source { kScnn, kCollage, kReplica };

const char* to_string(Source s) noexcept;

struct RequestRecord {
  Source source;
  bool correct;
  double completion_s;
  ClassId truth;
  ClassId prediction;
};

struct BatchOutcome {
  double batch_latency_s = 0.0;
  std::vector<RequestRecord> per_request;
  /// Collage-strategy bookkeeping; zero/empty under the baselines.
  double collage_done_s = 0.0;
  bool collage_in_time = false;
  Recovery recovery;
};

/// Counters mirroring the collage usage tables. For the baselines, which
/// have no collage node, every slowdown counts as collage_unavailable.
struct RecoveryLedger {
  std::uint64_t total_requests = 0;
  std::uint64_t slowdown_requests = 0;
  std::uint64_t collage_unavailable = 0;
  std::uint64_t collage_used = 0;
  std::uint64_t collage_correct = 0;
  /// Slowdowns seen while the collage worker itself missed its deadline.
  std::uint64_t collage_late = 0;
  std::uint64_t replicated = 0;

  /// Throws std::logic_error when the counter identities do not hold.
  void check_invariants() const;

  RecoveryLedger& operator+=(const RecoveryLedger& o);
  friend bool operator==(const RecoveryLedger&, const RecoveryLedger&) = default;
};

/// Per-experiment random streams, one per role and worker index.
struct SimStreams {
  SimStreams(std::uint64_t seed, std::size_t n_workers);

  std::vector<Rng> worker;
  std::vector<Rng> replica;
  Rng collage;
  Rng truth;
};

/// Timeline facts of one collage-strategy batch.
struct CollageArrival {
  double collage_done_s;
  double collage_timeout_s;

  bool in_time() const noexcept { return collage_done_s <= collage_timeout_s; }
  /// When the front node decides which requests need a fallback.
  double decision_s() const noexcept { return in_time() ? collage_done_s : collage_timeout_s; }
};

/// Inputs to recover() for a batch: s-cnn results that arrived by the
/// decision time, and decoded cells (all empty when the collage is late).
struct RecoveryInputs {
  std::vector<std::optional<ClassId>> scnn;
  CellPredictions cells;
};

RecoveryInputs recovery_inputs(std::span<const double> scnn_latency_s,
                               std::span<const ClassId> scnn_prediction,
                               const CollageArrival& arrival, const CellPredictions& decoded);

BatchOutcome run_batch(const RunConfig& cfg, SimStreams& streams, CollageBackend& backend,
                       RecoveryLedger* ledger = nullptr);

struct ExperimentResult {
  std::vector<double> latencies_s;
  RecoveryLedger ledger;
  std::vector<BatchOutcome> outcomes;
};

/// Oracle backend from cfg.collage, or a trace backend when
/// cfg.collage_trace_dir is set.
std::unique_ptr<CollageBackend> make_collage_backend(const RunConfig& cfg);

/// Runs cfg.batches closed-loop batches with make_collage_backend(cfg).
ExperimentResult run_experiment(const RunConfig& cfg);
ExperimentResult run_experiment(const RunConfig& cfg, CollageBackend& backend);

/// Independent experiments on separate threads; results in input order.
std::vector<ExperimentResult> run_experiments(std::span<const RunConfig> cfgs,
                                              unsigned max_threads = 0);

}  // namespace collage
