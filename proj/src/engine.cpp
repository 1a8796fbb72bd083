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

#include "collage/engine.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <thread>

namespace collage {

ConfigError::ConfigError(std::vector<std::string> keys, const std::string& what)
    : std::invalid_argument(what), keys_(std::move(keys)) {}

const char* to_string(StrategyKind kind) noexcept {
  switch (kind) {
    case StrategyKind::kNoReplication:
      return "no_replication";
    case StrategyKind::kTimeoutReplication:
      return "timeout_replication";
    case StrategyKind::kCollage:
      return "collage";
  }
  return "?";
}

std::optional<StrategyKind> parse_strategy(std::string_view name) noexcept {
  for (auto k : {StrategyKind::kNoReplication, StrategyKind::kTimeoutReplication,
                 StrategyKind::kCollage}) {
    if (name == to_string(k)) return k;
  }
  return std::nullopt;
}

const char* to_string(Source s) noexcept {
  switch (s) {
    case Source::kScnn:
      return "scnn";
    case Source::kCollage:
      return "collage";
    case Source::kReplica:
      return "replica";
  }
  return "?";
}

namespace {

template <typename F>
void rethrow_as_config_error(const char* key, F&& check) {
  try {
    check();
  } catch (const ConfigError&) {
    throw;
  } catch (const std::invalid_argument& e) {
    throw ConfigError({key}, std::string(key) + ": " + e.what());
  }
}

}  // namespace

void RunConfig::validate() const {
  if (n_workers < 1) throw ConfigError({"n_workers"}, "n_workers must be >= 1");
  if (k < 1) throw ConfigError({"k"}, "k must be >= 1");
  if (static_cast<long long>(k) * k != n_workers) {
    throw ConfigError({"k", "n_workers"}, "k^2 must equal n_workers (k=" + std::to_string(k) +
                                              ", n_workers=" + std::to_string(n_workers) + ")");
  }
  if (batches < 1) throw ConfigError({"batches"}, "batches must be >= 1");
  if (class_count < 1) throw ConfigError({"class_count"}, "class_count must be >= 1");
  if (canvas_px < k) throw ConfigError({"canvas_px"}, "canvas_px must be at least k pixels");
  if (!(threshold >= 0.0 && threshold <= 1.0)) {
    throw ConfigError({"threshold"}, "threshold must be in [0,1]");
  }
  rethrow_as_config_error("worker", [&] { worker.validate(); });
  rethrow_as_config_error("collage", [&] { collage.validate(); });
  for (const auto& [index, model] : worker_latency_overrides) {
    const std::string key = "worker." + std::to_string(index) + ".latency_s";
    if (index >= static_cast<std::size_t>(n_workers)) {
      throw ConfigError({key}, key + ": worker index out of range");
    }
    rethrow_as_config_error(key.c_str(), [&] { model.validate(); });
  }
  if (worker.class_count != class_count || collage.class_count != class_count) {
    throw ConfigError({"class_count"}, "worker and collage models must share class_count");
  }
  for (auto [value, key] : {std::pair{strategy.timeout_s, "timeout_s"},
                            std::pair{strategy.collage_timeout_s, "collage_timeout_s"}}) {
    if (value && !(*value > 0.0)) throw ConfigError({key}, std::string(key) + " must be > 0");
  }
  for (auto [value, key] : {std::pair{costs.encode_override, "encode_s"},
                            std::pair{costs.decode_override, "decode_s"}}) {
    if (value && !(*value >= 0.0 && std::isfinite(*value))) {
      throw ConfigError({key}, std::string(key) + " must be finite and >= 0");
    }
  }
}

double RunConfig::resolved_timeout_s() const {
  return strategy.timeout_s ? *strategy.timeout_s : worker.latency.quantile(0.95);
}

double RunConfig::resolved_collage_timeout_s() const {
  return strategy.collage_timeout_s ? *strategy.collage_timeout_s : worker.latency.quantile(0.95);
}

RunConfig default_run_config() {
  RunConfig cfg;
  cfg.worker.latency = LatencyModel::calibrated(0.15, 0.70);
  cfg.worker.top1_accuracy = 0.922;
  cfg.worker.class_count = cfg.class_count;
  // Same tail shape as the workers, scaled to the collage-cnn mean.
  cfg.collage.latency = LatencyModel::calibrated(0.14, 0.14 * 0.70 / 0.15);
  cfg.collage.p_detect = 0.95;
  cfg.collage.cell_accuracy = 0.8242;
  cfg.collage.box_jitter = 0.1;
  cfg.collage.class_count = cfg.class_count;
  cfg.strategy = Strategy::collage();
  return cfg;
}

void RecoveryLedger::check_invariants() const {
  if (collage_used + collage_unavailable != slowdown_requests) {
    throw std::logic_error("ledger: collage_used + collage_unavailable != slowdown_requests");
  }
  if (collage_correct > collage_used) {
    throw std::logic_error("ledger: collage_correct > collage_used");
  }
  if (slowdown_requests > total_requests) {
    throw std::logic_error("ledger: slowdown_requests > total_requests");
  }
  if (collage_late > slowdown_requests || replicated > slowdown_requests) {
    throw std::logic_error("ledger: sub-counter exceeds slowdown_requests");
  }
}

RecoveryLedger& RecoveryLedger::operator+=(const RecoveryLedger& o) {
  total_requests += o.total_requests;
  slowdown_requests += o.slowdown_requests;
  collage_unavailable += o.collage_unavailable;
  collage_used += o.collage_used;
  collage_correct += o.collage_correct;
  collage_late += o.collage_late;
  replicated += o.replicated;
  return *this;
}

SimStreams::SimStreams(std::uint64_t seed, std::size_t n_workers)
    : collage(Rng::stream(seed, StreamRole::kCollage, 0)),
      truth(Rng::stream(seed, StreamRole::kTruth, 0)) {
  worker.reserve(n_workers);
  replica.reserve(n_workers);
  for (std::size_t i = 0; i < n_workers; ++i) {
    worker.push_back(Rng::stream(seed, StreamRole::kWorker, i));
    replica.push_back(Rng::stream(seed, StreamRole::kReplica, i));
  }
}

RecoveryInputs recovery_inputs(std::span<const double> scnn_latency_s,
                               std::span<const ClassId> scnn_prediction,
                               const CollageArrival& arrival, const CellPredictions& decoded) {
  if (scnn_latency_s.size() != scnn_prediction.size() || decoded.size() != scnn_latency_s.size()) {
    throw std::invalid_argument("recovery_inputs: length mismatch");
  }
  RecoveryInputs in;
  in.scnn.resize(scnn_latency_s.size());
  const double decide = arrival.decision_s();
  for (std::size_t i = 0; i < scnn_latency_s.size(); ++i) {
    if (scnn_latency_s[i] <= decide) in.scnn[i] = scnn_prediction[i];
  }
  in.cells = arrival.in_time() ? decoded : CellPredictions(decoded.size());
  return in;
}

namespace {

// A replica launched at `trigger` races the original request.
RequestRecord race_replica(const RunConfig& cfg, std::size_t i, ClassId truth,
                           const ScnnSample& original, double trigger, SimStreams& streams) {
  const ScnnSample replica = sample_scnn(cfg.worker, truth, streams.replica[i]);
  const double replica_done = trigger + replica.latency_s;
  if (original.latency_s <= replica_done) {
    return {Source::kScnn, original.prediction == truth, original.latency_s, truth,
            original.prediction};
  }
  return {Source::kReplica, replica.prediction == truth, replica_done, truth, replica.prediction};
}

}  // namespace

BatchOutcome run_batch(const RunConfig& cfg, SimStreams& streams, CollageBackend& backend,
                       RecoveryLedger* ledger) {
  const std::size_t n = static_cast<std::size_t>(cfg.n_workers);
  if (streams.worker.size() != n) throw std::invalid_argument("run_batch: stream count mismatch");

  std::vector<ClassId> truths(n);
  for (auto& t : truths) {
    t = static_cast<ClassId>(streams.truth.uniform_index(static_cast<std::uint64_t>(cfg.class_count)));
  }
  std::vector<ScnnSample> scnn;
  scnn.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    const auto pinned = cfg.worker_latency_overrides.find(i);
    if (pinned == cfg.worker_latency_overrides.end()) {
      scnn.push_back(sample_scnn(cfg.worker, truths[i], streams.worker[i]));
    } else {
      WorkerModel w = cfg.worker;
      w.latency = pinned->second;
      scnn.push_back(sample_scnn(w, truths[i], streams.worker[i]));
    }
  }

  RecoveryLedger local;
  local.total_requests = n;
  BatchOutcome out;
  out.per_request.reserve(n);

  switch (cfg.strategy.kind) {
    case StrategyKind::kNoReplication:
      for (std::size_t i = 0; i < n; ++i) {
        out.per_request.push_back({Source::kScnn, scnn[i].prediction == truths[i],
                                   scnn[i].latency_s, truths[i], scnn[i].prediction});
      }
      break;

    case StrategyKind::kTimeoutReplication: {
      const double timeout = cfg.resolved_timeout_s();
      for (std::size_t i = 0; i < n; ++i) {
        if (scnn[i].latency_s <= timeout) {
          out.per_request.push_back({Source::kScnn, scnn[i].prediction == truths[i],
                                     scnn[i].latency_s, truths[i], scnn[i].prediction});
          continue;
        }
        ++local.slowdown_requests;
        ++local.collage_unavailable;
        ++local.replicated;
        out.per_request.push_back(race_replica(cfg, i, truths[i], scnn[i], timeout, streams));
      }
      break;
    }

    case StrategyKind::kCollage: {
      const CollageLayout layout(cfg.k, cfg.canvas_px);
      const CollageSample sample = backend.infer(truths, layout, streams.collage);
      const CollageArrival arrival{
          cfg.costs.encode_s(cfg.k) + sample.latency_s + cfg.costs.decode_s(cfg.k),
          cfg.resolved_collage_timeout_s()};
      out.collage_done_s = arrival.collage_done_s;
      out.collage_in_time = arrival.in_time();

      std::vector<double> latency(n);
      std::vector<ClassId> prediction(n);
      for (std::size_t i = 0; i < n; ++i) {
        latency[i] = scnn[i].latency_s;
        prediction[i] = scnn[i].prediction;
      }
      const CellPredictions decoded =
          arrival.in_time() ? decode(sample.detections, layout, cfg.threshold) : CellPredictions(n);
      const RecoveryInputs inputs = recovery_inputs(latency, prediction, arrival, decoded);
      out.recovery = recover(inputs.scnn, inputs.cells);

      out.per_request.resize(n);
      for (std::size_t i = 0; i < n; ++i) {
        if (inputs.scnn[i]) {
          out.per_request[i] = {Source::kScnn, scnn[i].prediction == truths[i], scnn[i].latency_s,
                                truths[i], scnn[i].prediction};
        } else {
          ++local.slowdown_requests;
          if (!arrival.in_time()) ++local.collage_late;
        }
      }
      for (std::size_t i : out.recovery.used_collage) {
        const ClassId cls = *out.recovery.final_predictions[i];
        out.per_request[i] = {Source::kCollage, cls == truths[i], arrival.collage_done_s, truths[i],
                              cls};
        ++local.collage_used;
        if (cls == truths[i]) ++local.collage_correct;
      }
      for (std::size_t i : out.recovery.needs_replication) {
        out.per_request[i] = race_replica(cfg, i, truths[i], scnn[i], arrival.decision_s(), streams);
        ++local.collage_unavailable;
        ++local.replicated;
      }
      break;
    }
  }

  for (const auto& r : out.per_request) out.batch_latency_s = std::max(out.batch_latency_s, r.completion_s);
  if (ledger) *ledger += local;
  return out;
}

std::unique_ptr<CollageBackend> make_collage_backend(const RunConfig& cfg) {
  if (!cfg.collage_trace_dir.empty()) {
    return std::make_unique<TraceCollageBackend>(
        TraceCollageBackend::from_directory(cfg.collage_trace_dir, cfg.class_count));
  }
  return std::make_unique<OracleCollageBackend>(cfg.collage);
}

ExperimentResult run_experiment(const RunConfig& cfg) {
  cfg.validate();
  const auto backend = make_collage_backend(cfg);
  return run_experiment(cfg, *backend);
}

ExperimentResult run_experiment(const RunConfig& cfg, CollageBackend& backend) {
  cfg.validate();
  SimStreams streams(cfg.seed, static_cast<std::size_t>(cfg.n_workers));
  ExperimentResult result;
  result.latencies_s.reserve(static_cast<std::size_t>(cfg.batches));
  result.outcomes.reserve(static_cast<std::size_t>(cfg.batches));
  for (int b = 0; b < cfg.batches; ++b) {
    BatchOutcome outcome = run_batch(cfg, streams, backend, &result.ledger);
    result.latencies_s.push_back(outcome.batch_latency_s);
    result.outcomes.push_back(std::move(outcome));
  }
  result.ledger.check_invariants();
  return result;
}

std::vector<ExperimentResult> run_experiments(std::span<const RunConfig> cfgs,
                                              unsigned max_threads) {
  std::vector<ExperimentResult> results(cfgs.size());
  std::vector<std::exception_ptr> errors(cfgs.size());
  unsigned threads = max_threads ? max_threads : std::max(1u, std::thread::hardware_concurrency());
  threads = std::min<unsigned>(threads, static_cast<unsigned>(cfgs.size()));

  std::atomic<std::size_t> next{0};
  auto work = [&] {
    for (std::size_t i; (i = next.fetch_add(1)) < cfgs.size();) {
      try {
        results[i] = run_experiment(cfgs[i]);
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  std::vector<std::jthread> pool;
  for (unsigned t = 1; t < threads; ++t) pool.emplace_back(work);
  work();
  pool.clear();

  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
  return results;
}

}  // namespace collage
