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
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "collage/codec.hpp"
#include "collage/detection_io.hpp"
#include "collage/rng.hpp"

namespace collage {

/// Standard normal quantiles used throughout.
inline constexpr double kZ95 = 1.6448536269514722;
inline constexpr double kZ99 = 2.3263478740408408;

enum class LatencyKind { kLognormal, kLognormalMixture, kEmpirical };

/// Positive latency distribution (seconds). The lognormal parameters live in
/// log space; the mixture branch multiplies a lognormal draw by
/// straggler_scale with probability p_straggler.
struct LatencyModel {
  LatencyKind kind = LatencyKind::kLognormal;
  double mu = 0.0;
  double sigma = 0.0;
  double p_straggler = 0.0;
  double straggler_scale = 1.0;
  std::vector<double> samples;

  static LatencyModel lognormal(double mu, double sigma);
  static LatencyModel mixture(double mu, double sigma, double p_straggler, double straggler_scale);
  static LatencyModel empirical(std::vector<double> samples);
  /// Degenerate model that always returns `seconds`.
  static LatencyModel constant(double seconds);
  /// Lognormal fitted to a mean and a 99th percentile.
  static LatencyModel calibrated(double mean_s, double p99_s);

  /// Throws std::invalid_argument on an unusable model.
  void validate() const;

  double mean() const;
  /// q in (0,1). Closed form for lognormal, numeric inversion for the
  /// mixture, nearest rank for empirical samples.
  double quantile(double q) const;
};

struct LognormalFit {
  double mu;
  double sigma;
};

/// Solves exp(mu + sigma^2/2) = mean and exp(mu + z99 sigma) = p99 by
/// bisection on sigma over [0, z99]. Throws std::invalid_argument when no
/// solution exists.
LognormalFit calibrate_lognormal(double mean_s, double p99_s);

double lognormal_mean(double mu, double sigma);
double lognormal_quantile(double mu, double sigma, double z);

/// Inverse standard normal CDF, p in (0,1).
double normal_quantile(double p);

double sample_latency(const LatencyModel& m, Rng& rng);

/// One value in seconds per line; '#' comments and blank lines ignored.
std::vector<double> read_latency_file(const std::string& path);

struct WorkerModel {
  LatencyModel latency;
  double top1_accuracy = 1.0;
  int class_count = kDefaultClassCount;

  void validate() const;
};

struct ScnnSample {
  double latency_s;
  ClassId prediction;
};

/// Draws a class that is correct with probability `accuracy`, otherwise uniform
/// over the wrong classes.
ClassId sample_class(ClassId truth, double accuracy, int class_count, Rng& rng);

ScnnSample sample_scnn(const WorkerModel& w, ClassId truth, Rng& rng);

/// Oracle collage-cnn. A cell yields a detection with probability p_detect;
/// that detection is its cell box shifted by up to box_jitter of the cell side
/// on each axis and carries the right class with probability cell_accuracy.
struct CollageModel {
  LatencyModel latency;
  double p_detect = 1.0;
  double cell_accuracy = 1.0;
  double box_jitter = 0.0;
  int class_count = kDefaultClassCount;

  /// Lower bound of oracle detection confidences.
  static constexpr double kConfidenceFloor = 0.15;

  void validate() const;
};

struct CollageSample {
  double latency_s;
  std::vector<Detection> detections;
};

CollageSample sample_collage(const CollageModel& m, std::span<const ClassId> truths,
                             const CollageLayout& layout, Rng& rng);

/// Encode/decode overhead per grid size. Measured points for K = 3, 4, 5;
/// other sizes interpolate linearly in K^2 (clamped at zero).
struct CostModel {
  std::optional<double> encode_override;
  std::optional<double> decode_override;

  double encode_s(int k) const;
  double decode_s(int k) const;
};

/// Source of collage-worker results for the simulator.
class CollageBackend {
 public:
  virtual ~CollageBackend() = default;
  virtual CollageSample infer(std::span<const ClassId> truths, const CollageLayout& layout,
                              Rng& rng) = 0;
};

class OracleCollageBackend final : public CollageBackend {
 public:
  explicit OracleCollageBackend(CollageModel model);
  CollageSample infer(std::span<const ClassId> truths, const CollageLayout& layout,
                      Rng& rng) override;

 private:
  CollageModel model_;
};

/// Replays recorded detection files in order, wrapping around at the end.
/// Every file must carry a `latency` line.
class TraceCollageBackend final : public CollageBackend {
 public:
  explicit TraceCollageBackend(std::vector<DetectionFile> files);
  /// Loads every regular file in `dir`, sorted by name.
  static TraceCollageBackend from_directory(const std::string& dir,
                                            int class_count = kDefaultClassCount);

  CollageSample infer(std::span<const ClassId> truths, const CollageLayout& layout,
                      Rng& rng) override;
  std::size_t size() const noexcept { return files_.size(); }

 private:
  std::vector<DetectionFile> files_;
  std::size_t next_ = 0;
};

}  // namespace collage
