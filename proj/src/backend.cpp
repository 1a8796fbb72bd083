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

#include "collage/backend.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <stdexcept>

#include "collage/text.hpp"

namespace collage {

namespace {

double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::numbers::sqrt2); }

void require_probability(double p, const char* name) {
  if (!(p >= 0.0 && p <= 1.0)) {
    throw std::invalid_argument(std::string(name) + " must be in [0,1]");
  }
}

}  // namespace

LatencyModel LatencyModel::lognormal(double mu, double sigma) {
  LatencyModel m;
  m.kind = LatencyKind::kLognormal;
  m.mu = mu;
  m.sigma = sigma;
  m.validate();
  return m;
}

LatencyModel LatencyModel::mixture(double mu, double sigma, double p_straggler,
                                   double straggler_scale) {
  LatencyModel m;
  m.kind = LatencyKind::kLognormalMixture;
  m.mu = mu;
  m.sigma = sigma;
  m.p_straggler = p_straggler;
  m.straggler_scale = straggler_scale;
  m.validate();
  return m;
}

LatencyModel LatencyModel::empirical(std::vector<double> samples) {
  LatencyModel m;
  m.kind = LatencyKind::kEmpirical;
  m.samples = std::move(samples);
  m.validate();
  return m;
}

LatencyModel LatencyModel::constant(double seconds) { return empirical({seconds}); }

LatencyModel LatencyModel::calibrated(double mean_s, double p99_s) {
  const LognormalFit fit = calibrate_lognormal(mean_s, p99_s);
  return lognormal(fit.mu, fit.sigma);
}

void LatencyModel::validate() const {
  switch (kind) {
    case LatencyKind::kLognormalMixture:
      require_probability(p_straggler, "p_straggler");
      if (!(straggler_scale >= 1.0) || !std::isfinite(straggler_scale)) {
        throw std::invalid_argument("straggler_scale must be >= 1");
      }
      [[fallthrough]];
    case LatencyKind::kLognormal:
      if (!std::isfinite(mu)) throw std::invalid_argument("lognormal mu must be finite");
      if (!(sigma >= 0.0) || !std::isfinite(sigma)) {
        throw std::invalid_argument("lognormal sigma must be finite and >= 0");
      }
      break;
    case LatencyKind::kEmpirical:
      if (samples.empty()) throw std::invalid_argument("empirical latency model has no samples");
      for (double s : samples) {
        if (!(s > 0.0) || !std::isfinite(s)) {
          throw std::invalid_argument("empirical latency samples must be positive");
        }
      }
      break;
  }
}

double LatencyModel::mean() const {
  switch (kind) {
    case LatencyKind::kLognormal:
      return lognormal_mean(mu, sigma);
    case LatencyKind::kLognormalMixture:
      return lognormal_mean(mu, sigma) * (1.0 - p_straggler + p_straggler * straggler_scale);
    case LatencyKind::kEmpirical: {
      double sum = 0.0;
      for (double s : samples) sum += s;
      return sum / static_cast<double>(samples.size());
    }
  }
  return 0.0;
}

double LatencyModel::quantile(double q) const {
  if (!(q > 0.0 && q < 1.0)) throw std::invalid_argument("quantile level must be in (0,1)");
  switch (kind) {
    case LatencyKind::kLognormal:
      return lognormal_quantile(mu, sigma, normal_quantile(q));
    case LatencyKind::kLognormalMixture: {
      if (sigma == 0.0) {
        return q <= 1.0 - p_straggler ? std::exp(mu) : std::exp(mu) * straggler_scale;
      }
      const double ls = std::log(straggler_scale);
      auto cdf = [&](double logx) {
        return (1.0 - p_straggler) * normal_cdf((logx - mu) / sigma) +
               p_straggler * normal_cdf((logx - mu - ls) / sigma);
      };
      double lo = mu - 40.0 * sigma, hi = mu + ls + 40.0 * sigma;
      for (int i = 0; i < 200; ++i) {
        const double mid = 0.5 * (lo + hi);
        (cdf(mid) < q ? lo : hi) = mid;
      }
      return std::exp(0.5 * (lo + hi));
    }
    case LatencyKind::kEmpirical: {
      std::vector<double> sorted = samples;
      std::sort(sorted.begin(), sorted.end());
      const auto rank = static_cast<std::size_t>(
          std::ceil(q * static_cast<double>(sorted.size())));
      return sorted[std::clamp<std::size_t>(rank, 1, sorted.size()) - 1];
    }
  }
  return 0.0;
}

double lognormal_mean(double mu, double sigma) { return std::exp(mu + sigma * sigma / 2.0); }

double lognormal_quantile(double mu, double sigma, double z) { return std::exp(mu + z * sigma); }

double normal_quantile(double p) {
  if (!(p > 0.0 && p < 1.0)) throw std::invalid_argument("normal quantile level must be in (0,1)");
  double lo = -40.0, hi = 40.0;
  for (int i = 0; i < 200 && hi - lo > 1e-15; ++i) {
    const double mid = 0.5 * (lo + hi);
    (normal_cdf(mid) < p ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

LognormalFit calibrate_lognormal(double mean_s, double p99_s) {
  if (!(mean_s > 0.0) || !std::isfinite(mean_s) || !std::isfinite(p99_s)) {
    throw std::invalid_argument("calibrate_lognormal: mean must be positive and finite");
  }
  if (!(p99_s > mean_s)) {
    throw std::invalid_argument("calibrate_lognormal: no solution, p99 must exceed the mean");
  }
  // Log of the fitted p99 over the target p99, as a function of sigma once
  // the mean constraint fixes mu. Increasing on [0, z99].
  const double log_ratio = std::log(p99_s / mean_s);
  auto residual = [&](double s) { return -s * s / 2.0 + kZ99 * s - log_ratio; };
  if (residual(kZ99) < 0.0) {
    throw std::invalid_argument(
        "calibrate_lognormal: no solution, p99/mean ratio exceeds what a lognormal can reach");
  }
  double lo = 0.0, hi = kZ99;
  double sigma = hi;
  for (int i = 0; i < 200; ++i) {
    sigma = 0.5 * (lo + hi);
    const double r = residual(sigma);
    if (std::abs(std::expm1(r)) < 1e-12 || hi - lo < 1e-16) break;
    (r < 0.0 ? lo : hi) = sigma;
  }
  return LognormalFit{std::log(mean_s) - sigma * sigma / 2.0, sigma};
}

double sample_latency(const LatencyModel& m, Rng& rng) {
  switch (m.kind) {
    case LatencyKind::kLognormal:
      return std::exp(m.mu + m.sigma * rng.normal());
    case LatencyKind::kLognormalMixture: {
      double x = std::exp(m.mu + m.sigma * rng.normal());
      if (rng.bernoulli(m.p_straggler)) x *= m.straggler_scale;
      return x;
    }
    case LatencyKind::kEmpirical:
      if (m.samples.empty()) throw std::invalid_argument("empirical latency model has no samples");
      return m.samples[rng.uniform_index(m.samples.size())];
  }
  return 0.0;
}

std::vector<double> read_latency_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);
  std::vector<double> out;
  std::string raw;
  std::size_t lineno = 0;
  while (std::getline(in, raw)) {
    ++lineno;
    const auto line = trim(strip_comment(raw));
    if (line.empty()) continue;
    const auto v = parse_real(line);
    if (!v || *v <= 0.0) {
      throw std::runtime_error(path + ":" + std::to_string(lineno) +
                               ": expected a positive latency in seconds");
    }
    out.push_back(*v);
  }
  return out;
}

void WorkerModel::validate() const {
  latency.validate();
  require_probability(top1_accuracy, "top1_accuracy");
  if (class_count < 1) throw std::invalid_argument("class_count must be >= 1");
}

ClassId sample_class(ClassId truth, double accuracy, int class_count, Rng& rng) {
  if (class_count < 2 || rng.bernoulli(accuracy)) return truth;
  auto wrong = static_cast<ClassId>(rng.uniform_index(static_cast<std::uint64_t>(class_count - 1)));
  return wrong >= truth ? wrong + 1 : wrong;
}

ScnnSample sample_scnn(const WorkerModel& w, ClassId truth, Rng& rng) {
  if (truth < 0 || truth >= w.class_count) throw std::invalid_argument("truth class out of range");
  const double latency = sample_latency(w.latency, rng);
  return ScnnSample{latency, sample_class(truth, w.top1_accuracy, w.class_count, rng)};
}

void CollageModel::validate() const {
  latency.validate();
  require_probability(p_detect, "p_detect");
  require_probability(cell_accuracy, "cell_accuracy");
  if (!(box_jitter >= 0.0 && box_jitter < 0.5)) {
    throw std::invalid_argument("box_jitter must be in [0, 0.5)");
  }
  if (class_count < 1) throw std::invalid_argument("class_count must be >= 1");
}

CollageSample sample_collage(const CollageModel& m, std::span<const ClassId> truths,
                             const CollageLayout& layout, Rng& rng) {
  if (truths.size() != layout.n()) {
    throw std::invalid_argument("sample_collage: one truth label per cell required");
  }
  CollageSample out{sample_latency(m.latency, rng), {}};
  const double side = 1.0 / layout.k();
  for (std::size_t i = 0; i < truths.size(); ++i) {
    if (!rng.bernoulli(m.p_detect)) continue;
    const Box& cell = layout.cell(i);
    const double dx = rng.uniform(-m.box_jitter, m.box_jitter) * side;
    const double dy = rng.uniform(-m.box_jitter, m.box_jitter) * side;
    const double confidence = rng.uniform(CollageModel::kConfidenceFloor, 1.0);
    const ClassId cls = sample_class(truths[i], m.cell_accuracy, m.class_count, rng);
    out.detections.push_back(
        Detection{Box(cell.cx() + dx, cell.cy() + dy, cell.w(), cell.h()), cls, confidence});
  }
  return out;
}

namespace {

struct CostPoint {
  double images;
  double encode_s;
  double decode_s;
};

constexpr std::array<CostPoint, 3> kMeasuredCosts{{
    {9.0, 0.010, 0.010},
    {16.0, 0.013, 0.028},
    {25.0, 0.017, 0.047},
}};

double interpolate_cost(int k, double CostPoint::*field) {
  if (k < 1) throw std::invalid_argument("cost model needs K >= 1");
  const double n = static_cast<double>(k) * k;
  std::size_t seg = 0;
  if (n > kMeasuredCosts[1].images) seg = 1;
  const CostPoint& a = kMeasuredCosts[seg];
  const CostPoint& b = kMeasuredCosts[seg + 1];
  const double t = (n - a.images) / (b.images - a.images);
  return std::max(0.0, a.*field + t * (b.*field - a.*field));
}

}  // namespace

double CostModel::encode_s(int k) const {
  return encode_override ? *encode_override : interpolate_cost(k, &CostPoint::encode_s);
}

double CostModel::decode_s(int k) const {
  return decode_override ? *decode_override : interpolate_cost(k, &CostPoint::decode_s);
}

OracleCollageBackend::OracleCollageBackend(CollageModel model) : model_(std::move(model)) {
  model_.validate();
}

CollageSample OracleCollageBackend::infer(std::span<const ClassId> truths,
                                          const CollageLayout& layout, Rng& rng) {
  return sample_collage(model_, truths, layout, rng);
}

TraceCollageBackend::TraceCollageBackend(std::vector<DetectionFile> files)
    : files_(std::move(files)) {
  if (files_.empty()) throw std::invalid_argument("trace backend needs at least one file");
  for (const auto& f : files_) {
    if (!f.latency_s) throw std::invalid_argument("trace file without a `latency` line");
  }
}

TraceCollageBackend TraceCollageBackend::from_directory(const std::string& dir, int class_count) {
  std::vector<std::filesystem::path> paths;
  for (const auto& entry : std::filesystem::directory_iterator(dir)) {
    if (entry.is_regular_file()) paths.push_back(entry.path());
  }
  std::sort(paths.begin(), paths.end());
  std::vector<DetectionFile> files;
  for (const auto& p : paths) {
    try {
      files.push_back(read_detection_file(p.string(), class_count));
    } catch (const DetectionFormatError& e) {
      throw std::runtime_error(p.string() + ": " + e.what());
    }
  }
  return TraceCollageBackend(std::move(files));
}

CollageSample TraceCollageBackend::infer(std::span<const ClassId>, const CollageLayout&, Rng&) {
  const DetectionFile& f = files_[next_];
  next_ = (next_ + 1) % files_.size();
  return CollageSample{*f.latency_s, f.detections};
}

}  // namespace collage
