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

#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>

#include "collage/backend.hpp"
#include "collage/engine.hpp"

using namespace collage;

namespace {

std::vector<double> draw(const LatencyModel& m, std::size_t n, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<double> out(n);
  for (auto& x : out) x = sample_latency(m, rng);
  return out;
}

double nearest_rank_p99(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  return v[static_cast<std::size_t>(std::ceil(0.99 * static_cast<double>(v.size()))) - 1];
}

}  // namespace

TEST_CASE("rng streams are deterministic and independent of stream count") {
  Rng a = Rng::stream(42, StreamRole::kWorker, 3);
  Rng b = Rng::stream(42, StreamRole::kWorker, 3);
  for (int i = 0; i < 100; ++i) REQUIRE(a.next_u64() == b.next_u64());

  SimStreams small(42, 4), large(42, 25);
  for (int i = 0; i < 100; ++i) {
    REQUIRE(small.worker[2].uniform01() == large.worker[2].uniform01());
    REQUIRE(small.collage.uniform01() == large.collage.uniform01());
  }
  CHECK(Rng::stream(42, StreamRole::kWorker, 0).next_u64() !=
        Rng::stream(42, StreamRole::kReplica, 0).next_u64());

  Rng r(1);
  for (int i = 0; i < 1000; ++i) {
    const double u = r.uniform01();
    REQUIRE(u >= 0.0);
    REQUIRE(u < 1.0);
    REQUIRE(r.uniform_index(7) < 7u);
  }
}

TEST_CASE("normal quantile") {
  CHECK(normal_quantile(0.99) == doctest::Approx(kZ99).epsilon(1e-9));
  CHECK(normal_quantile(0.95) == doctest::Approx(kZ95).epsilon(1e-9));
  CHECK(normal_quantile(0.5) == doctest::Approx(0.0).epsilon(1e-12));
}

TEST_CASE("sample_latency") {
  SUBCASE("degenerate lognormal") {
    const auto m = LatencyModel::lognormal(std::log(0.15), 0.0);
    for (double x : draw(m, 100, 1)) REQUIRE(x == doctest::Approx(0.15).epsilon(1e-15));
  }
  SUBCASE("empirical") {
    const auto m = LatencyModel::empirical({0.1, 0.2});
    const auto xs = draw(m, 10000, 2);
    double mean = 0.0;
    for (double x : xs) {
      REQUIRE((x == 0.1 || x == 0.2));
      mean += x / 10000.0;
    }
    CHECK(mean >= 0.13);
    CHECK(mean <= 0.17);
    CHECK_THROWS_AS(LatencyModel::empirical({}), std::invalid_argument);
  }
  SUBCASE("calibrated lognormal tail") {
    const auto m = LatencyModel::calibrated(0.15, 0.70);
    const double p99 = nearest_rank_p99(draw(m, 100000, 3));
    CHECK(p99 >= 0.63);
    CHECK(p99 <= 0.77);
  }
  SUBCASE("mixture") {
    const auto all_slow = LatencyModel::mixture(std::log(0.1), 0.0, 1.0, 3.0);
    for (double x : draw(all_slow, 50, 4)) REQUIRE(x == doctest::Approx(0.3));
    const auto m = LatencyModel::mixture(std::log(0.1), 0.3, 0.05, 5.0);
    auto xs = draw(m, 100000, 5);
    std::sort(xs.begin(), xs.end());
    // Numeric inversion vs empirical quantile.
    CHECK(m.quantile(0.99) == doctest::Approx(xs[98999]).epsilon(0.05));
    double mean = 0.0;
    for (double x : xs) mean += x / static_cast<double>(xs.size());
    CHECK(m.mean() == doctest::Approx(mean).epsilon(0.02));
    CHECK_THROWS_AS(LatencyModel::mixture(0.0, 0.1, 1.5, 2.0), std::invalid_argument);
    CHECK_THROWS_AS(LatencyModel::mixture(0.0, 0.1, 0.5, 0.5), std::invalid_argument);
  }
  SUBCASE("every sample is positive") {
    for (double x : draw(LatencyModel::calibrated(0.15, 0.70), 10000, 6)) REQUIRE(x > 0.0);
  }
}

TEST_CASE("calibrate_lognormal") {
  SUBCASE("fit reproduces both targets") {
    const LognormalFit fit = calibrate_lognormal(0.15, 0.70);
    // Independent back-substitution.
    const double mean = std::exp(fit.mu + fit.sigma * fit.sigma / 2.0);
    const double q99 = std::exp(fit.mu + 2.3263478740408408 * fit.sigma);
    CHECK(std::abs(mean / 0.15 - 1.0) < 1e-6);
    CHECK(std::abs(q99 / 0.70 - 1.0) < 1e-6);
    CHECK(std::abs(q99 / 0.70 - 1.0) < 1e-9);
  }
  SUBCASE("closed-form spot value mu = -0.5, sigma = 1") {
    const LognormalFit fit = calibrate_lognormal(1.0, std::exp(-0.5 + kZ99));
    CHECK(fit.sigma == doctest::Approx(1.0).epsilon(1e-9));
    CHECK(fit.mu == doctest::Approx(-0.5).epsilon(1e-9));
    CHECK(std::exp(fit.mu + 0.5) == doctest::Approx(1.0));
    // The mean constraint always fixes mu = ln(mean) - sigma^2 / 2.
    const LognormalFit other = calibrate_lognormal(1.0, std::exp(kZ99));
    CHECK(other.mu == doctest::Approx(-other.sigma * other.sigma / 2.0));
  }
  SUBCASE("infeasible inputs") {
    CHECK_THROWS_AS(calibrate_lognormal(0.70 * 1.001, 0.70), std::invalid_argument);
    CHECK_THROWS_AS(calibrate_lognormal(0.5, 0.5), std::invalid_argument);
    CHECK_THROWS_AS(calibrate_lognormal(0.0, 0.5), std::invalid_argument);
    // Beyond exp(z^2 / 2) no lognormal reaches the ratio.
    CHECK_THROWS_AS(calibrate_lognormal(1.0, 20.0), std::invalid_argument);
  }
  SUBCASE("analytic quantiles") {
    const auto m = LatencyModel::calibrated(0.15, 0.70);
    CHECK(m.quantile(0.99) == doctest::Approx(0.70).epsilon(1e-8));
    CHECK(m.mean() == doctest::Approx(0.15).epsilon(1e-12));
    CHECK(LatencyModel::empirical({0.3, 0.1, 0.2}).quantile(0.5) == 0.2);
  }
}

TEST_CASE("sample_scnn") {
  WorkerModel w{LatencyModel::constant(0.15), 1.0, 10};
  Rng rng(9);
  for (int i = 0; i < 200; ++i) {
    const auto s = sample_scnn(w, i % 10, rng);
    REQUIRE(s.prediction == i % 10);
    REQUIRE(s.latency_s == 0.15);
  }
  WorkerModel binary{LatencyModel::constant(0.1), 0.0, 2};
  for (int i = 0; i < 200; ++i) REQUIRE(sample_scnn(binary, i % 2, rng).prediction == 1 - i % 2);

  WorkerModel wrong_only{LatencyModel::constant(0.1), 0.0, 5};
  for (int i = 0; i < 500; ++i) {
    const auto p = sample_scnn(wrong_only, 2, rng).prediction;
    REQUIRE(p != 2);
    REQUIRE(p >= 0);
    REQUIRE(p < 5);
  }

  WorkerModel resnet{LatencyModel::constant(0.1), 0.922, 100};
  int correct = 0;
  for (int i = 0; i < 100000; ++i) correct += sample_scnn(resnet, i % 100, rng).prediction == i % 100;
  CHECK(correct / 1e5 >= 0.917);
  CHECK(correct / 1e5 <= 0.927);

  CHECK_THROWS(sample_scnn(resnet, 100, rng));
}

TEST_CASE("sample_collage") {
  const CollageLayout layout(3);
  std::vector<ClassId> truths{0, 1, 2, 3, 4, 5, 6, 7, 8};
  Rng rng(10);

  SUBCASE("perfect oracle decodes to the truths") {
    CollageModel m{LatencyModel::constant(0.14), 1.0, 1.0, 0.0, 100};
    const auto s = sample_collage(m, truths, layout, rng);
    CHECK(s.latency_s == 0.14);
    const auto cells = decode(s.detections, layout, 0.15);
    for (std::size_t i = 0; i < 9; ++i) REQUIRE(cells[i]->class_id == truths[i]);
  }
  SUBCASE("no detections when p_detect = 0") {
    CollageModel m{LatencyModel::constant(0.14), 0.0, 1.0, 0.0, 100};
    CHECK(sample_collage(m, truths, layout, rng).detections.empty());
  }
  SUBCASE("decoded per-cell top-1 is p_detect * cell_accuracy") {
    CollageModel m{LatencyModel::constant(0.14), 0.95, 0.92, 0.2, 100};
    std::size_t correct = 0, total = 0;
    for (int c = 0; c < 10000; ++c) {
      for (auto& t : truths) t = static_cast<ClassId>(rng.uniform_index(100));
      const auto cells = decode(sample_collage(m, truths, layout, rng).detections, layout, 0.15);
      for (std::size_t i = 0; i < 9; ++i) correct += cells[i] && cells[i]->class_id == truths[i];
      total += 9;
    }
    const double acc = static_cast<double>(correct) / static_cast<double>(total);
    CHECK(acc >= 0.86);
    CHECK(acc <= 0.89);
  }
  SUBCASE("jittered boxes stay assigned to their own cell") {
    CollageModel m{LatencyModel::constant(0.14), 1.0, 1.0, 0.49, 100};
    for (int c = 0; c < 10000 / 9 + 1; ++c) {
      const auto s = sample_collage(m, truths, layout, rng);
      REQUIRE(s.detections.size() == 9);
      for (std::size_t i = 0; i < 9; ++i) {
        REQUIRE(s.detections[i].confidence >= 0.15);
        REQUIRE(assign_cell(s.detections[i].box, layout) == i);
      }
    }
  }
  SUBCASE("model validation") {
    CollageModel m{LatencyModel::constant(0.14), 1.0, 1.0, 0.5, 100};
    CHECK_THROWS_AS(m.validate(), std::invalid_argument);
    CHECK_THROWS(sample_collage(CollageModel{LatencyModel::constant(0.1)}, std::vector<ClassId>{1},
                                layout, rng));
  }
}

TEST_CASE("cost model") {
  const CostModel c;
  CHECK(c.encode_s(3) == doctest::Approx(0.010));
  CHECK(c.encode_s(4) == doctest::Approx(0.013));
  CHECK(c.encode_s(5) == doctest::Approx(0.017));
  CHECK(c.decode_s(3) == doctest::Approx(0.010));
  CHECK(c.decode_s(4) == doctest::Approx(0.028));
  CHECK(c.decode_s(5) == doctest::Approx(0.047));
  CHECK(c.decode_s(2) >= 0.0);
  CHECK(c.encode_s(6) > c.encode_s(5));
  CostModel fixed{0.001, 0.002};
  CHECK(fixed.encode_s(3) == 0.001);
  CHECK(fixed.decode_s(7) == 0.002);
}

TEST_CASE("trace backend replays files in order") {
  const auto dir = std::filesystem::temp_directory_path() / "collage_trace_test";
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  {
    std::ofstream(dir / "a.det") << "latency 0.2\n0.25 0.25 0.5 0.5 4 0.9\n";
    std::ofstream(dir / "b.det") << "latency 0.3\n";
  }
  TraceCollageBackend trace = TraceCollageBackend::from_directory(dir.string());
  REQUIRE(trace.size() == 2);
  const CollageLayout layout(2);
  Rng rng(1);
  const std::vector<ClassId> truths(4, 0);
  const auto first = trace.infer(truths, layout, rng);
  CHECK(first.latency_s == 0.2);
  CHECK(first.detections.size() == 1);
  CHECK(trace.infer(truths, layout, rng).latency_s == 0.3);
  CHECK(trace.infer(truths, layout, rng).latency_s == 0.2);

  std::ofstream(dir / "c.det") << "0.25 0.25 0.5 0.5 4 0.9\n";
  CHECK_THROWS(TraceCollageBackend::from_directory(dir.string()));
  std::filesystem::remove_all(dir);
}

TEST_CASE("latency file") {
  const auto path = std::filesystem::temp_directory_path() / "collage_latency_test.txt";
  std::ofstream(path) << "# trace\n0.1\n0.25\n\n";
  CHECK(read_latency_file(path.string()) == std::vector<double>{0.1, 0.25});
  std::ofstream(path) << "0.1\nslow\n";
  CHECK_THROWS(read_latency_file(path.string()));
  std::filesystem::remove(path);
}
