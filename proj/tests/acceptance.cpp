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

// Acceptance checks. Prints one PASS/FAIL line per criterion and exits
// nonzero if any criterion fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "collage/backend.hpp"
#include "collage/codec.hpp"
#include "collage/detection_io.hpp"
#include "collage/engine.hpp"
#include "collage/geometry.hpp"
#include "collage/metrics.hpp"
#include "collage/rng.hpp"
#include "collage/wire.hpp"
#include "live_replay.hpp"
#include "oracles.hpp"
#include "process.hpp"
#include "wire_gen.hpp"

using namespace collage;
namespace fs = std::filesystem;

namespace {

struct Verdict {
  bool ok = true;
  std::string detail;

  void require(bool cond, const std::string& what) {
    if (!cond && ok) detail = what;
    ok = ok && cond;
  }
};

std::string fmt(const char* f, double a, double b = 0, double c = 0) {
  char buf[160];
  std::snprintf(buf, sizeof buf, f, a, b, c);
  return buf;
}

int failures = 0;

void criterion(int id, const char* name, double limit_s, const std::function<Verdict()>& body) {
  const auto t0 = std::chrono::steady_clock::now();
  Verdict v;
  try {
    v = body();
  } catch (const std::exception& e) {
    v.ok = false;
    v.detail = std::string("exception: ") + e.what();
  }
  const double elapsed = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  if (limit_s > 0 && elapsed >= limit_s && v.ok) {
    v.ok = false;
    v.detail = fmt("runtime %.3f s over the %.0f s limit", elapsed, limit_s);
  }
  if (!v.ok) ++failures;
  std::printf("%s %d %s (%.3f s)%s%s\n", v.ok ? "PASS" : "FAIL", id, name, elapsed,
              v.detail.empty() ? "" : ": ", v.detail.c_str());
  std::fflush(stdout);
}

const fs::path kSource = COLLAGE_SOURCE_DIR;

std::optional<ClassId> cell_class(const CellPredictions& cells, std::size_t i) {
  return cells[i] ? std::optional<ClassId>(cells[i]->class_id) : std::nullopt;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

}  // namespace

int main() {
  using testing::kA, testing::kB, testing::kC, testing::kD;

  criterion(1, "decoding scenarios", 1.0, [] {
    Verdict v;
    const CollageLayout layout(2);
    const fs::path dir = kSource / "tests" / "fixtures";
    auto load = [&](const char* name) {
      return decode(read_detection_file((dir / name).string()).detections, layout);
    };
    const std::vector<std::optional<ClassId>> want1{kA, kB, kC, kD};
    const std::vector<std::optional<ClassId>> want2{kA, std::nullopt, kC, kD};
    for (auto [name, want] : {std::pair{"scenario1.det", want1}, std::pair{"scenario2.det", want2},
                              std::pair{"scenario3.det", want1}}) {
      const CellPredictions cells = load(name);
      std::vector<std::optional<ClassId>> got;
      for (std::size_t i = 0; i < 4; ++i) got.push_back(cell_class(cells, i));
      v.require(got == want, std::string(name) + " assignment differs");
    }
    v.require(load("scenario3.det")[1]->confidence == 0.80, "scenario 3 cell 1 confidence");

    // Straddling box: argmax over the stated similarities, and the realized box.
    const std::vector<double> stated{1.0 / 3, 1.0 / 7, 1.0 / 7, 1.0 / 17};
    v.require(best_cell(stated) == 0u, "argmax over 1/3, 1/7, 1/7, 1/17");
    const Box spread = testing::spread_box();
    const double expect[4] = {1.0 / 3, 1.0 / 7, 1.0 / 7, 1.0 / 15};
    for (std::size_t i = 0; i < 4; ++i) {
      const double j = jaccard(spread, layout.cell(i)).value();
      v.require(std::abs(j - expect[i]) < 1e-12, fmt("straddling box IoU %g vs %g", j, expect[i]));
    }
    return v;
  });

  criterion(2, "jaccard matches pixel rasterization on 1e4 pairs", 10.0, [] {
    Verdict v;
    std::mt19937_64 gen(20260101);
    constexpr int kGrid = 256;
    double worst = 0.0;
    for (int t = 0; t < 10000; ++t) {
      const auto a = testing::random_grid_box(gen, kGrid);
      const auto b = testing::random_grid_box(gen, kGrid);
      const double got = jaccard(a.to_box(kGrid), b.to_box(kGrid)).value();
      worst = std::max(worst, std::abs(got - testing::raster_iou(a, b)));
    }
    v.require(worst <= 1e-6, fmt("max deviation %g", worst));
    v.detail = v.ok ? fmt("max deviation %.3g", worst) : v.detail;
    return v;
  });

  criterion(3, "redundancy overhead arithmetic", 0, [] {
    Verdict v;
    v.require(redundancy_overhead(4) == 0.25, "n=4");
    v.require(redundancy_overhead(9) == 1.0 / 9.0, "n=9");
    v.require(std::lround(100 * redundancy_overhead(9)) == 11, "n=9 rounds to 11%");
    v.require(redundancy_overhead(25) == 0.04, "n=25");
    return v;
  });

  criterion(4, "recovery accuracy ledger", 0, [] {
    Verdict v;
    RecoveryLedger t1;
    t1.total_requests = 8310;
    t1.slowdown_requests = 1480;
    t1.collage_unavailable = 200;
    t1.collage_used = 1280;
    t1.collage_correct = 1119;
    t1.check_invariants();
    RecoveryLedger t2;
    t2.total_requests = 4680;
    t2.slowdown_requests = 1002;
    t2.collage_unavailable = 313;
    t2.collage_used = 689;
    t2.collage_correct = 563;
    t2.check_invariants();
    const double a1 = *recovery_accuracy(t1), a2 = *recovery_accuracy(t2);
    v.require(std::abs(a1 - 0.874) <= 0.0005, fmt("3x3 accuracy %.6f", a1));
    v.require(std::abs(a2 - 0.8171) <= 0.0005, fmt("4x4 accuracy %.6f", a2));
    if (v.ok) v.detail = fmt("%.4f and %.4f", a1, a2);
    return v;
  });

  criterion(5, "latency calibration", 5.0, [] {
    Verdict v;
    const LognormalFit fit = calibrate_lognormal(0.15, 0.70);
    const double mean = lognormal_mean(fit.mu, fit.sigma);
    const double q99 = lognormal_quantile(fit.mu, fit.sigma, kZ99);
    v.require(std::abs(mean / 0.15 - 1) <= 1e-6, fmt("closed-form mean %.9g", mean));
    v.require(std::abs(q99 / 0.70 - 1) <= 1e-6, fmt("closed-form p99 %.9g", q99));
    const LatencyModel m = LatencyModel::lognormal(fit.mu, fit.sigma);
    Rng rng = Rng::stream(1, StreamRole::kWorker, 0);
    std::vector<double> xs(100000);
    for (double& x : xs) x = sample_latency(m, rng);
    const LatencySummary s = summarize(xs);
    v.require(s.mean_s >= 0.14 && s.mean_s <= 0.16, fmt("sample mean %.4f", s.mean_s));
    v.require(s.p99_s >= 0.63 && s.p99_s <= 0.77, fmt("sample p99 %.4f", s.p99_s));
    if (v.ok) v.detail = fmt("sample mean %.4f, p99 %.4f", s.mean_s, s.p99_s);
    return v;
  });

  criterion(6, "end-to-end tail reduction", 30.0, [] {
    Verdict v;
    std::vector<RunConfig> cfgs;
    for (auto kind : {StrategyKind::kNoReplication, StrategyKind::kTimeoutReplication,
                      StrategyKind::kCollage}) {
      RunConfig c = default_run_config();
      c.batches = 2000;
      c.seed = 1;
      c.strategy.kind = kind;
      cfgs.push_back(c);
    }
    const auto results = run_experiments(cfgs, 0);
    const LatencySummary none = summarize(results[0].latencies_s);
    const LatencySummary timeout = summarize(results[1].latencies_s);
    const LatencySummary coll = summarize(results[2].latencies_s);
    v.require(coll.p99_s < none.p99_s, fmt("p99 %.4f vs %.4f", coll.p99_s, none.p99_s));
    v.require(coll.stddev_s < none.stddev_s && coll.stddev_s < timeout.stddev_s,
              fmt("stddev %.4f vs %.4f / %.4f", coll.stddev_s, none.stddev_s, timeout.stddev_s));
    v.require(coll.mean_s <= 1.05 * timeout.mean_s, fmt("mean %.4f vs %.4f", coll.mean_s, timeout.mean_s));
    if (v.ok) {
      v.detail = fmt("p99 %.3f vs %.3f s, stddev %.3f s", coll.p99_s, none.p99_s, coll.stddev_s) +
                 fmt(" vs %.3f / %.3f s", none.stddev_s, timeout.stddev_s);
    }
    return v;
  });

  criterion(7, "oracle backend per-cell accuracy", 0, [] {
    Verdict v;
    CollageModel model = default_run_config().collage;
    model.p_detect = 0.95;
    model.cell_accuracy = 0.874 / 0.95;
    OracleCollageBackend backend(model);
    const CollageLayout layout(3);
    Rng truth_rng = Rng::stream(7, StreamRole::kTruth, 0);
    Rng rng = Rng::stream(7, StreamRole::kCollage, 0);
    std::uint64_t correct = 0, total = 0;
    std::vector<ClassId> truths(9);
    for (int c = 0; c < 10000; ++c) {
      for (ClassId& t : truths) {
        t = static_cast<ClassId>(truth_rng.uniform_index(static_cast<std::uint64_t>(model.class_count)));
      }
      const CellPredictions cells = decode(backend.infer(truths, layout, rng).detections, layout);
      for (std::size_t i = 0; i < 9; ++i) {
        correct += cells[i] && cells[i]->class_id == truths[i];
        ++total;
      }
    }
    const double acc = static_cast<double>(correct) / static_cast<double>(total);
    v.require(std::abs(acc - 0.874) <= 0.015, fmt("accuracy %.4f", acc));
    if (v.ok) v.detail = fmt("accuracy %.4f", acc);
    return v;
  });

  criterion(8, "simulate is byte-identical across invocations", 0, [] {
    Verdict v;
    const fs::path root = fs::temp_directory_path() / "collage_acceptance";
    fs::remove_all(root);
    std::vector<std::string> outs;
    for (const char* run : {"first", "second"}) {
      const fs::path dir = root / run;
      fs::create_directories(dir);
      const auto r = testing::run({COLLAGE_CLI_EXE, "simulate", "-c",
                                   (kSource / "configs" / "default.conf").string(), "--seed", "1",
                                   "-o", dir.string()});
      v.require(r.exit_code == 0, "simulate exited " + std::to_string(r.exit_code) + ": " + r.err);
      outs.push_back(r.out);
    }
    v.require(outs[0] == outs[1], "stdout differs");
    std::size_t files = 0;
    for (const auto& entry : fs::directory_iterator(root / "first")) {
      const fs::path other = root / "second" / entry.path().filename();
      v.require(fs::exists(other) && slurp(entry.path()) == slurp(other),
                entry.path().filename().string() + " differs");
      ++files;
    }
    v.require(files == 4, "expected 4 output files, got " + std::to_string(files));
    fs::remove_all(root);
    return v;
  });

  criterion(9, "wire round-trip and live replay", 0, [] {
    Verdict v;
    std::mt19937_64 gen(99);
    for (int i = 0; i < 10000 && v.ok; ++i) {
      const wire::Message m = testing::random_message(gen);
      v.require(wire::parse(wire::frame(m)) == m, "round-trip mismatch: " + wire::frame(m));
    }
    for (const auto& f : testing::run_live_replay()) v.require(false, f);
    return v;
  });

  return failures == 0 ? 0 : 1;
}
