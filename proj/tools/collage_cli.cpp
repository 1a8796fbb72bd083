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

// Command-line front end: simulate strategies, decode detection files,
// calibrate latency models and summarize latency samples.

#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include "collage/backend.hpp"
#include "collage/config.hpp"
#include "collage/detection_io.hpp"
#include "collage/engine.hpp"
#include "collage/image.hpp"
#include "collage/metrics.hpp"
#include "collage/text.hpp"

namespace {

using namespace collage;

struct SimulateArgs {
  std::string config_path;
  std::vector<std::string> overrides;
  std::optional<std::uint64_t> seed;
  std::string strategy = "all";
  std::string out_dir = ".";
};

void write_file(const std::filesystem::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << content;
  if (!out) throw std::runtime_error("write failed for " + path.string());
}

int simulate(const SimulateArgs& args) {
  ConfigValues values;
  if (!args.config_path.empty()) values = read_config_file(args.config_path);
  for (const auto& o : args.overrides) apply_override(values, o);
  if (args.seed) values["seed"] = std::to_string(*args.seed);

  std::vector<StrategyKind> kinds;
  if (args.strategy == "all") {
    kinds = {StrategyKind::kNoReplication, StrategyKind::kTimeoutReplication,
             StrategyKind::kCollage};
  } else if (const auto k = parse_strategy(args.strategy)) {
    kinds = {*k};
  } else {
    throw std::invalid_argument("--strategy: expected all, no_replication, timeout_replication or collage");
  }

  const RunConfig base = build_run_config(values);
  std::vector<RunConfig> cfgs;
  for (StrategyKind kind : kinds) {
    RunConfig cfg = base;
    cfg.strategy.kind = kind;
    cfgs.push_back(cfg);
  }
  const auto results = run_experiments(cfgs);

  std::filesystem::create_directories(args.out_dir);
  std::ostringstream record;
  std::ostringstream console;
  for (std::size_t i = 0; i < cfgs.size(); ++i) {
    const std::string name = to_string(cfgs[i].strategy.kind);
    std::ostringstream samples;
    for (double s : results[i].latencies_s) samples << format_real(s) << '\n';
    write_file(std::filesystem::path(args.out_dir) / ("samples_" + name + ".txt"), samples.str());

    const LatencySummary summary = summarize(results[i].latencies_s);
    write_summary_record(record, name, summary, &results[i].ledger);
    record << '\n';
    console << "strategy=" << name << ' ' << format_summary_line(summary) << ' '
            << format_ledger_line(results[i].ledger) << '\n';
  }
  write_file(std::filesystem::path(args.out_dir) / "summary.txt", record.str());
  std::cout << console.str();
  return 0;
}

int decode_cmd(int k, double threshold, int classes, const std::string& path) {
  const CollageLayout layout(k);
  DetectionFile file;
  if (path == "-") {
    file = read_detection_list(std::cin, classes);
  } else {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open " + path);
    file = read_detection_list(in, classes);
  }
  write_cell_predictions(std::cout, decode(file.detections, layout, threshold));
  return 0;
}

int calibrate_cmd(double mean, double p99) {
  const LognormalFit fit = calibrate_lognormal(mean, p99);
  std::cout << "mu=" << format_real(fit.mu) << " sigma=" << format_real(fit.sigma)
            << " mean_s=" << format_real(lognormal_mean(fit.mu, fit.sigma))
            << " p99_s=" << format_real(lognormal_quantile(fit.mu, fit.sigma, kZ99)) << '\n';
  return 0;
}

int report_cmd(const std::string& path) {
  const std::vector<double> samples = read_latency_file(path);
  if (samples.empty()) throw std::runtime_error(path + ": no samples");
  std::cout << format_summary_line(summarize(samples)) << '\n';
  return 0;
}

int compose_cmd(int k, int canvas, const std::vector<std::string>& inputs, const std::string& out) {
  std::vector<ImageBuffer> images;
  for (const auto& p : inputs) images.push_back(read_ppm_file(p));
  write_ppm_file(out, compose_collage(images, CollageLayout(k, canvas)));
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Collage inference coordinator: simulator, decoder and latency tools"};
  app.require_subcommand(1);

  SimulateArgs sim;
  auto* simulate_cmd = app.add_subcommand("simulate", "Run the strategy simulator");
  simulate_cmd->add_option("--config,-c", sim.config_path, "key = value config file");
  simulate_cmd->add_option("--set,-s", sim.overrides, "Override a config key (key=value)");
  simulate_cmd->add_option("--seed", sim.seed, "Experiment seed (overrides the config)");
  simulate_cmd->add_option("--strategy", sim.strategy,
                           "all | no_replication | timeout_replication | collage");
  simulate_cmd->add_option("--out-dir,-o", sim.out_dir, "Directory for samples and summary");

  int k = 3;
  double threshold = kDefaultDetectionThreshold;
  int classes = kDefaultClassCount;
  std::string detections_path;
  auto* decode_sub = app.add_subcommand("decode", "Decode a detection-list file into cells");
  decode_sub->add_option("--k", k, "Collage grid dimension")->required();
  decode_sub->add_option("--threshold", threshold, "Detection threshold");
  decode_sub->add_option("--classes", classes, "Class count");
  decode_sub->add_option("detections", detections_path, "Detection file ('-' for stdin)")->required();

  double mean = 0.0, p99 = 0.0;
  auto* calibrate_sub = app.add_subcommand("calibrate", "Fit a lognormal to mean and p99");
  calibrate_sub->add_option("--mean", mean, "Mean latency in seconds")->required();
  calibrate_sub->add_option("--p99", p99, "99th-percentile latency in seconds")->required();

  std::string samples_path;
  auto* report_sub = app.add_subcommand("report", "Summarize a latency sample file");
  report_sub->add_option("samples", samples_path, "One latency per line")->required();

  int canvas = kDefaultCanvasPx;
  std::vector<std::string> images;
  std::string out_image;
  auto* compose_sub = app.add_subcommand("compose", "Compose PPM images into a collage");
  compose_sub->add_option("--k", k, "Collage grid dimension")->required();
  compose_sub->add_option("--canvas", canvas, "Canvas side in pixels");
  compose_sub->add_option("--output,-o", out_image, "Output PPM")->required();
  compose_sub->add_option("images", images, "K^2 input PPM images")->required();

  auto* keys_sub = app.add_subcommand("keys", "List simulator config keys");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*simulate_cmd) return simulate(sim);
    if (*decode_sub) return decode_cmd(k, threshold, classes, detections_path);
    if (*calibrate_sub) return calibrate_cmd(mean, p99);
    if (*report_sub) return report_cmd(samples_path);
    if (*compose_sub) return compose_cmd(k, canvas, images, out_image);
    if (*keys_sub) {
      for (const auto& [key, doc] : config_key_docs()) std::cout << key << "  " << doc << '\n';
      return 0;
    }
  } catch (const std::exception& e) {
    std::string msg = e.what();
    for (auto& ch : msg) {
      if (ch == '\n') ch = ' ';
    }
    std::cerr << "error: " << msg << '\n';
    return 1;
  }
  return 1;
}
