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

// Stub worker for live gateway tests: answers s-cnn or collage requests
// after a configurable delay.

#include <CLI11.hpp>

#include <iostream>

#include "collage/gateway.hpp"

int main(int argc, char** argv) {
  using collage::gateway::StubOptions;

  CLI::App app{"Stub s-cnn / collage-cnn worker speaking the line protocol"};
  std::string mode = "scnn";
  std::uint16_t port = 0;
  std::vector<double> delays_ms;
  StubOptions opts;
  std::vector<std::size_t> empty_cells;

  app.add_option("--mode", mode, "scnn | collage")->check(CLI::IsMember({"scnn", "collage"}));
  app.add_option("--port", port, "TCP port on 127.0.0.1 (0 picks one)");
  app.add_option("--delays-ms", delays_ms, "Per-request delays in ms, cycled")->delimiter(',');
  app.add_option("--accuracy", opts.accuracy, "Probability of the right class")
      ->check(CLI::Range(0.0, 1.0));
  app.add_option("--classes", opts.class_count, "Class count")->check(CLI::PositiveNumber);
  app.add_option("--seed", opts.seed, "Seed for sampled answers");
  app.add_option("--p-detect", opts.p_detect, "Collage mode: per-cell detection probability")
      ->check(CLI::Range(0.0, 1.0));
  app.add_option("--empty-cells", empty_cells, "Collage mode: cells never detected")->delimiter(',');
  CLI11_PARSE(app, argc, argv);

  opts.mode = mode == "collage" ? StubOptions::Mode::kCollage : StubOptions::Mode::kScnn;
  for (double ms : delays_ms) opts.delays_s.push_back(ms / 1000.0);
  opts.empty_cells.insert(empty_cells.begin(), empty_cells.end());

  try {
    collage::gateway::StubWorker worker(opts, port);
    std::cout << "listening " << worker.endpoint().port << std::endl;
    worker.wait();
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
