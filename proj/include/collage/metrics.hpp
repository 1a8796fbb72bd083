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
#include <iosfwd>
#include <optional>
#include <span>
#include <string>

#include "collage/engine.hpp"

namespace collage {

/// Nearest-rank percentile: the sorted sample at 1-based rank
/// ceil(q/100 * count). q in (0, 100]. Throws std::invalid_argument on empty
/// input or q out of range.
double percentile(std::span<const double> samples, double q);

struct LatencySummary {
  std::size_t count = 0;
  double mean_s = 0.0;
  double stddev_s = 0.0;  // population
  double p50_s = 0.0;
  double p99_s = 0.0;
  double min_s = 0.0;
  double max_s = 0.0;
};

LatencySummary summarize(std::span<const double> samples);

/// collage_correct / collage_used; nullopt when nothing was used.
std::optional<double> recovery_accuracy(const RecoveryLedger& ledger);

/// Extra compute of one backup node over n workers: 1/n.
double redundancy_overhead(int n);

/// Single-line `key=value` rendering, fields in a fixed order.
std::string format_summary_line(const LatencySummary& s);
std::string format_ledger_line(const RecoveryLedger& l);

/// Multi-line record: a `[name]` header then one `key = value` per line.
void write_summary_record(std::ostream& out, const std::string& name, const LatencySummary& s,
                          const RecoveryLedger* ledger = nullptr);

}  // namespace collage
