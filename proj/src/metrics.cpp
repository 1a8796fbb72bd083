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

#include "collage/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>
#include <stdexcept>
#include <vector>

#include "collage/text.hpp"

namespace collage {

namespace {

double nearest_rank(const std::vector<double>& sorted, double q) {
  const double n = static_cast<double>(sorted.size());
  // q * n is exact for the integer q and count values that matter in practice.
  auto rank = static_cast<std::size_t>(std::ceil(q * n / 100.0));
  rank = std::clamp<std::size_t>(rank, 1, sorted.size());
  return sorted[rank - 1];
}

std::vector<double> sorted_copy(std::span<const double> samples) {
  if (samples.empty()) throw std::invalid_argument("no samples");
  std::vector<double> v(samples.begin(), samples.end());
  std::sort(v.begin(), v.end());
  return v;
}

}  // namespace

double percentile(std::span<const double> samples, double q) {
  if (!(q > 0.0 && q <= 100.0)) throw std::invalid_argument("percentile level must be in (0,100]");
  return nearest_rank(sorted_copy(samples), q);
}

LatencySummary summarize(std::span<const double> samples) {
  const std::vector<double> sorted = sorted_copy(samples);
  LatencySummary s;
  s.count = sorted.size();
  // Summing in sorted order makes the result independent of input order.
  double sum = 0.0;
  for (double x : sorted) sum += x;
  s.mean_s = sum / static_cast<double>(s.count);
  double ss = 0.0;
  for (double x : sorted) ss += (x - s.mean_s) * (x - s.mean_s);
  s.stddev_s = std::sqrt(ss / static_cast<double>(s.count));
  s.p50_s = nearest_rank(sorted, 50.0);
  s.p99_s = nearest_rank(sorted, 99.0);
  s.min_s = sorted.front();
  s.max_s = sorted.back();
  return s;
}

std::optional<double> recovery_accuracy(const RecoveryLedger& ledger) {
  if (ledger.collage_used == 0) return std::nullopt;
  return static_cast<double>(ledger.collage_correct) / static_cast<double>(ledger.collage_used);
}

double redundancy_overhead(int n) {
  if (n < 1) throw std::invalid_argument("redundancy_overhead needs at least one worker");
  return 1.0 / n;
}

std::string format_summary_line(const LatencySummary& s) {
  return "count=" + std::to_string(s.count) + " mean_s=" + format_real(s.mean_s) +
         " stddev_s=" + format_real(s.stddev_s) + " p50_s=" + format_real(s.p50_s) +
         " p99_s=" + format_real(s.p99_s) + " min_s=" + format_real(s.min_s) +
         " max_s=" + format_real(s.max_s);
}

std::string format_ledger_line(const RecoveryLedger& l) {
  const auto acc = recovery_accuracy(l);
  return "total_requests=" + std::to_string(l.total_requests) +
         " slowdown_requests=" + std::to_string(l.slowdown_requests) +
         " collage_unavailable=" + std::to_string(l.collage_unavailable) +
         " collage_used=" + std::to_string(l.collage_used) +
         " collage_correct=" + std::to_string(l.collage_correct) +
         " collage_late=" + std::to_string(l.collage_late) +
         " replicated=" + std::to_string(l.replicated) +
         " recovery_accuracy=" + (acc ? format_real(*acc) : std::string("undefined"));
}

void write_summary_record(std::ostream& out, const std::string& name, const LatencySummary& s,
                          const RecoveryLedger* ledger) {
  out << '[' << name << "]\n";
  auto emit = [&](std::string_view line) {
    for (auto field : split_ws(line)) {
      const auto eq = field.find('=');
      out << field.substr(0, eq) << " = " << field.substr(eq + 1) << '\n';
    }
  };
  emit(format_summary_line(s));
  if (ledger) emit(format_ledger_line(*ledger));
}

}  // namespace collage
