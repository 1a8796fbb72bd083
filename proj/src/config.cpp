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

#include "collage/config.hpp"

#include <algorithm>
#include <array>
#include <charconv>
#include <fstream>
#include <istream>
#include <optional>

#include "collage/text.hpp"

namespace collage {

namespace {

// clang-format off
constexpr std::array<std::pair<std::string_view, std::string_view>, 34> kKeys{{
    {"n_workers", "number of s-cnn workers N (must equal k^2)"},
    {"k", "collage grid dimension K"},
    {"batches", "number of closed-loop request batches"},
    {"seed", "64-bit experiment seed"},
    {"class_count", "number of classes C"},
    {"canvas_px", "collage canvas side in pixels"},
    {"threshold", "detection confidence threshold"},
    {"strategy", "no_replication | timeout_replication | collage"},
    {"timeout_s", "replication timeout (default: worker latency p95)"},
    {"collage_timeout_s", "deadline for the collage result (default: worker latency p95)"},
    {"encode_s", "collage encoding cost (default: measured table by k)"},
    {"decode_s", "collage decoding cost (default: measured table by k)"},
    {"worker.latency", "lognormal | mixture | empirical"},
    {"worker.mean_s", "target mean latency for the lognormal fit"},
    {"worker.p99_s", "target 99th-percentile latency for the lognormal fit"},
    {"worker.mu", "lognormal log-mean (overrides the fit)"},
    {"worker.sigma", "lognormal log-stddev (overrides the fit)"},
    {"worker.p_straggler", "mixture straggler probability"},
    {"worker.straggler_scale", "mixture straggler multiplier"},
    {"worker.latency_file", "empirical latency samples, one per line"},
    {"worker.top1_accuracy", "s-cnn top-1 accuracy"},
    {"collage.latency", "lognormal | mixture | empirical"},
    {"collage.mean_s", "collage-cnn target mean latency"},
    {"collage.p99_s", "collage-cnn target 99th-percentile latency"},
    {"collage.mu", "collage-cnn lognormal log-mean (overrides the fit)"},
    {"collage.sigma", "collage-cnn lognormal log-stddev (overrides the fit)"},
    {"collage.p_straggler", "collage-cnn mixture straggler probability"},
    {"collage.straggler_scale", "collage-cnn mixture straggler multiplier"},
    {"collage.latency_file", "collage-cnn empirical latency samples"},
    {"collage.p_detect", "probability a cell yields a detection"},
    {"collage.cell_accuracy", "probability a detected cell is classified correctly"},
    {"collage.box_jitter", "max box-center offset as a fraction of the cell side"},
    {"collage.trace_dir", "replay detection files from this directory"},
    {"worker.<i>.latency_s", "pin worker i to a constant latency"},
}};
// clang-format on

bool is_pinned_worker_key(std::string_view key, std::size_t* index) {
  constexpr std::string_view prefix = "worker.";
  constexpr std::string_view suffix = ".latency_s";
  if (!key.starts_with(prefix) || !key.ends_with(suffix)) return false;
  const auto digits = key.substr(prefix.size(), key.size() - prefix.size() - suffix.size());
  const auto v = parse_uint(digits);
  if (!v) return false;
  *index = static_cast<std::size_t>(*v);
  return true;
}

class Reader {
 public:
  explicit Reader(const ConfigValues& values) : values_(values) {}

  std::optional<std::string_view> raw(std::string_view key) const {
    const auto it = values_.find(key);
    if (it == values_.end()) return std::nullopt;
    return std::string_view(it->second);
  }

  std::optional<double> real(std::string_view key) const {
    const auto r = raw(key);
    if (!r) return std::nullopt;
    const auto v = parse_real(*r);
    if (!v) fail(key, "expected a decimal number, got `" + std::string(*r) + "`");
    return v;
  }

  std::optional<long long> integer(std::string_view key) const {
    const auto r = raw(key);
    if (!r) return std::nullopt;
    const auto v = parse_int(*r);
    if (!v) fail(key, "expected an integer, got `" + std::string(*r) + "`");
    return *v;
  }

  std::optional<std::uint64_t> unsigned_integer(std::string_view key) const {
    const auto r = raw(key);
    if (!r) return std::nullopt;
    const auto v = parse_uint(*r);
    if (!v) fail(key, "expected a non-negative integer, got `" + std::string(*r) + "`");
    return *v;
  }

  int small_int(std::string_view key, int fallback) const {
    const auto v = integer(key);
    if (!v) return fallback;
    if (*v < INT32_MIN || *v > INT32_MAX) fail(key, "value out of range");
    return static_cast<int>(*v);
  }

  [[noreturn]] static void fail(std::string_view key, const std::string& why) {
    throw ConfigError({std::string(key)}, std::string(key) + ": " + why);
  }

 private:
  const ConfigValues& values_;
};

LatencyModel read_latency(const Reader& r, const std::string& prefix, const LatencyModel& base) {
  const std::string kind_key = prefix + ".latency";
  const std::string kind = std::string(r.raw(kind_key).value_or(
      base.kind == LatencyKind::kEmpirical          ? "empirical"
      : base.kind == LatencyKind::kLognormalMixture ? "mixture"
                                                    : "lognormal"));
  try {
    if (kind == "empirical") {
      const auto path = r.raw(prefix + ".latency_file");
      if (!path) Reader::fail(prefix + ".latency_file", "required for empirical latency");
      try {
        return LatencyModel::empirical(read_latency_file(std::string(*path)));
      } catch (const std::exception& e) {
        Reader::fail(prefix + ".latency_file", e.what());
      }
    }
    if (kind != "lognormal" && kind != "mixture") {
      Reader::fail(kind_key, "expected lognormal, mixture or empirical");
    }

    double mu = base.mu, sigma = base.sigma;
    const auto mean = r.real(prefix + ".mean_s");
    const auto p99 = r.real(prefix + ".p99_s");
    if (mean || p99) {
      if (!mean || !p99) {
        Reader::fail(prefix + (mean ? ".p99_s" : ".mean_s"),
                     "mean_s and p99_s must be given together");
      }
      try {
        const LognormalFit fit = calibrate_lognormal(*mean, *p99);
        mu = fit.mu;
        sigma = fit.sigma;
      } catch (const std::invalid_argument& e) {
        throw ConfigError({prefix + ".mean_s", prefix + ".p99_s"},
                          prefix + ".mean_s/" + prefix + ".p99_s: " + e.what());
      }
    }
    mu = r.real(prefix + ".mu").value_or(mu);
    sigma = r.real(prefix + ".sigma").value_or(sigma);
    if (kind == "lognormal") {
      if (r.raw(prefix + ".p_straggler") || r.raw(prefix + ".straggler_scale")) {
        Reader::fail(prefix + ".p_straggler", "straggler settings need " + kind_key + " = mixture");
      }
      return LatencyModel::lognormal(mu, sigma);
    }
    return LatencyModel::mixture(mu, sigma, r.real(prefix + ".p_straggler").value_or(base.p_straggler),
                                 r.real(prefix + ".straggler_scale").value_or(base.straggler_scale));
  } catch (const ConfigError&) {
    throw;
  } catch (const std::invalid_argument& e) {
    Reader::fail(kind_key, e.what());
  }
}

}  // namespace

ConfigValues parse_config(std::istream& in) {
  ConfigValues values;
  std::string raw;
  std::size_t lineno = 0;
  while (std::getline(in, raw)) {
    ++lineno;
    const auto line = trim(strip_comment(raw));
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) {
      throw ConfigError({std::string(line)},
                        "config line " + std::to_string(lineno) + ": expected `key = value`");
    }
    const auto key = trim(line.substr(0, eq));
    if (key.empty()) {
      throw ConfigError({}, "config line " + std::to_string(lineno) + ": empty key");
    }
    values[std::string(key)] = std::string(trim(line.substr(eq + 1)));
  }
  return values;
}

ConfigValues read_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError({}, "cannot open config file " + path);
  return parse_config(in);
}

void apply_override(ConfigValues& values, std::string_view assignment) {
  const auto eq = assignment.find('=');
  const auto key = eq == std::string_view::npos ? std::string_view{} : trim(assignment.substr(0, eq));
  if (key.empty()) {
    throw ConfigError({std::string(assignment)},
                      "override `" + std::string(assignment) + "` is not `key=value`");
  }
  values[std::string(key)] = std::string(trim(assignment.substr(eq + 1)));
}

RunConfig build_run_config(const ConfigValues& values) {
  for (const auto& [key, value] : values) {
    std::size_t index = 0;
    const bool known = is_pinned_worker_key(key, &index) ||
                       std::any_of(kKeys.begin(), kKeys.end(),
                                   [&](const auto& kv) { return kv.first == key; });
    if (!known) Reader::fail(key, "unknown config key");
  }

  const Reader r(values);
  RunConfig cfg = default_run_config();
  cfg.n_workers = r.small_int("n_workers", cfg.n_workers);
  cfg.k = r.small_int("k", cfg.k);
  cfg.batches = r.small_int("batches", cfg.batches);
  cfg.seed = r.unsigned_integer("seed").value_or(cfg.seed);
  cfg.class_count = r.small_int("class_count", cfg.class_count);
  cfg.canvas_px = r.small_int("canvas_px", cfg.canvas_px);
  cfg.threshold = r.real("threshold").value_or(cfg.threshold);

  if (const auto s = r.raw("strategy")) {
    const auto kind = parse_strategy(*s);
    if (!kind) Reader::fail("strategy", "expected no_replication, timeout_replication or collage");
    cfg.strategy.kind = *kind;
  }
  cfg.strategy.timeout_s = r.real("timeout_s");
  cfg.strategy.collage_timeout_s = r.real("collage_timeout_s");
  cfg.costs.encode_override = r.real("encode_s");
  cfg.costs.decode_override = r.real("decode_s");

  cfg.worker.latency = read_latency(r, "worker", cfg.worker.latency);
  cfg.worker.top1_accuracy = r.real("worker.top1_accuracy").value_or(cfg.worker.top1_accuracy);
  cfg.worker.class_count = cfg.class_count;

  cfg.collage.latency = read_latency(r, "collage", cfg.collage.latency);
  cfg.collage.p_detect = r.real("collage.p_detect").value_or(cfg.collage.p_detect);
  cfg.collage.cell_accuracy = r.real("collage.cell_accuracy").value_or(cfg.collage.cell_accuracy);
  cfg.collage.box_jitter = r.real("collage.box_jitter").value_or(cfg.collage.box_jitter);
  cfg.collage.class_count = cfg.class_count;
  cfg.collage_trace_dir = std::string(r.raw("collage.trace_dir").value_or(""));

  for (const auto& [key, value] : values) {
    std::size_t index = 0;
    if (!is_pinned_worker_key(key, &index)) continue;
    const double seconds = *r.real(key);
    if (!(seconds > 0.0)) Reader::fail(key, "latency must be > 0");
    cfg.worker_latency_overrides[index] = LatencyModel::constant(seconds);
  }

  cfg.validate();
  return cfg;
}

std::span<const std::pair<std::string_view, std::string_view>> config_key_docs() { return kKeys; }

}  // namespace collage
