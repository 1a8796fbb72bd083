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

#include <iosfwd>
#include <map>
#include <span>
#include <string>
#include <string_view>

#include "collage/engine.hpp"

namespace collage {

/// Flat `key = value` settings; later assignments replace earlier ones.
using ConfigValues = std::map<std::string, std::string, std::less<>>;

/// One `key = value` per line, '#' starts a comment. Throws ConfigError on a
/// line without '='.
ConfigValues parse_config(std::istream& in);
ConfigValues read_config_file(const std::string& path);

/// Applies a `key=value` override.
void apply_override(ConfigValues& values, std::string_view assignment);

/// Builds a validated RunConfig on top of default_run_config(). Unknown keys
/// and unparseable values raise ConfigError naming the key.
RunConfig build_run_config(const ConfigValues& values);

/// Every accepted key with its meaning, one per line.
std::span<const std::pair<std::string_view, std::string_view>> config_key_docs();

}  // namespace collage
