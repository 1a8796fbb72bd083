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

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace collage {

/// Shortest decimal text that parses back to exactly `v`.
std::string format_real(double v);

/// Whole-token numeric parses; nullopt on any trailing garbage.
std::optional<double> parse_real(std::string_view s);
std::optional<std::int64_t> parse_int(std::string_view s);
std::optional<std::uint64_t> parse_uint(std::string_view s);

/// Splits on runs of spaces and tabs.
std::vector<std::string_view> split_ws(std::string_view s);

std::string_view trim(std::string_view s);

/// Drops everything from the first '#'.
std::string_view strip_comment(std::string_view s);

}  // namespace collage
