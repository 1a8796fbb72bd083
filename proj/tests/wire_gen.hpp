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

// Random valid wire messages for round-trip checks.

#include <random>
#include <string>

#include "collage/wire.hpp"

namespace collage::testing {

inline std::string random_ref(std::mt19937_64& gen) {
  static constexpr std::string_view kAlphabet =
      "abcdefghijklmnopqrstuvwxyzABCDEFGHIJKLMNOPQRSTUVWXYZ0123456789_-./#:";
  std::uniform_int_distribution<std::size_t> len(1, 24), pick(0, kAlphabet.size() - 1);
  std::string s(len(gen), ' ');
  for (char& c : s) c = kAlphabet[pick(gen)];
  return s;
}

inline wire::Message random_message(std::mt19937_64& gen) {
  std::uniform_int_distribution<std::uint64_t> id;
  std::uniform_int_distribution<int> cls(0, 999), small(0, 6), kind(0, 4);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  switch (kind(gen)) {
    case 0:
      return wire::ClassifyRequest{id(gen), random_ref(gen)};
    case 1:
      return wire::ClassifyResponse{id(gen), cls(gen)};
    case 2: {
      wire::CollageRequest r{id(gen), {}};
      for (int i = small(gen); i > 0; --i) r.image_refs.push_back(random_ref(gen));
      return r;
    }
    case 3: {
      wire::CollageResponse r{id(gen), {}};
      for (int i = small(gen); i > 0; --i) {
        r.detections.push_back(Detection{
            Box(unit(gen), unit(gen), 1.0 - unit(gen), 1.0 - unit(gen)), cls(gen), unit(gen)});
      }
      return r;
    }
    default: {
      std::string reason = random_ref(gen);
      if (small(gen) % 2) reason += " with  spaces ";
      return wire::ErrorMessage{id(gen), reason};
    }
  }
}

}  // namespace collage::testing
