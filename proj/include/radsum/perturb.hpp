// Copyright 2026 The radsum Authors.
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

#ifndef RADSUM_PERTURB_HPP_
#define RADSUM_PERTURB_HPP_

#include <array>
#include <cstdint>
#include <string>
#include <string_view>

namespace radsum {

enum class TypoOp { kSubstitute = 0, kDelete = 1, kInsert = 2, kTranspose = 3 };

struct TypoSpec {
  // Per-character selection probability over ASCII alphanumerics.
  double rate = 0.03;
  // Relative weights indexed by TypoOp; normalized on use. Zero disables an
  // operation; at least one weight must be positive.
  std::array<double, 4> weights = {1.0, 1.0, 1.0, 1.0};
  std::uint64_t seed = 0;

  void Validate() const;
};

struct TypoResult {
  std::string text;
  std::size_t edit_count = 0;
};

// Each ASCII alphanumeric character is selected independently with
// probability spec.rate, and each selected character receives one operation:
//   substitute  replace with a random lowercase letter different from it
//   delete      drop it
//   insert      keep it and add a random lowercase letter after it
//   transpose   swap it with the next alphanumeric character; when there is
//               none it is substituted instead
// Other characters (whitespace, punctuation, non-ASCII bytes) are never
// selected. Bit-identical for equal (text, spec).
TypoResult InjectTypos(std::string_view text, const TypoSpec& spec);

}  // namespace radsum

#endif  // RADSUM_PERTURB_HPP_
