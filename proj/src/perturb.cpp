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

#include "radsum/perturb.hpp"

#include <cmath>

#include "radsum/error.hpp"
#include "radsum/random.hpp"

namespace radsum {
namespace {

bool IsAsciiAlnum(char c) {
  return (c >= '0' && c <= '9') || (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z');
}

char RandomLetterOtherThan(PortableRng& rng, char original) {
  if (original >= 'a' && original <= 'z') {
    // 25 candidates: skip the original letter.
    auto pick = static_cast<char>('a' + rng.NextBelow(25));
    if (pick >= original) ++pick;
    return pick;
  }
  return static_cast<char>('a' + rng.NextBelow(26));
}

}  // namespace

void TypoSpec::Validate() const {
  if (!(rate >= 0.0 && rate <= 1.0)) throw Error("typo rate must be in [0, 1]");
  double sum = 0.0;
  for (double w : weights) {
    if (!(w >= 0.0) || !std::isfinite(w)) throw Error("typo op weights must be non-negative");
    sum += w;
  }
  if (!(sum > 0.0)) throw Error("at least one typo op weight must be positive");
}

TypoResult InjectTypos(std::string_view text, const TypoSpec& spec) {
  spec.Validate();
  double total_weight = 0.0;
  for (double w : spec.weights) total_weight += w;

  PortableRng rng(spec.seed);
  std::string work(text);
  TypoResult out;
  out.text.reserve(work.size() + work.size() / 16);
  for (std::size_t i = 0; i < work.size(); ++i) {
    const char c = work[i];
    if (!IsAsciiAlnum(c) || !(rng.NextUnit() < spec.rate)) {
      out.text.push_back(c);
      continue;
    }
    const double pick = rng.NextUnit() * total_weight;
    double acc = 0.0;
    auto op = TypoOp::kSubstitute;
    for (std::size_t k = 0; k < spec.weights.size(); ++k) {
      if (spec.weights[k] <= 0.0) continue;
      op = static_cast<TypoOp>(k);
      acc += spec.weights[k];
      if (pick < acc) break;
    }
    if (op == TypoOp::kTranspose) {
      std::size_t j = i + 1;
      while (j < work.size() && !IsAsciiAlnum(work[j])) ++j;
      if (j < work.size()) {
        std::swap(work[i], work[j]);
        out.text.push_back(work[i]);
        ++out.edit_count;
        continue;
      }
      op = TypoOp::kSubstitute;
    }
    switch (op) {
      case TypoOp::kSubstitute:
        out.text.push_back(RandomLetterOtherThan(rng, c));
        break;
      case TypoOp::kDelete:
        break;
      case TypoOp::kInsert:
        out.text.push_back(c);
        out.text.push_back(static_cast<char>('a' + rng.NextBelow(26)));
        break;
      case TypoOp::kTranspose:
        break;
    }
    ++out.edit_count;
  }
  return out;
}

}  // namespace radsum
