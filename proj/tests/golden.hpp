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

#ifndef RADSUM_TESTS_GOLDEN_HPP_
#define RADSUM_TESTS_GOLDEN_HPP_

#include <memory>
#include <string>
#include <vector>

#include "radsum/pipeline.hpp"
#include "radsum/providers.hpp"

namespace radsum::testing {

inline const std::vector<Shot>& GoldenShots() {
  static const std::vector<Shot> shots = {
      {"The lungs are clear. No pleural effusion.", "No acute cardiopulmonary abnormality."},
      {"Mild cardiomegaly. No pulmonary edema.", "Mild cardiomegaly without edema."},
      {"Small right pleural effusion. No pneumothorax.", "Small right pleural effusion."}};
  return shots;
}

struct GoldenSystem {
  std::shared_ptr<const GenerationBackend> coarse;
  std::shared_ptr<const GenerationBackend> fine;
  StyleTier style;
};

// One mock chain per output style: brief keeps the first sentence, bullet
// keeps sentences naming a finding term, comprehensive keeps three.
inline std::vector<GoldenSystem> GoldenSystems() {
  const std::string role = "You are a radiologist writing the impression section of a report.";
  StyleTier brief;
  brief.tier = Tier::kBase;
  brief.style = Style::kBrief;

  StyleTier bullet;
  bullet.tier = Tier::kDetailed;
  bullet.style = Style::kBullet;
  bullet.role_description = role;
  bullet.shots = GoldenShots();

  StyleTier comprehensive;
  comprehensive.tier = Tier::kExpert;
  comprehensive.style = Style::kComprehensive;
  comprehensive.role_description = role;
  comprehensive.audience = "the referring physician";
  comprehensive.length_target_tokens = 40;
  comprehensive.shots = GoldenShots();

  const auto k1 = std::make_shared<ExtractiveHeadBackend>(1);
  const auto k3 = std::make_shared<ExtractiveHeadBackend>(3);
  const auto keywords = std::make_shared<KeywordSelectBackend>(std::vector<std::string>{
      "effusion", "fracture", "stones", "hematoma", "edema", "enlarged", "hemorrhage"});
  return {{k1, k1, brief}, {k3, keywords, bullet}, {k3, k3, comprehensive}};
}

// Every golden system over every report, one JSON object per line.
inline std::string RenderGolden(const std::vector<Report>& reports) {
  std::string out;
  for (const auto& system : GoldenSystems()) {
    for (const auto& report : reports) {
      out += GeneratedImpressionToJson(
                 GenerateImpression(report, *system.coarse, *system.fine, system.style))
                 .dump() +
             "\n";
    }
  }
  return out;
}

}  // namespace radsum::testing

#endif  // RADSUM_TESTS_GOLDEN_HPP_
