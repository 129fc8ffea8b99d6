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

#ifndef RADSUM_TOOLS_SYSTEMS_PROFILE_HPP_
#define RADSUM_TOOLS_SYSTEMS_PROFILE_HPP_

#include <filesystem>
#include <memory>
#include <vector>

#include "json.hpp"
#include "radsum/harness.hpp"

namespace radsum {

// Everything a systems profile file describes:
//   {"systems": [{"name", "backend", "fine_backend"?, "style"}],
//    "embedding"?: {...}, "nli"?: {...},
//    "metrics"?: {"rouge_orders", "beta", "bleu_max_order", "bleu_weights",
//                 "bleu_smoothing", "bleu_epsilon", "lowercase",
//                 "strip_punctuation"},
//    "pipeline"?: {"include_clinical_information", "refinement_count",
//                  "max_output_tokens", "temperature"}}
// Backend specs are {"type": "extractive-head", "k"}, {"type":
// "keyword-select", "terms"}, {"type": "echo"}, {"type": "reference-echo"}
// (serves the dataset's own impressions) or {"type": "http", ...profile}.
// Embedding specs: one-hot, hash, file, http. NLI specs: overlap,
// containment, http. Relative paths resolve against the profile's directory.
struct SystemsProfile {
  std::vector<SystemUnderTest> systems;
  std::shared_ptr<const EmbeddingProvider> embedding;
  std::shared_ptr<const NliProvider> nli;
  RunOptions options;
  nlohmann::json source;
};

SystemsProfile LoadSystemsProfile(const std::filesystem::path& path, const Dataset& dataset);
SystemsProfile ParseSystemsProfile(const nlohmann::json& j, const std::filesystem::path& base_dir,
                                   const Dataset& dataset);

std::shared_ptr<const GenerationBackend> MakeBackend(const nlohmann::json& spec,
                                                     const Dataset& dataset);

}  // namespace radsum

#endif  // RADSUM_TOOLS_SYSTEMS_PROFILE_HPP_
