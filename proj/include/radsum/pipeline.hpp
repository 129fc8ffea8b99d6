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

#ifndef RADSUM_PIPELINE_HPP_
#define RADSUM_PIPELINE_HPP_

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "json.hpp"
#include "radsum/corpus.hpp"
#include "radsum/providers.hpp"

namespace radsum {

// Named prompt templates. Placeholders are written {name}; values are
// inserted verbatim and never re-expanded.
class TemplateSet {
 public:
  // Compiled-in copy of resources/templates/v1.
  static const TemplateSet& Builtin();
  // Every *.tmpl file in `dir`, keyed by file stem.
  static TemplateSet LoadDirectory(const std::filesystem::path& dir, std::string version);

  TemplateSet(std::string version, std::map<std::string, std::string> templates);

  const std::string& version() const { return version_; }
  const std::string& Get(const std::string& name) const;
  // Digest over all names and texts.
  std::string Digest() const;

  // Throws on a placeholder with no value.
  std::string Expand(const std::string& name,
                     const std::map<std::string, std::string>& values) const;

 private:
  std::string version_;
  std::map<std::string, std::string> templates_;
};

enum class Tier { kBase, kDetailed, kExpert };
enum class Style { kBrief, kBullet, kComprehensive };
enum class Stage { kCoarse, kFine };

std::string_view ToString(Tier t);
std::string_view ToString(Style s);
std::string_view ToString(Stage s);
Tier ParseTier(std::string_view s);
Style ParseStyle(std::string_view s);

struct Shot {
  std::string findings;
  std::string impression;

  friend bool operator==(const Shot&, const Shot&) = default;
};

// Prompt configuration: base (instruction only), detailed (role + three
// shots) or expert (role + audience + three shots), with an output style and
// an optional length target.
struct StyleTier {
  Tier tier = Tier::kBase;
  Style style = Style::kBrief;
  std::optional<std::string> role_description;
  std::optional<std::string> audience;
  std::optional<int> length_target_tokens;
  std::vector<Shot> shots;

  void Validate() const;
  friend bool operator==(const StyleTier&, const StyleTier&) = default;
};

nlohmann::json StyleTierToJson(const StyleTier& s);
StyleTier StyleTierFromJson(const nlohmann::json& j);

struct PipelineOptions {
  const TemplateSet* templates = nullptr;  // null: builtin
  bool include_clinical_information = true;
  int refinement_count = 1;
  int max_output_tokens = 256;
  double temperature = 0.0;
  RetryPolicy retry;

  const TemplateSet& Templates() const {
    return templates != nullptr ? *templates : TemplateSet::Builtin();
  }
};

struct GeneratedImpression {
  std::string report_id;
  std::string coarse_draft;
  std::string final_text;
  StyleTier style;
  std::string backend_id;
  // SHA-256 of the coarse prompt and of the last fine prompt.
  std::pair<std::string, std::string> prompt_hashes;
};

nlohmann::json GeneratedImpressionToJson(const GeneratedImpression& g);

// Pure template expansion. The coarse prompt is the base instruction, the
// report id, the clinical information (optional) and the findings. The fine
// prompt is role, style instruction, audience, shots, the report id, the
// draft and a length directive, each present only when configured.
std::string RenderPrompt(Stage stage, const Report& report, const StyleTier& style,
                         std::optional<std::string_view> draft,
                         const PipelineOptions& options = {});

// Lines become "- " items; blank lines are dropped and existing "- ", "* ",
// "+ " or bullet-character markers are replaced. Idempotent.
std::string NormalizeBullets(std::string_view text);

// Upper bound on output tokens for a length target: ceil(1.1 * target).
std::size_t LengthLimit(int length_target_tokens);

// Keeps whole sentences while the token count stays within `limit`; if even
// the first sentence is too long it is cut at a word boundary.
std::string EnforceLength(std::string_view text, std::size_t limit, std::string_view joiner);

std::string CoarseGenerate(const Report& report, const GenerationBackend& backend,
                           const StyleTier& style, const PipelineOptions& options = {});

GeneratedImpression Refine(const Report& report, std::string_view draft,
                           const GenerationBackend& backend, const StyleTier& style,
                           const PipelineOptions& options = {});

// Coarse stage on `coarse`, then refinement on `fine`. Errors are prefixed
// with the failing stage ("coarse" or "fine").
GeneratedImpression GenerateImpression(const Report& report, const GenerationBackend& coarse,
                                       const GenerationBackend& fine, const StyleTier& style,
                                       const PipelineOptions& options = {});

inline GeneratedImpression GenerateImpression(const Report& report,
                                              const GenerationBackend& backend,
                                              const StyleTier& style,
                                              const PipelineOptions& options = {}) {
  return GenerateImpression(report, backend, backend, style, options);
}

}  // namespace radsum

#endif  // RADSUM_PIPELINE_HPP_
