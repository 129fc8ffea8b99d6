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

#include "radsum/pipeline.hpp"

#include <fstream>
#include <sstream>

#include "radsum/digest.hpp"
#include "radsum/error.hpp"

namespace radsum {

// Defined in the generated builtin_templates.cpp.
const std::map<std::string, std::string>& BuiltinTemplateTexts();
const char* BuiltinTemplateVersion();

namespace {

using nlohmann::json;

bool IsPlaceholderChar(char c) { return (c >= 'a' && c <= 'z') || c == '_'; }

std::string JoinLines(const std::vector<std::string>& parts, std::string_view sep) {
  std::string out;
  for (std::size_t i = 0; i < parts.size(); ++i) {
    if (i > 0) out.append(sep);
    out.append(parts[i]);
  }
  return out;
}

GenerationRequest MakeRequest(std::string prompt, const PipelineOptions& options) {
  GenerationRequest req;
  req.prompt = std::move(prompt);
  req.max_output_tokens = options.max_output_tokens;
  req.temperature = options.temperature;
  return req;
}

}  // namespace

// ---------------------------------------------------------------------------
// Templates

const TemplateSet& TemplateSet::Builtin() {
  static const TemplateSet builtin(BuiltinTemplateVersion(), BuiltinTemplateTexts());
  return builtin;
}

TemplateSet TemplateSet::LoadDirectory(const std::filesystem::path& dir, std::string version) {
  std::map<std::string, std::string> texts;
  std::error_code ec;
  for (const auto& entry : std::filesystem::directory_iterator(dir, ec)) {
    if (!entry.is_regular_file() || entry.path().extension() != ".tmpl") continue;
    std::ifstream in(entry.path(), std::ios::binary);
    std::ostringstream buf;
    buf << in.rdbuf();
    texts[entry.path().stem().string()] = buf.str();
  }
  if (ec) throw Error("cannot read template directory " + dir.string() + ": " + ec.message());
  // Missing names fall back to the builtin texts.
  for (const auto& [name, text] : BuiltinTemplateTexts()) texts.emplace(name, text);
  return TemplateSet(std::move(version), std::move(texts));
}

TemplateSet::TemplateSet(std::string version, std::map<std::string, std::string> templates)
    : version_(std::move(version)), templates_(std::move(templates)) {}

const std::string& TemplateSet::Get(const std::string& name) const {
  auto it = templates_.find(name);
  if (it == templates_.end()) throw Error("unknown prompt template '" + name + "'");
  return it->second;
}

std::string TemplateSet::Digest() const {
  std::string all = version_;
  for (const auto& [name, text] : templates_) {
    all += '\0' + name + '\0' + std::to_string(text.size()) + '\0' + text;
  }
  return Sha256Hex(all);
}

std::string TemplateSet::Expand(const std::string& name,
                                const std::map<std::string, std::string>& values) const {
  const std::string& tmpl = Get(name);
  std::string out;
  out.reserve(tmpl.size() * 2);
  std::size_t i = 0;
  while (i < tmpl.size()) {
    if (tmpl[i] == '{') {
      std::size_t j = i + 1;
      while (j < tmpl.size() && IsPlaceholderChar(tmpl[j])) ++j;
      if (j < tmpl.size() && tmpl[j] == '}' && j > i + 1) {
        const std::string key = tmpl.substr(i + 1, j - i - 1);
        auto it = values.find(key);
        if (it == values.end()) {
          throw Error("template '" + name + "' has no value for {" + key + "}");
        }
        out.append(it->second);
        i = j + 1;
        continue;
      }
    }
    out.push_back(tmpl[i]);
    ++i;
  }
  return out;
}

// ---------------------------------------------------------------------------
// Style tiers

std::string_view ToString(Tier t) {
  switch (t) {
    case Tier::kBase:
      return "base";
    case Tier::kDetailed:
      return "detailed";
    case Tier::kExpert:
      return "expert";
  }
  return "base";
}

std::string_view ToString(Style s) {
  switch (s) {
    case Style::kBrief:
      return "brief";
    case Style::kBullet:
      return "bullet";
    case Style::kComprehensive:
      return "comprehensive";
  }
  return "brief";
}

std::string_view ToString(Stage s) { return s == Stage::kCoarse ? "coarse" : "fine"; }

Tier ParseTier(std::string_view s) {
  if (s == "base") return Tier::kBase;
  if (s == "detailed") return Tier::kDetailed;
  if (s == "expert") return Tier::kExpert;
  throw Error("unknown tier '" + std::string(s) + "'");
}

Style ParseStyle(std::string_view s) {
  if (s == "brief") return Style::kBrief;
  if (s == "bullet") return Style::kBullet;
  if (s == "comprehensive") return Style::kComprehensive;
  throw Error("unknown style '" + std::string(s) + "'");
}

void StyleTier::Validate() const {
  const std::string t(ToString(tier));
  switch (tier) {
    case Tier::kBase:
      if (role_description || audience || !shots.empty()) {
        throw Error("base tier takes no role, audience or shots");
      }
      break;
    case Tier::kDetailed:
      if (!role_description || shots.size() != 3) {
        throw Error("detailed tier needs a role description and exactly 3 shots");
      }
      if (audience) throw Error("detailed tier takes no audience (use the expert tier)");
      break;
    case Tier::kExpert:
      if (!role_description || !audience || shots.size() != 3) {
        throw Error("expert tier needs a role description, an audience and exactly 3 shots");
      }
      break;
  }
  if (role_description && Trim(*role_description).empty()) throw Error(t + ": empty role");
  if (audience && Trim(*audience).empty()) throw Error(t + ": empty audience");
  if (length_target_tokens && *length_target_tokens < 1) {
    throw Error("length target must be >= 1 token");
  }
  for (const auto& shot : shots) {
    if (Trim(shot.findings).empty() || Trim(shot.impression).empty()) {
      throw Error("shots need non-empty findings and impression");
    }
  }
}

json StyleTierToJson(const StyleTier& s) {
  json j;
  j["tier"] = std::string(ToString(s.tier));
  j["style"] = std::string(ToString(s.style));
  j["role"] = s.role_description ? json(*s.role_description) : json(nullptr);
  j["audience"] = s.audience ? json(*s.audience) : json(nullptr);
  j["length_target_tokens"] = s.length_target_tokens ? json(*s.length_target_tokens) : json(nullptr);
  j["shots"] = json::array();
  for (const auto& shot : s.shots) {
    j["shots"].push_back({{"findings", shot.findings}, {"impression", shot.impression}});
  }
  return j;
}

StyleTier StyleTierFromJson(const json& j) {
  StyleTier s;
  try {
    s.tier = ParseTier(j.value("tier", "base"));
    s.style = ParseStyle(j.value("style", "brief"));
    if (j.contains("role") && !j.at("role").is_null()) s.role_description = j.at("role").get<std::string>();
    if (j.contains("audience") && !j.at("audience").is_null()) s.audience = j.at("audience").get<std::string>();
    if (j.contains("length_target_tokens") && !j.at("length_target_tokens").is_null()) {
      s.length_target_tokens = j.at("length_target_tokens").get<int>();
    }
    if (j.contains("shots")) {
      for (const auto& shot : j.at("shots")) {
        s.shots.push_back({shot.at("findings").get<std::string>(),
                           shot.at("impression").get<std::string>()});
      }
    }
  } catch (const Error&) {
    throw;
  } catch (const std::exception& e) {
    throw Error(std::string("invalid style tier: ") + e.what());
  }
  s.Validate();
  return s;
}

json GeneratedImpressionToJson(const GeneratedImpression& g) {
  return json{{"report_id", g.report_id},
              {"coarse_draft", g.coarse_draft},
              {"final_text", g.final_text},
              {"style", StyleTierToJson(g.style)},
              {"backend_id", g.backend_id},
              {"prompt_hashes", json::array({g.prompt_hashes.first, g.prompt_hashes.second})}};
}

// ---------------------------------------------------------------------------
// Rendering

std::string RenderPrompt(Stage stage, const Report& report, const StyleTier& style,
                         std::optional<std::string_view> draft, const PipelineOptions& options) {
  style.Validate();
  const TemplateSet& t = options.Templates();
  if (stage == Stage::kCoarse) {
    std::string clinical;
    if (options.include_clinical_information && !Trim(report.clinical_information).empty()) {
      clinical = t.Expand("clinical_section",
                          {{"clinical_information", Trim(report.clinical_information)}});
    }
    return t.Expand("coarse", {{"report_id", report.id},
                               {"clinical_section", clinical},
                               {"findings", Trim(report.findings)}});
  }

  if (!draft) throw Error("fine stage prompt needs a draft");
  std::map<std::string, std::string> v;
  v["report_id"] = report.id;
  v["draft"] = Trim(*draft);
  v["task"] = t.Expand("task_" + std::string(ToString(style.style)), {});
  v["role_section"] =
      style.role_description ? t.Expand("role_section", {{"role", Trim(*style.role_description)}})
                             : "";
  v["audience_section"] =
      style.audience ? t.Expand("audience_section", {{"audience", Trim(*style.audience)}}) : "";
  std::string shots;
  if (!style.shots.empty()) {
    std::vector<std::string> rendered;
    for (std::size_t i = 0; i < style.shots.size(); ++i) {
      rendered.push_back(t.Expand("shot", {{"index", std::to_string(i + 1)},
                                           {"findings", Trim(style.shots[i].findings)},
                                           {"impression", Trim(style.shots[i].impression)}}));
    }
    shots = t.Expand("shots_section", {{"shots", JoinLines(rendered, t.Get("shot_separator"))}});
  }
  v["shots_section"] = shots;
  v["length_section"] = style.length_target_tokens
                            ? t.Expand("length_section",
                                       {{"length", std::to_string(*style.length_target_tokens)}})
                            : "";
  return t.Expand("fine", v);
}

// ---------------------------------------------------------------------------
// Post-processing

std::string NormalizeBullets(std::string_view text) {
  static constexpr std::string_view kMarkers[] = {"- ", "* ", "+ ", "\xE2\x80\xA2 "};
  std::vector<std::string> lines;
  std::size_t start = 0;
  while (start <= text.size()) {
    std::size_t nl = text.find('\n', start);
    if (nl == std::string_view::npos) nl = text.size();
    std::string line = Trim(text.substr(start, nl - start));
    start = nl + 1;
    for (auto marker : kMarkers) {
      if (std::string_view(line).substr(0, marker.size()) == marker) {
        line = Trim(std::string_view(line).substr(marker.size()));
        break;
      }
    }
    if (line == "-" || line == "*" || line == "+") line.clear();
    if (!line.empty()) lines.push_back("- " + line);
  }
  return JoinLines(lines, "\n");
}

std::size_t LengthLimit(int length_target_tokens) {
  if (length_target_tokens < 1) throw Error("length target must be >= 1");
  return (static_cast<std::size_t>(length_target_tokens) * 11 + 9) / 10;
}

std::string EnforceLength(std::string_view text, std::size_t limit, std::string_view joiner) {
  if (Tokenize(text).size() <= limit) return std::string(text);
  const auto sentences = SplitSentences(text);
  std::vector<std::string> kept;
  std::size_t used = 0;
  for (const auto& s : sentences) {
    const std::size_t n = Tokenize(s).size();
    if (used + n > limit) break;
    kept.push_back(s);
    used += n;
  }
  if (kept.empty() && !sentences.empty()) return Trim(TruncateToTokens(sentences.front(), limit));
  return JoinLines(kept, joiner);
}

// ---------------------------------------------------------------------------
// Stages

std::string CoarseGenerate(const Report& report, const GenerationBackend& backend,
                           const StyleTier& style, const PipelineOptions& options) {
  if (Trim(report.findings).empty()) {
    throw Error("report '" + report.id + "': findings are empty");
  }
  const std::string prompt = RenderPrompt(Stage::kCoarse, report, style, std::nullopt, options);
  try {
    return Trim(Generate(MakeRequest(prompt, options), backend, options.retry).text);
  } catch (...) {
    RethrowWithContext("report '" + report.id + "'");
  }
}

GeneratedImpression Refine(const Report& report, std::string_view draft,
                           const GenerationBackend& backend, const StyleTier& style,
                           const PipelineOptions& options) {
  if (Trim(draft).empty()) throw Error("report '" + report.id + "': draft is empty");
  if (options.refinement_count < 1) throw Error("refinement count must be >= 1");
  GeneratedImpression out;
  out.report_id = report.id;
  out.coarse_draft = Trim(draft);
  out.style = style;
  std::string current = out.coarse_draft;
  for (int pass = 0; pass < options.refinement_count; ++pass) {
    const std::string prompt = RenderPrompt(Stage::kFine, report, style, current, options);
    GenerationResponse response;
    try {
      response = Generate(MakeRequest(prompt, options), backend, options.retry);
    } catch (...) {
      RethrowWithContext("report '" + report.id + "'");
    }
    std::string text = Trim(response.text);
    const bool bullets = style.style == Style::kBullet;
    if (bullets) text = NormalizeBullets(text);
    if (style.length_target_tokens) {
      text = EnforceLength(text, LengthLimit(*style.length_target_tokens), bullets ? "\n" : " ");
      if (bullets) text = NormalizeBullets(text);
    }
    if (text.empty()) throw Error("report '" + report.id + "': empty refinement");
    current = std::move(text);
    out.backend_id = response.backend_id;
    out.prompt_hashes.second = Sha256Hex(prompt);
  }
  out.final_text = std::move(current);
  return out;
}

GeneratedImpression GenerateImpression(const Report& report, const GenerationBackend& coarse,
                                       const GenerationBackend& fine, const StyleTier& style,
                                       const PipelineOptions& options) {
  std::string draft;
  std::string coarse_hash;
  try {
    coarse_hash = Sha256Hex(RenderPrompt(Stage::kCoarse, report, style, std::nullopt, options));
    draft = CoarseGenerate(report, coarse, style, options);
    if (draft.empty()) throw Error("report '" + report.id + "': empty coarse draft");
  } catch (...) {
    RethrowWithContext("coarse");
  }
  GeneratedImpression out;
  try {
    out = Refine(report, draft, fine, style, options);
  } catch (...) {
    RethrowWithContext("fine");
  }
  out.prompt_hashes.first = std::move(coarse_hash);
  if (coarse.id() != fine.id()) out.backend_id = coarse.id() + " -> " + out.backend_id;
  return out;
}

}  // namespace radsum
