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

#include "systems_profile.hpp"

#include <fstream>

#include "radsum/http_providers.hpp"

namespace radsum {

using nlohmann::json;

namespace {

std::string TypeOf(const json& spec, const char* what) {
  if (!spec.is_object() || !spec.contains("type")) {
    throw Error(std::string(what) + " spec needs a \"type\"");
  }
  return spec.at("type").get<std::string>();
}

HttpProfile HttpFromSpec(const json& spec, const char* kind) {
  json p = spec;
  p.erase("type");
  p["kind"] = kind;
  return ParseHttpProfile(p);
}

std::shared_ptr<const EmbeddingProvider> MakeEmbedding(const json& spec,
                                                       const std::filesystem::path& base) {
  const std::string type = TypeOf(spec, "embedding");
  if (type == "one-hot") {
    return std::make_shared<OneHotEmbedding>(spec.at("vocabulary").get<std::vector<std::string>>());
  }
  if (type == "hash") {
    return std::make_shared<HashEmbedding>(spec.value("dimension", 64),
                                           spec.value("seed", std::uint64_t{0}));
  }
  if (type == "file") {
    std::filesystem::path p = spec.at("path").get<std::string>();
    return std::make_shared<FileEmbedding>(p.is_absolute() ? p : base / p);
  }
  if (type == "http") return std::make_shared<HttpEmbeddingProvider>(HttpFromSpec(spec, "embedding"));
  throw Error("unknown embedding type '" + type + "'");
}

std::shared_ptr<const NliProvider> MakeNli(const json& spec, const TokenizerConfig& tok) {
  const std::string type = TypeOf(spec, "nli");
  if (type == "overlap") return std::make_shared<OverlapNli>(tok);
  if (type == "containment") return std::make_shared<ContainmentNli>(tok);
  if (type == "http") return std::make_shared<HttpNliProvider>(HttpFromSpec(spec, "nli"));
  throw Error("unknown nli type '" + type + "'");
}

void ApplyMetrics(const json& m, MetricConfig& cfg) {
  cfg.tokenizer.lowercase = m.value("lowercase", cfg.tokenizer.lowercase);
  cfg.tokenizer.strip_punctuation = m.value("strip_punctuation", cfg.tokenizer.strip_punctuation);
  if (m.contains("rouge_orders")) {
    cfg.rouge.orders.clear();
    for (const auto& n : m.at("rouge_orders")) cfg.rouge.orders.insert(n.get<std::size_t>());
  }
  cfg.rouge.beta = m.value("beta", cfg.rouge.beta);
  cfg.bleu.max_order = m.value("bleu_max_order", cfg.bleu.max_order);
  if (m.contains("bleu_weights")) cfg.bleu.weights = m.at("bleu_weights").get<std::vector<double>>();
  const std::string smoothing = m.value("bleu_smoothing", std::string("none"));
  if (smoothing == "none") {
    cfg.bleu.smoothing = BleuConfig::Smoothing::kNone;
  } else if (smoothing == "epsilon") {
    cfg.bleu.smoothing = BleuConfig::Smoothing::kEpsilon;
  } else {
    throw Error("unknown bleu_smoothing '" + smoothing + "'");
  }
  cfg.bleu.epsilon = m.value("bleu_epsilon", cfg.bleu.epsilon);
  cfg.rouge.Validate();
  cfg.bleu.Validate();
}

void ApplyPipeline(const json& p, PipelineOptions& opts) {
  opts.include_clinical_information =
      p.value("include_clinical_information", opts.include_clinical_information);
  opts.refinement_count = p.value("refinement_count", opts.refinement_count);
  opts.max_output_tokens = p.value("max_output_tokens", opts.max_output_tokens);
  opts.temperature = p.value("temperature", opts.temperature);
  if (opts.refinement_count < 1) throw Error("refinement_count must be >= 1");
  if (opts.max_output_tokens < 1) throw Error("max_output_tokens must be >= 1");
}

}  // namespace

std::shared_ptr<const GenerationBackend> MakeBackend(const json& spec, const Dataset& dataset) {
  const std::string type = TypeOf(spec, "backend");
  if (type == "extractive-head") {
    return std::make_shared<ExtractiveHeadBackend>(spec.value("k", std::size_t{1}));
  }
  if (type == "keyword-select") {
    return std::make_shared<KeywordSelectBackend>(
        spec.at("terms").get<std::vector<std::string>>());
  }
  if (type == "echo") return std::make_shared<EchoBackend>();
  if (type == "reference-echo") {
    std::map<std::string, std::string> texts;
    for (const auto& r : dataset.reports) texts[r.id] = r.impression;
    return std::make_shared<ReferenceEchoBackend>(std::move(texts));
  }
  if (type == "http") return std::make_shared<HttpGenerationBackend>(HttpFromSpec(spec, "generation"));
  throw Error("unknown backend type '" + type + "'");
}

SystemsProfile ParseSystemsProfile(const json& j, const std::filesystem::path& base_dir,
                                   const Dataset& dataset) {
  SystemsProfile out;
  out.source = j;
  try {
    if (j.contains("metrics")) ApplyMetrics(j.at("metrics"), out.options.metrics);
    if (j.contains("pipeline")) ApplyPipeline(j.at("pipeline"), out.options.pipeline);
    if (!j.contains("systems") || !j.at("systems").is_array() || j.at("systems").empty()) {
      throw Error("profile needs a non-empty \"systems\" list");
    }
    bool retry_set = false;
    for (const auto& s : j.at("systems")) {
      SystemUnderTest sys;
      sys.name = s.at("name").get<std::string>();
      try {
        sys.coarse = MakeBackend(s.at("backend"), dataset);
        sys.fine = s.contains("fine_backend") ? MakeBackend(s.at("fine_backend"), dataset)
                                              : sys.coarse;
        sys.style = s.contains("style") ? StyleTierFromJson(s.at("style")) : StyleTier{};
        sys.style.Validate();
      } catch (const std::exception& e) {
        throw Error("system '" + sys.name + "': " + e.what());
      }
      sys.config = s;
      // Remote backends carry their own retry settings.
      for (const auto* b : {sys.coarse.get(), sys.fine.get()}) {
        if (const auto* http = dynamic_cast<const HttpGenerationBackend*>(b); http && !retry_set) {
          out.options.pipeline.retry = http->retry_policy();
          retry_set = true;
        }
      }
      out.systems.push_back(std::move(sys));
    }
    if (j.contains("embedding")) out.embedding = MakeEmbedding(j.at("embedding"), base_dir);
    if (j.contains("nli")) out.nli = MakeNli(j.at("nli"), out.options.metrics.tokenizer);
  } catch (const Error&) {
    throw;
  } catch (const std::exception& e) {
    throw Error(std::string("invalid systems profile: ") + e.what());
  }
  return out;
}

SystemsProfile LoadSystemsProfile(const std::filesystem::path& path, const Dataset& dataset) {
  std::ifstream in(path);
  if (!in) throw Error("cannot read systems profile " + path.string());
  const json j = json::parse(in, nullptr, false);
  if (j.is_discarded()) throw Error(path.string() + ": not valid JSON");
  try {
    return ParseSystemsProfile(j, path.parent_path(), dataset);
  } catch (const std::exception& e) {
    throw Error(path.string() + ": " + e.what());
  }
}

}  // namespace radsum
