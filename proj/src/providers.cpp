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

#include "radsum/providers.hpp"

#include "json.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <set>
#include <thread>

#include "radsum/error.hpp"
#include "radsum/random.hpp"

namespace radsum {
namespace {

std::string ToLowerAscii(std::string_view s) {
  std::string out(s);
  for (char& c : out) {
    if (c >= 'A' && c <= 'Z') c = static_cast<char>(c - 'A' + 'a');
  }
  return out;
}

std::vector<std::string_view> Lines(std::string_view text) {
  std::vector<std::string_view> lines;
  std::size_t start = 0;
  while (start <= text.size()) {
    const std::size_t nl = text.find('\n', start);
    if (nl == std::string_view::npos) {
      lines.push_back(text.substr(start));
      break;
    }
    lines.push_back(text.substr(start, nl - start));
    start = nl + 1;
  }
  return lines;
}

std::string JoinSentences(const std::vector<std::string>& sentences, std::size_t k,
                          std::string_view sep) {
  std::string out;
  for (std::size_t i = 0; i < std::min(k, sentences.size()); ++i) {
    if (i > 0) out.append(sep);
    out.append(sentences[i]);
  }
  return out;
}

}  // namespace

// ---------------------------------------------------------------------------
// Generation

std::string TruncateToTokens(std::string_view text, std::size_t max_tokens) {
  std::size_t used = 0;
  std::size_t i = 0;
  std::size_t keep_end = 0;
  while (i < text.size()) {
    while (i < text.size() && std::isspace(static_cast<unsigned char>(text[i]))) ++i;
    if (i == text.size()) break;
    std::size_t j = i;
    while (j < text.size() && !std::isspace(static_cast<unsigned char>(text[j]))) ++j;
    const std::size_t chunk_tokens = Tokenize(text.substr(i, j - i)).size();
    if (used + chunk_tokens > max_tokens) return std::string(text.substr(0, keep_end));
    used += chunk_tokens;
    keep_end = j;
    i = j;
  }
  return std::string(text);
}

GenerationResponse Generate(const GenerationRequest& request, const GenerationBackend& backend,
                            const RetryPolicy& retry) {
  if (request.max_output_tokens < 1) throw Error("max_output_tokens must be >= 1");
  if (request.temperature < 0.0) throw Error("temperature must be >= 0");
  const int attempts = std::max(0, retry.retries) + 1;
  auto backoff = retry.initial_backoff;
  std::string last_error;
  for (int attempt = 1; attempt <= attempts; ++attempt) {
    const auto start = std::chrono::steady_clock::now();
    try {
      GenerationResponse response = backend.Complete(request);
      if (response.backend_id.empty()) response.backend_id = backend.id();
      response.latency_ms = std::chrono::duration_cast<std::chrono::milliseconds>(
                                std::chrono::steady_clock::now() - start)
                                .count();
      for (const auto& stop : request.stop_sequences) {
        if (stop.empty()) continue;
        const auto pos = response.text.find(stop);
        if (pos != std::string::npos) {
          response.text.resize(pos);
          response.truncated = true;
        }
      }
      std::string capped =
          TruncateToTokens(response.text, static_cast<std::size_t>(request.max_output_tokens));
      if (capped.size() != response.text.size()) {
        response.text = std::move(capped);
        response.truncated = true;
      }
      if (response.text.empty() && !response.truncated) {
        throw Error("backend returned empty text without truncation");
      }
      return response;
    } catch (const TransientError& e) {
      last_error = e.what();
      if (attempt < attempts) {
        std::this_thread::sleep_for(backoff);
        backoff = std::chrono::milliseconds(
            static_cast<std::int64_t>(static_cast<double>(backoff.count()) *
                                      retry.backoff_multiplier));
      }
    } catch (const std::exception& e) {
      throw Error("backend " + backend.id() + " failed on attempt " + std::to_string(attempt) +
                  ": " + e.what());
    }
  }
  throw Error("backend " + backend.id() + " failed after " + std::to_string(attempts) +
              " attempts: " + last_error);
}

std::string PromptInputSection(std::string_view prompt) {
  const auto lines = Lines(prompt);
  std::optional<std::size_t> heading;
  for (std::size_t i = 0; i < lines.size(); ++i) {
    if (Trim(lines[i]) == kInputHeading) heading = i;
  }
  if (!heading) return Trim(prompt);
  std::string body;
  for (std::size_t i = *heading + 1; i < lines.size(); ++i) {
    if (lines[i].substr(0, 4) == "### ") break;
    if (!body.empty()) body.push_back('\n');
    body.append(lines[i]);
  }
  return Trim(body);
}

std::optional<std::string> PromptReportId(std::string_view prompt) {
  for (auto line : Lines(prompt)) {
    if (line.substr(0, kReportIdPrefix.size()) == kReportIdPrefix) {
      return Trim(line.substr(kReportIdPrefix.size()));
    }
  }
  return std::nullopt;
}

ExtractiveHeadBackend::ExtractiveHeadBackend(std::size_t k) : k_(k) {
  if (k_ < 1) throw Error("extractive-head mock needs k >= 1");
}

std::string ExtractiveHeadBackend::id() const {
  return "mock:extractive-head:k=" + std::to_string(k_);
}

GenerationResponse ExtractiveHeadBackend::Complete(const GenerationRequest& request) const {
  const auto sentences = SplitSentences(PromptInputSection(request.prompt));
  return {JoinSentences(sentences, k_, " "), id(), 0, false};
}

KeywordSelectBackend::KeywordSelectBackend(std::vector<std::string> terms) {
  for (auto& t : terms) {
    if (!t.empty()) terms_.push_back(ToLowerAscii(t));
  }
  if (terms_.empty()) throw Error("keyword-select mock needs at least one term");
}

std::string KeywordSelectBackend::id() const {
  std::string out = "mock:keyword-select:";
  for (std::size_t i = 0; i < terms_.size(); ++i) {
    if (i > 0) out.push_back('|');
    out.append(terms_[i]);
  }
  return out;
}

GenerationResponse KeywordSelectBackend::Complete(const GenerationRequest& request) const {
  const auto sentences = SplitSentences(PromptInputSection(request.prompt));
  std::vector<std::string> picked;
  for (const auto& s : sentences) {
    const std::string lower = ToLowerAscii(s);
    const bool hit = std::any_of(terms_.begin(), terms_.end(), [&](const std::string& t) {
      return lower.find(t) != std::string::npos;
    });
    if (hit) picked.push_back(s);
  }
  if (picked.empty() && !sentences.empty()) picked.push_back(sentences.front());
  return {JoinSentences(picked, picked.size(), "\n"), id(), 0, false};
}

GenerationResponse EchoBackend::Complete(const GenerationRequest& request) const {
  return {PromptInputSection(request.prompt), id(), 0, false};
}

ReferenceEchoBackend::ReferenceEchoBackend(std::map<std::string, std::string> text_by_report_id)
    : text_by_report_id_(std::move(text_by_report_id)) {}

GenerationResponse ReferenceEchoBackend::Complete(const GenerationRequest& request) const {
  const auto report_id = PromptReportId(request.prompt);
  if (!report_id) throw Error("reference-echo mock: prompt carries no report id");
  auto it = text_by_report_id_.find(*report_id);
  if (it == text_by_report_id_.end()) {
    throw Error("reference-echo mock: unknown report id " + *report_id);
  }
  return {it->second, id(), 0, false};
}

// ---------------------------------------------------------------------------
// Embeddings

EmbeddingMatrix Embed(const TokenSeq& tokens, const EmbeddingProvider& provider) {
  if (tokens.empty()) throw Error("embed: token list is empty");
  EmbeddingMatrix out{tokens, {}};
  try {
    out.vectors = provider.EmbedTokens(tokens);
  } catch (...) {
    RethrowWithContext("embedding provider " + provider.id());
  }
  if (out.vectors.rows() != static_cast<Eigen::Index>(tokens.size())) {
    throw Error("embedding provider " + provider.id() + " returned " +
                std::to_string(out.vectors.rows()) + " vectors for " +
                std::to_string(tokens.size()) + " tokens");
  }
  if (out.vectors.cols() < 1) throw Error("embedding provider returned zero-dimensional vectors");
  if (!out.vectors.allFinite()) throw Error("embedding provider returned non-finite values");
  NormalizeRows(out.vectors);
  return out;
}

OneHotEmbedding::OneHotEmbedding(std::vector<std::string> vocabulary) {
  for (auto& token : vocabulary) {
    if (index_.count(token) != 0) throw Error("one-hot vocabulary has duplicate token " + token);
    const auto next = static_cast<Eigen::Index>(index_.size());
    index_.emplace(std::move(token), next);
  }
  if (index_.empty()) throw Error("one-hot vocabulary is empty");
}

EmbeddingRows<double> OneHotEmbedding::EmbedTokens(const TokenSeq& tokens) const {
  EmbeddingRows<double> rows =
      EmbeddingRows<double>::Zero(static_cast<Eigen::Index>(tokens.size()),
                                  static_cast<Eigen::Index>(index_.size()));
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    auto it = index_.find(tokens[i]);
    if (it == index_.end()) throw Error("token not in one-hot vocabulary: " + tokens[i]);
    rows(static_cast<Eigen::Index>(i), it->second) = 1.0;
  }
  return rows;
}

HashEmbedding::HashEmbedding(Eigen::Index dimension, std::uint64_t seed)
    : dimension_(dimension), seed_(seed) {
  if (dimension_ < 1) throw Error("hash embedding dimension must be >= 1");
}

std::string HashEmbedding::id() const {
  return "mock:hash:dim=" + std::to_string(dimension_) + ":seed=" + std::to_string(seed_);
}

EmbeddingRows<double> HashEmbedding::EmbedTokens(const TokenSeq& tokens) const {
  EmbeddingRows<double> rows(static_cast<Eigen::Index>(tokens.size()), dimension_);
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    const std::uint64_t base = Fnv1a64(tokens[i]) ^ seed_;
    for (Eigen::Index d = 0; d < dimension_; ++d) {
      const std::uint64_t z =
          SplitMix64(base + static_cast<std::uint64_t>(d) * 0x9e3779b97f4a7c15ULL);
      const double u = static_cast<double>(z >> 11) * 0x1.0p-53;
      rows(static_cast<Eigen::Index>(i), d) = 2.0 * u - 1.0;
    }
    rows.row(static_cast<Eigen::Index>(i)).normalize();
  }
  return rows;
}

FileEmbedding::FileEmbedding(const std::filesystem::path& path)
    : id_("file:" + path.filename().string()) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open embedding file " + path.string());
  std::string line;
  std::size_t line_no = 0;
  Eigen::Index dim = -1;
  while (std::getline(in, line)) {
    ++line_no;
    if (Trim(line).empty()) continue;
    try {
      const auto j = nlohmann::json::parse(line);
      auto tokens = j.at("tokens").get<std::vector<std::string>>();
      const auto vectors = j.at("vectors").get<std::vector<std::vector<double>>>();
      if (vectors.size() != tokens.size()) throw Error("vector count differs from token count");
      if (vectors.empty()) throw Error("empty entry");
      EmbeddingRows<double> rows(static_cast<Eigen::Index>(vectors.size()),
                                 static_cast<Eigen::Index>(vectors.front().size()));
      for (std::size_t r = 0; r < vectors.size(); ++r) {
        if (static_cast<Eigen::Index>(vectors[r].size()) != rows.cols()) {
          throw Error("inconsistent vector dimension");
        }
        for (std::size_t c = 0; c < vectors[r].size(); ++c) {
          rows(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = vectors[r][c];
        }
      }
      if (dim >= 0 && rows.cols() != dim) throw Error("dimension differs from earlier entries");
      dim = rows.cols();
      table_[std::move(tokens)] = std::move(rows);
    } catch (const std::exception& e) {
      throw Error(path.string() + " line " + std::to_string(line_no) + ": " + e.what());
    }
  }
}

EmbeddingRows<double> FileEmbedding::EmbedTokens(const TokenSeq& tokens) const {
  auto it = table_.find(tokens.tokens());
  if (it == table_.end()) throw Error("no precomputed embedding for this token sequence");
  return it->second;
}

// ---------------------------------------------------------------------------
// NLI

double Entail(std::string_view premise, std::string_view hypothesis, const NliProvider& provider) {
  if (Trim(premise).empty() || Trim(hypothesis).empty()) {
    throw Error("entail: premise and hypothesis must be non-empty");
  }
  double p = 0.0;
  try {
    p = provider.EntailmentProbability(premise, hypothesis);
  } catch (...) {
    RethrowWithContext("nli provider " + provider.id());
  }
  if (!std::isfinite(p) || p < 0.0 || p > 1.0) {
    throw Error("invalid provider response: entailment probability out of range");
  }
  return p;
}

double OverlapNli::EntailmentProbability(std::string_view premise,
                                         std::string_view hypothesis) const {
  const TokenSeq hyp = Tokenize(hypothesis, cfg_);
  if (hyp.empty()) return 0.0;
  const TokenSeq prem = Tokenize(premise, cfg_);
  const std::set<std::string> vocab(prem.begin(), prem.end());
  const auto hits = std::count_if(hyp.begin(), hyp.end(),
                                  [&](const std::string& t) { return vocab.count(t) != 0; });
  return static_cast<double>(hits) / static_cast<double>(hyp.size());
}

double ContainmentNli::EntailmentProbability(std::string_view premise,
                                             std::string_view hypothesis) const {
  const TokenSeq hyp = Tokenize(hypothesis, cfg_);
  const TokenSeq prem = Tokenize(premise, cfg_);
  if (hyp.empty()) return 0.0;
  const auto it = std::search(prem.begin(), prem.end(), hyp.begin(), hyp.end());
  return it == prem.end() ? 0.0 : 1.0;
}

}  // namespace radsum
