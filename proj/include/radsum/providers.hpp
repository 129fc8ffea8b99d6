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

#ifndef RADSUM_PROVIDERS_HPP_
#define RADSUM_PROVIDERS_HPP_

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "radsum/embedding.hpp"
#include "radsum/text.hpp"

namespace radsum {

// ---------------------------------------------------------------------------
// Text generation

struct GenerationRequest {
  std::string prompt;
  int max_output_tokens = 256;
  double temperature = 0.0;
  std::vector<std::string> stop_sequences;
};

struct GenerationResponse {
  std::string text;
  std::string backend_id;
  std::int64_t latency_ms = 0;
  // Set when the text was cut by a stop sequence or the output token cap.
  bool truncated = false;
};

// A text generation model. Implementations must be safe to call from several
// threads at once; Complete() throws TransientError for retryable transport
// failures and Error for anything else.
class GenerationBackend {
 public:
  virtual ~GenerationBackend() = default;
  virtual std::string id() const = 0;
  // Maximum concurrent Complete() calls; 0 means unlimited.
  virtual int max_in_flight() const { return 0; }
  virtual GenerationResponse Complete(const GenerationRequest& request) const = 0;
};

struct RetryPolicy {
  int retries = 2;
  std::chrono::milliseconds initial_backoff{200};
  double backoff_multiplier = 2.0;
};

// Calls the backend, retrying transient failures with exponential backoff,
// then applies stop sequences and caps the output at max_output_tokens tokens
// (counted with the default TokenizerConfig).
GenerationResponse Generate(const GenerationRequest& request, const GenerationBackend& backend,
                            const RetryPolicy& retry = {});

// Cuts `text` after at most `max_tokens` default-config tokens, at a
// whitespace boundary. Returns the text unchanged when it already fits.
std::string TruncateToTokens(std::string_view text, std::size_t max_tokens);

// Prompt conventions shared with the mock backends: the passage a model is
// asked to work on sits under a "### Input" heading, and the report id on a
// "Report ID: " line.
inline constexpr std::string_view kInputHeading = "### Input";
inline constexpr std::string_view kReportIdPrefix = "Report ID: ";

// Body of the last "### Input" section (up to the next "### " heading), or
// the whole prompt when there is none. Trimmed.
std::string PromptInputSection(std::string_view prompt);
std::optional<std::string> PromptReportId(std::string_view prompt);

// First `k` sentences of the input section, joined with single spaces.
class ExtractiveHeadBackend : public GenerationBackend {
 public:
  explicit ExtractiveHeadBackend(std::size_t k);
  std::string id() const override;
  GenerationResponse Complete(const GenerationRequest& request) const override;

 private:
  std::size_t k_;
};

// Sentences of the input section containing any of `terms`
// (case-insensitive), one per line. Falls back to the first sentence when
// nothing matches.
class KeywordSelectBackend : public GenerationBackend {
 public:
  explicit KeywordSelectBackend(std::vector<std::string> terms);
  std::string id() const override;
  GenerationResponse Complete(const GenerationRequest& request) const override;

 private:
  std::vector<std::string> terms_;
};

// Returns the input section verbatim.
class EchoBackend : public GenerationBackend {
 public:
  std::string id() const override { return "mock:echo"; }
  GenerationResponse Complete(const GenerationRequest& request) const override;
};

// Returns the stored text for the prompt's report id, ignoring the rest of
// the prompt. Used as an oracle system in evaluation runs.
class ReferenceEchoBackend : public GenerationBackend {
 public:
  explicit ReferenceEchoBackend(std::map<std::string, std::string> text_by_report_id);
  std::string id() const override { return "mock:reference-echo"; }
  GenerationResponse Complete(const GenerationRequest& request) const override;

 private:
  std::map<std::string, std::string> text_by_report_id_;
};

// ---------------------------------------------------------------------------
// Token embeddings

class EmbeddingProvider {
 public:
  virtual ~EmbeddingProvider() = default;
  virtual std::string id() const = 0;
  virtual int max_in_flight() const { return 0; }
  // One row per token.
  virtual EmbeddingRows<double> EmbedTokens(const TokenSeq& tokens) const = 0;
};

// Validates the provider output (row count, finite values) and normalizes it
// to unit rows.
EmbeddingMatrix Embed(const TokenSeq& tokens, const EmbeddingProvider& provider);

// Token i of the vocabulary maps to basis vector e_i. Unknown tokens throw.
class OneHotEmbedding : public EmbeddingProvider {
 public:
  explicit OneHotEmbedding(std::vector<std::string> vocabulary);
  std::string id() const override { return "mock:one-hot"; }
  EmbeddingRows<double> EmbedTokens(const TokenSeq& tokens) const override;

 private:
  std::map<std::string, Eigen::Index> index_;
};

// Each token maps to a pseudorandom unit vector seeded by the FNV-1a hash of
// its bytes. Components are drawn from a SplitMix64 stream as
// 2*u - 1 with u in [0, 1), then the vector is L2-normalized.
class HashEmbedding : public EmbeddingProvider {
 public:
  HashEmbedding(Eigen::Index dimension, std::uint64_t seed);
  std::string id() const override;
  EmbeddingRows<double> EmbedTokens(const TokenSeq& tokens) const override;

 private:
  Eigen::Index dimension_;
  std::uint64_t seed_;
};

// Precomputed matrices loaded from a record-lines file, one
// {"tokens": [...], "vectors": [[...], ...]} object per line, looked up by the
// exact token sequence.
class FileEmbedding : public EmbeddingProvider {
 public:
  explicit FileEmbedding(const std::filesystem::path& path);
  std::string id() const override { return id_; }
  EmbeddingRows<double> EmbedTokens(const TokenSeq& tokens) const override;

 private:
  std::string id_;
  std::map<std::vector<std::string>, EmbeddingRows<double>> table_;
};

// ---------------------------------------------------------------------------
// Natural language inference

class NliProvider {
 public:
  virtual ~NliProvider() = default;
  virtual std::string id() const = 0;
  virtual int max_in_flight() const { return 0; }
  virtual double EntailmentProbability(std::string_view premise,
                                       std::string_view hypothesis) const = 0;
};

// Returns the provider's entailment probability; throws Error("invalid
// provider response") when it is not a finite value in [0, 1].
double Entail(std::string_view premise, std::string_view hypothesis, const NliProvider& provider);

// Fraction of hypothesis tokens (with multiplicity) that occur in the
// premise.
class OverlapNli : public NliProvider {
 public:
  explicit OverlapNli(TokenizerConfig cfg = {}) : cfg_(cfg) {}
  std::string id() const override { return "mock:overlap"; }
  double EntailmentProbability(std::string_view premise,
                               std::string_view hypothesis) const override;

 private:
  TokenizerConfig cfg_;
};

// 1.0 when the hypothesis token sequence occurs contiguously in the premise
// token sequence, else 0.0.
class ContainmentNli : public NliProvider {
 public:
  explicit ContainmentNli(TokenizerConfig cfg = {}) : cfg_(cfg) {}
  std::string id() const override { return "mock:containment"; }
  double EntailmentProbability(std::string_view premise,
                               std::string_view hypothesis) const override;

 private:
  TokenizerConfig cfg_;
};

}  // namespace radsum

#endif  // RADSUM_PROVIDERS_HPP_
