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

#ifndef RADSUM_HTTP_PROVIDERS_HPP_
#define RADSUM_HTTP_PROVIDERS_HPP_

#include <chrono>
#include <map>
#include <memory>
#include <string>

#include "json.hpp"
#include "radsum/providers.hpp"

namespace radsum {

// Connection and wire-format settings for a remote model endpoint, read from
// a provider profile file. Field names in the request body and the location
// of the answer in the response body are configurable, so any
// chat-completion-style service can be targeted without code changes.
struct HttpProfile {
  enum class Kind { kGeneration, kEmbedding, kNli };

  Kind kind = Kind::kGeneration;
  std::string id;
  std::string base_url;
  std::string path;
  std::string model;
  std::string auth_header = "Authorization";
  std::string auth_prefix = "Bearer ";
  // Name of the environment variable holding the token; empty disables auth.
  std::string auth_env;
  std::chrono::milliseconds timeout{30000};
  int retries = 2;
  std::chrono::milliseconds initial_backoff{200};
  int max_in_flight = 4;
  // Logical field -> wire field name.
  std::map<std::string, std::string> request_fields;
  // JSON pointer to the answer inside the response body.
  std::string response_pointer;

  std::string Field(const std::string& logical) const;
};

// Parses one profile object. Missing optional keys take the defaults above;
// request_fields and response_pointer default per kind:
//   generation: model, messages, max_tokens, temperature, stop;
//               /choices/0/message/content
//   embedding:  model, tokens; /embeddings
//   nli:        model, premise, hypothesis; /entailment
HttpProfile ParseHttpProfile(const nlohmann::json& j);

// POSTs `body` to the profile endpoint and returns the value at
// response_pointer. Connection failures, 429 and 5xx throw TransientError;
// other failures throw Error; an unparsable body or missing pointer throws
// Error("invalid provider response ...").
nlohmann::json PostToProvider(const HttpProfile& profile, const nlohmann::json& body);

class HttpGenerationBackend : public GenerationBackend {
 public:
  explicit HttpGenerationBackend(HttpProfile profile);
  std::string id() const override { return profile_.id; }
  int max_in_flight() const override { return profile_.max_in_flight; }
  GenerationResponse Complete(const GenerationRequest& request) const override;
  RetryPolicy retry_policy() const;

 private:
  HttpProfile profile_;
};

class HttpEmbeddingProvider : public EmbeddingProvider {
 public:
  explicit HttpEmbeddingProvider(HttpProfile profile);
  std::string id() const override { return profile_.id; }
  int max_in_flight() const override { return profile_.max_in_flight; }
  EmbeddingRows<double> EmbedTokens(const TokenSeq& tokens) const override;

 private:
  HttpProfile profile_;
};

class HttpNliProvider : public NliProvider {
 public:
  explicit HttpNliProvider(HttpProfile profile);
  std::string id() const override { return profile_.id; }
  int max_in_flight() const override { return profile_.max_in_flight; }
  double EntailmentProbability(std::string_view premise,
                               std::string_view hypothesis) const override;

 private:
  HttpProfile profile_;
};

}  // namespace radsum

#endif  // RADSUM_HTTP_PROVIDERS_HPP_
