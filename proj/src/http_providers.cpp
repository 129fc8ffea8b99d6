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

#include "radsum/http_providers.hpp"

#include <cstdlib>
#include <thread>

#include "httplib.h"
#include "radsum/error.hpp"

namespace radsum {
namespace {

using nlohmann::json;

const std::map<std::string, std::string>& DefaultFields(HttpProfile::Kind kind) {
  static const std::map<std::string, std::string> kGeneration = {
      {"model", "model"},           {"messages", "messages"}, {"max_tokens", "max_tokens"},
      {"temperature", "temperature"}, {"stop", "stop"}};
  static const std::map<std::string, std::string> kEmbedding = {{"model", "model"},
                                                                {"tokens", "tokens"}};
  static const std::map<std::string, std::string> kNli = {
      {"model", "model"}, {"premise", "premise"}, {"hypothesis", "hypothesis"}};
  switch (kind) {
    case HttpProfile::Kind::kGeneration:
      return kGeneration;
    case HttpProfile::Kind::kEmbedding:
      return kEmbedding;
    case HttpProfile::Kind::kNli:
      return kNli;
  }
  return kGeneration;
}

std::string DefaultPointer(HttpProfile::Kind kind) {
  switch (kind) {
    case HttpProfile::Kind::kGeneration:
      return "/choices/0/message/content";
    case HttpProfile::Kind::kEmbedding:
      return "/embeddings";
    case HttpProfile::Kind::kNli:
      return "/entailment";
  }
  return "";
}

template <typename Fn>
auto WithRetries(const HttpProfile& profile, Fn&& fn) -> decltype(fn()) {
  auto backoff = profile.initial_backoff;
  const int attempts = std::max(0, profile.retries) + 1;
  for (int attempt = 1;; ++attempt) {
    try {
      return fn();
    } catch (const TransientError& e) {
      if (attempt >= attempts) {
        throw Error("provider " + profile.id + " failed after " + std::to_string(attempts) +
                    " attempts: " + e.what());
      }
      std::this_thread::sleep_for(backoff);
      backoff *= 2;
    }
  }
}

void PutModel(const HttpProfile& profile, json& body) {
  if (!profile.model.empty()) body[profile.Field("model")] = profile.model;
}

}  // namespace

std::string HttpProfile::Field(const std::string& logical) const {
  auto it = request_fields.find(logical);
  return it == request_fields.end() ? logical : it->second;
}

HttpProfile ParseHttpProfile(const json& j) {
  HttpProfile p;
  try {
    const std::string kind = j.value("kind", "generation");
    if (kind == "generation") {
      p.kind = HttpProfile::Kind::kGeneration;
    } else if (kind == "embedding") {
      p.kind = HttpProfile::Kind::kEmbedding;
    } else if (kind == "nli") {
      p.kind = HttpProfile::Kind::kNli;
    } else {
      throw Error("unknown provider kind '" + kind + "'");
    }
    p.base_url = j.at("base_url").get<std::string>();
    p.path = j.value("path", std::string(p.kind == HttpProfile::Kind::kGeneration
                                             ? "/v1/chat/completions"
                                             : "/"));
    p.model = j.value("model", std::string());
    p.id = j.value("id", "http:" + p.base_url + p.path);
    p.auth_header = j.value("auth_header", p.auth_header);
    p.auth_prefix = j.value("auth_prefix", p.auth_prefix);
    p.auth_env = j.value("auth_env", std::string());
    p.timeout = std::chrono::milliseconds(j.value("timeout_ms", 30000));
    p.retries = j.value("retries", 2);
    p.initial_backoff = std::chrono::milliseconds(j.value("initial_backoff_ms", 200));
    p.max_in_flight = j.value("max_in_flight", 4);
    p.request_fields = DefaultFields(p.kind);
    if (j.contains("request_fields")) {
      for (const auto& [k, v] : j.at("request_fields").items()) {
        p.request_fields[k] = v.get<std::string>();
      }
    }
    p.response_pointer = j.value("response_pointer", DefaultPointer(p.kind));
  } catch (const Error&) {
    throw;
  } catch (const std::exception& e) {
    throw Error(std::string("invalid provider profile: ") + e.what());
  }
  if (p.retries < 0) throw Error("invalid provider profile: retries must be >= 0");
  if (p.max_in_flight < 0) throw Error("invalid provider profile: max_in_flight must be >= 0");
  return p;
}

json PostToProvider(const HttpProfile& profile, const json& body) {
  httplib::Client client(profile.base_url);
  const auto secs = std::chrono::duration_cast<std::chrono::seconds>(profile.timeout);
  const auto usecs =
      std::chrono::duration_cast<std::chrono::microseconds>(profile.timeout - secs);
  client.set_connection_timeout(secs.count(), usecs.count());
  client.set_read_timeout(secs.count(), usecs.count());
  client.set_write_timeout(secs.count(), usecs.count());

  httplib::Headers headers;
  if (!profile.auth_env.empty()) {
    const char* token = std::getenv(profile.auth_env.c_str());
    if (token == nullptr || *token == '\0') {
      throw Error("provider " + profile.id + ": environment variable " + profile.auth_env +
                  " is not set");
    }
    headers.emplace(profile.auth_header, profile.auth_prefix + token);
  }
  auto res = client.Post(profile.path, headers, body.dump(), "application/json");
  if (!res) {
    throw TransientError("provider " + profile.id + ": transport error (" +
                         httplib::to_string(res.error()) + ")");
  }
  if (res->status == 429 || res->status >= 500) {
    throw TransientError("provider " + profile.id + ": HTTP " + std::to_string(res->status));
  }
  if (res->status < 200 || res->status >= 300) {
    throw Error("provider " + profile.id + ": HTTP " + std::to_string(res->status));
  }
  json parsed = json::parse(res->body, nullptr, /*allow_exceptions=*/false);
  if (parsed.is_discarded()) throw Error("invalid provider response: body is not JSON");
  try {
    return parsed.at(json::json_pointer(profile.response_pointer));
  } catch (const std::exception&) {
    throw Error("invalid provider response: nothing at " + profile.response_pointer);
  }
}

HttpGenerationBackend::HttpGenerationBackend(HttpProfile profile) : profile_(std::move(profile)) {
  if (profile_.kind != HttpProfile::Kind::kGeneration) {
    throw Error("profile " + profile_.id + " is not a generation profile");
  }
}

RetryPolicy HttpGenerationBackend::retry_policy() const {
  return RetryPolicy{profile_.retries, profile_.initial_backoff, 2.0};
}

GenerationResponse HttpGenerationBackend::Complete(const GenerationRequest& request) const {
  json body;
  PutModel(profile_, body);
  body[profile_.Field("messages")] =
      json::array({json{{"role", "user"}, {"content", request.prompt}}});
  body[profile_.Field("max_tokens")] = request.max_output_tokens;
  body[profile_.Field("temperature")] = request.temperature;
  if (!request.stop_sequences.empty()) body[profile_.Field("stop")] = request.stop_sequences;
  const json answer = PostToProvider(profile_, body);
  if (!answer.is_string()) throw Error("invalid provider response: text is not a string");
  return {answer.get<std::string>(), profile_.id, 0, false};
}

HttpEmbeddingProvider::HttpEmbeddingProvider(HttpProfile profile) : profile_(std::move(profile)) {
  if (profile_.kind != HttpProfile::Kind::kEmbedding) {
    throw Error("profile " + profile_.id + " is not an embedding profile");
  }
}

EmbeddingRows<double> HttpEmbeddingProvider::EmbedTokens(const TokenSeq& tokens) const {
  json body;
  PutModel(profile_, body);
  body[profile_.Field("tokens")] = tokens.tokens();
  const json answer = WithRetries(profile_, [&] { return PostToProvider(profile_, body); });
  std::vector<std::vector<double>> vectors;
  try {
    vectors = answer.get<std::vector<std::vector<double>>>();
  } catch (const std::exception&) {
    throw Error("invalid provider response: embeddings are not a list of vectors");
  }
  if (vectors.empty()) throw Error("invalid provider response: no vectors");
  EmbeddingRows<double> rows(static_cast<Eigen::Index>(vectors.size()),
                             static_cast<Eigen::Index>(vectors.front().size()));
  for (std::size_t r = 0; r < vectors.size(); ++r) {
    if (static_cast<Eigen::Index>(vectors[r].size()) != rows.cols()) {
      throw Error("invalid provider response: inconsistent vector dimension");
    }
    for (std::size_t c = 0; c < vectors[r].size(); ++c) {
      rows(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = vectors[r][c];
    }
  }
  return rows;
}

HttpNliProvider::HttpNliProvider(HttpProfile profile) : profile_(std::move(profile)) {
  if (profile_.kind != HttpProfile::Kind::kNli) {
    throw Error("profile " + profile_.id + " is not an nli profile");
  }
}

double HttpNliProvider::EntailmentProbability(std::string_view premise,
                                              std::string_view hypothesis) const {
  json body;
  PutModel(profile_, body);
  body[profile_.Field("premise")] = std::string(premise);
  body[profile_.Field("hypothesis")] = std::string(hypothesis);
  const json answer = WithRetries(profile_, [&] { return PostToProvider(profile_, body); });
  if (!answer.is_number()) throw Error("invalid provider response: probability is not a number");
  return answer.get<double>();
}

}  // namespace radsum
