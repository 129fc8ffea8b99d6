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

#include "radsum/review_service.hpp"

#include <functional>

#include "httplib.h"

namespace radsum {

using nlohmann::json;

namespace {

int StatusFor(ReviewError::Kind kind) {
  switch (kind) {
    case ReviewError::Kind::kInvalid:
      return 400;
    case ReviewError::Kind::kNotFound:
      return 404;
    case ReviewError::Kind::kConflict:
      return 409;
  }
  return 400;
}

json ErrorBody(const std::string& message) { return json{{"error", message}}; }

// Maps domain failures onto HTTP status codes.
ReviewService::Reply Guard(const std::function<ReviewService::Reply()>& fn) {
  try {
    return fn();
  } catch (const ReviewError& e) {
    return {StatusFor(e.kind()), ErrorBody(e.what())};
  } catch (const json::exception& e) {
    return {400, ErrorBody(std::string("malformed request: ") + e.what())};
  } catch (const std::exception& e) {
    return {500, ErrorBody(e.what())};
  }
}

std::vector<ReviewSource> SourcesFromJson(const json& j, const char* key) {
  if (!j.contains(key) || !j.at(key).is_array()) {
    throw ReviewError(ReviewError::Kind::kInvalid, std::string("'") + key + "' must be a list");
  }
  std::vector<ReviewSource> out;
  for (const auto& s : j.at(key)) {
    out.push_back(ReviewSource{s.at("report_id").get<std::string>(),
                               s.value("findings", std::string()),
                               s.at("text").get<std::string>()});
  }
  return out;
}

json ProgressJson(const radsum::Progress& p) { return json{{"rated", p.rated}, {"total", p.total}}; }

}  // namespace

ReviewService::ReviewService(std::filesystem::path log_dir) : log_dir_(std::move(log_dir)) {
  std::filesystem::create_directories(log_dir_);
  for (const auto& entry : std::filesystem::directory_iterator(log_dir_)) {
    if (entry.path().extension() != ".jsonl") continue;
    auto e = std::make_shared<Entry>();
    e->session = ReplaySession(entry.path());
    sessions_[e->session.id()] = e;
  }
}

std::size_t ReviewService::session_count() const {
  std::lock_guard lock(mu_);
  return sessions_.size();
}

std::shared_ptr<ReviewService::Entry> ReviewService::Lookup(const std::string& session_id) const {
  std::lock_guard lock(mu_);
  auto it = sessions_.find(session_id);
  if (it == sessions_.end()) {
    throw ReviewError(ReviewError::Kind::kNotFound, "unknown session '" + session_id + "'");
  }
  return it->second;
}

ReviewService::Reply ReviewService::CreateSession(const json& request) {
  return Guard([&]() -> Reply {
    if (!request.is_object()) {
      throw ReviewError(ReviewError::Kind::kInvalid, "request must be an object");
    }
    const auto generated = SourcesFromJson(request, "generated");
    const auto originals = SourcesFromJson(request, "originals");
    const auto raters = request.at("raters").get<std::vector<std::string>>();
    const auto seed = request.value("seed", std::uint64_t{0});
    SessionOptions options;
    options.single_rater = request.value("single_rater", false);
    options.session_id = request.value("session_id", std::string());
    if (options.session_id.empty()) {
      // Dry run to learn the derived id before the journal is named.
      options.session_id = radsum::CreateSession(generated, originals, raters, seed, options).id();
    }
    for (char c : options.session_id) {
      if (!std::isalnum(static_cast<unsigned char>(c)) && c != '-' && c != '_') {
        throw ReviewError(ReviewError::Kind::kInvalid, "session id may only use [A-Za-z0-9_-]");
      }
    }
    std::lock_guard lock(mu_);
    if (sessions_.count(options.session_id) != 0) {
      throw ReviewError(ReviewError::Kind::kConflict,
                        "session '" + options.session_id + "' already exists");
    }
    options.journal = log_dir_ / (options.session_id + ".jsonl");
    auto e = std::make_shared<Entry>();
    e->session = radsum::CreateSession(generated, originals, raters, seed, options);
    sessions_[e->session.id()] = e;
    return {201, json{{"session_id", e->session.id()},
                      {"items", e->session.items().size()},
                      {"raters", e->session.raters()}}};
  });
}

ReviewService::Reply ReviewService::Next(const std::string& session_id,
                                         const std::string& rater_id) {
  return Guard([&]() -> Reply {
    auto e = Lookup(session_id);
    std::lock_guard lock(e->mu);
    if (!e->session.HasRater(rater_id)) {
      throw ReviewError(ReviewError::Kind::kNotFound, "unknown rater '" + rater_id + "'");
    }
    const ReviewItem* item = e->session.NextUnrated(rater_id);
    json body = item ? RaterItemPayload(e->session, *item)
                     : json{{"session_id", session_id}, {"done", true}};
    if (item) body["done"] = false;
    body["progress"] = ProgressJson(e->session.ProgressFor(rater_id));
    return {200, body};
  });
}

ReviewService::Reply ReviewService::Submit(const std::string& session_id, const json& rating,
                                           bool replace) {
  return Guard([&]() -> Reply {
    auto e = Lookup(session_id);
    RatingRecord record = RatingFromJson(rating);
    std::lock_guard lock(e->mu);
    const Acknowledgment ack = SubmitRating(e->session, std::move(record), replace);
    return {200, json{{"sequence", ack.sequence}, {"replaced", ack.replaced}}};
  });
}

ReviewService::Reply ReviewService::Progress(const std::string& session_id,
                                             const std::string& rater_id) {
  return Guard([&]() -> Reply {
    auto e = Lookup(session_id);
    std::lock_guard lock(e->mu);
    json per_rater = json::object();
    for (const auto& r : e->session.raters()) per_rater[r] = ProgressJson(e->session.ProgressFor(r));
    json body{{"session_id", session_id},
              {"open", e->session.open()},
              {"overall", ProgressJson(e->session.OverallProgress())},
              {"raters", per_rater}};
    if (!rater_id.empty()) {
      if (!e->session.HasRater(rater_id)) {
        throw ReviewError(ReviewError::Kind::kNotFound, "unknown rater '" + rater_id + "'");
      }
      body["rater"] = ProgressJson(e->session.ProgressFor(rater_id));
    }
    return {200, body};
  });
}

ReviewService::Reply ReviewService::Summary(const std::string& session_id,
                                            const std::string& rule) {
  return Guard([&]() -> Reply {
    auto e = Lookup(session_id);
    const ExclusionRule r = ParseExclusionRule(rule.empty() ? "consensus" : rule);
    Session snapshot;
    {
      std::lock_guard lock(e->mu);
      snapshot = e->session;
    }
    return {200, SummaryToJson(Aggregate(snapshot, r))};
  });
}

ReviewService::Reply ReviewService::Close(const std::string& session_id) {
  return Guard([&]() -> Reply {
    auto e = Lookup(session_id);
    std::lock_guard lock(e->mu);
    CloseSession(e->session);
    return {200, json{{"session_id", session_id}, {"open", false}}};
  });
}

ReviewService::Reply ReviewService::ListSessions() {
  std::lock_guard lock(mu_);
  json ids = json::array();
  for (const auto& [id, _] : sessions_) ids.push_back(id);
  return {200, json{{"sessions", ids}}};
}

void ReviewService::Register(httplib::Server& server) {
  using httplib::Request;
  using httplib::Response;
  auto send = [](Response& res, const Reply& reply) {
    res.status = reply.status;
    res.set_content(reply.body.dump(), "application/json");
  };
  auto parse = [](const Request& req) {
    json j = json::parse(req.body, nullptr, false);
    if (j.is_discarded()) {
      throw ReviewError(ReviewError::Kind::kInvalid, "request body is not valid JSON");
    }
    return j;
  };
  auto param = [](const Request& req, const char* name) {
    return req.has_param(name) ? req.get_param_value(name) : std::string();
  };

  // Browser clients may be served from another origin.
  server.set_default_headers({{"Access-Control-Allow-Origin", "*"},
                              {"Access-Control-Allow-Headers", "Content-Type"},
                              {"Access-Control-Allow-Methods", "GET, POST, OPTIONS"}});
  server.Options(R"(/api/v1/.*)", [](const Request&, Response& res) { res.status = 204; });

  server.Get("/api/v1/schema", [send](const Request&, Response& res) {
    send(res, {200, DimensionSchema()});
  });
  server.Get("/api/v1/sessions", [this, send](const Request&, Response& res) {
    send(res, ListSessions());
  });
  server.Post("/api/v1/sessions", [this, send, parse](const Request& req, Response& res) {
    send(res, Guard([&] { return CreateSession(parse(req)); }));
  });
  server.Get("/api/v1/sessions/:id/next", [this, send, param](const Request& req, Response& res) {
    send(res, Next(req.path_params.at("id"), param(req, "rater")));
  });
  server.Post("/api/v1/sessions/:id/ratings",
              [this, send, parse, param](const Request& req, Response& res) {
                const bool replace = param(req, "replace") == "true";
                send(res, Guard([&] { return Submit(req.path_params.at("id"), parse(req), replace); }));
              });
  server.Get("/api/v1/sessions/:id/progress",
             [this, send, param](const Request& req, Response& res) {
               send(res, Progress(req.path_params.at("id"), param(req, "rater")));
             });
  server.Get("/api/v1/sessions/:id/summary",
             [this, send, param](const Request& req, Response& res) {
               send(res, Summary(req.path_params.at("id"), param(req, "rule")));
             });
  server.Post("/api/v1/sessions/:id/close", [this, send](const Request& req, Response& res) {
    send(res, Close(req.path_params.at("id")));
  });
}

}  // namespace radsum
