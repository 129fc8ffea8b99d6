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

#ifndef RADSUM_REVIEW_SERVICE_HPP_
#define RADSUM_REVIEW_SERVICE_HPP_

#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <string>

#include "json.hpp"
#include "radsum/review.hpp"

namespace httplib {
class Server;
}

namespace radsum {

// Review sessions behind the /api/v1/ endpoints. Each session journals to
// <log_dir>/<session id>.jsonl; existing journals are replayed on startup,
// so a restarted service resumes where it stopped.
class ReviewService {
 public:
  explicit ReviewService(std::filesystem::path log_dir);

  // Handlers return {status, body}. They are also what the HTTP routes call.
  struct Reply {
    int status = 200;
    nlohmann::json body;
  };
  Reply CreateSession(const nlohmann::json& request);
  Reply Next(const std::string& session_id, const std::string& rater_id);
  Reply Submit(const std::string& session_id, const nlohmann::json& rating, bool replace);
  Reply Progress(const std::string& session_id, const std::string& rater_id);
  Reply Summary(const std::string& session_id, const std::string& rule);
  Reply Close(const std::string& session_id);
  Reply ListSessions();

  void Register(httplib::Server& server);

  std::size_t session_count() const;

 private:
  struct Entry {
    std::mutex mu;  // serializes appends and reads for one session
    Session session;
  };
  std::shared_ptr<Entry> Lookup(const std::string& session_id) const;

  std::filesystem::path log_dir_;
  mutable std::mutex mu_;
  std::map<std::string, std::shared_ptr<Entry>> sessions_;
};

}  // namespace radsum

#endif  // RADSUM_REVIEW_SERVICE_HPP_
