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

#include "radsum/review.hpp"

#include <unistd.h>

#include <chrono>
#include <cstdio>
#include <ctime>
#include <fstream>
#include <set>

#include "radsum/digest.hpp"
#include "radsum/random.hpp"
#include "radsum/text.hpp"

namespace radsum {

using nlohmann::json;

// Append-only record-lines file; each append is flushed and fsynced.
class SessionJournal {
 public:
  SessionJournal(const std::filesystem::path& path, bool must_be_new) : path_(path) {
    if (must_be_new && std::filesystem::exists(path)) {
      throw ReviewError(ReviewError::Kind::kConflict,
                        "session journal already exists: " + path.string());
    }
    file_ = std::fopen(path.c_str(), "ab");
    if (file_ == nullptr) {
      throw Error("cannot open session journal " + path.string());
    }
  }
  SessionJournal(const SessionJournal&) = delete;
  SessionJournal& operator=(const SessionJournal&) = delete;
  ~SessionJournal() {
    if (file_ != nullptr) std::fclose(file_);
  }

  void Append(const json& event) {
    const std::string line = event.dump() + "\n";
    if (std::fwrite(line.data(), 1, line.size(), file_) != line.size() ||
        std::fflush(file_) != 0 || ::fsync(::fileno(file_)) != 0) {
      throw Error("failed to persist event to " + path_.string());
    }
  }

 private:
  std::filesystem::path path_;
  std::FILE* file_ = nullptr;
};

namespace {

ReviewError Invalid(const std::string& what) {
  return ReviewError(ReviewError::Kind::kInvalid, what);
}
ReviewError NotFound(const std::string& what) {
  return ReviewError(ReviewError::Kind::kNotFound, what);
}
ReviewError Conflict(const std::string& what) {
  return ReviewError(ReviewError::Kind::kConflict, what);
}

std::string UtcNow() {
  const auto now = std::chrono::system_clock::now();
  const std::time_t t = std::chrono::system_clock::to_time_t(now);
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

std::string ItemId(std::size_t position) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "item-%04zu", position + 1);
  return buf;
}

json ItemToJson(const ReviewItem& item) {
  return json{{"item_id", item.item_id},
              {"report_id", item.report_id},
              {"findings", item.findings},
              {"shown_impression", item.shown_impression},
              {"origin", std::string(ToString(item.origin))},
              {"position", item.position}};
}

}  // namespace

std::string_view ToString(Origin o) { return o == Origin::kGenerated ? "generated" : "original"; }

std::string_view ToString(OverallLabel l) {
  switch (l) {
    case OverallLabel::kPositive:
      return "positive";
    case OverallLabel::kNeutral:
      return "neutral";
    case OverallLabel::kNegative:
      return "negative";
  }
  return "neutral";
}

std::string_view ToString(Dimension d) {
  switch (d) {
    case Dimension::kClearance:
      return "clearance";
    case Dimension::kCompleteness:
      return "completeness";
    case Dimension::kHumanLikeness:
      return "human_likeness";
    case Dimension::kConciseness:
      return "conciseness";
    case Dimension::kCoherence:
      return "coherence";
  }
  return "clearance";
}

OverallLabel ParseOverallLabel(std::string_view s) {
  if (s == "positive") return OverallLabel::kPositive;
  if (s == "neutral") return OverallLabel::kNeutral;
  if (s == "negative") return OverallLabel::kNegative;
  throw Invalid("unknown overall label '" + std::string(s) + "'");
}

Dimension ParseDimension(std::string_view s) {
  for (Dimension d : kAllDimensions) {
    if (ToString(d) == s) return d;
  }
  throw Invalid("unknown dimension '" + std::string(s) + "'");
}

void ValidateRating(const RatingRecord& r) {
  if (r.item_id.empty()) throw Invalid("rating is missing item_id");
  if (r.rater_id.empty()) throw Invalid("rating is missing rater_id");
  if (!r.overall) throw Invalid("rating is missing the overall label");
  for (Dimension d : kAllDimensions) {
    auto it = r.dimensions.find(d);
    if (it == r.dimensions.end()) {
      throw Invalid("rating is missing dimension '" + std::string(ToString(d)) + "'");
    }
    if (it->second < kMinDimensionScore || it->second > kMaxDimensionScore) {
      throw Invalid("dimension '" + std::string(ToString(d)) + "' must be in 1..5");
    }
  }
}

RatingRecord RatingFromJson(const json& j) {
  if (!j.is_object()) throw Invalid("rating must be an object");
  RatingRecord r;
  try {
    r.item_id = j.value("item_id", std::string());
    r.rater_id = j.value("rater_id", std::string());
    if (j.contains("overall") && !j.at("overall").is_null()) {
      r.overall = ParseOverallLabel(j.at("overall").get<std::string>());
    }
    if (j.contains("dimensions")) {
      if (!j.at("dimensions").is_object()) throw Invalid("dimensions must be an object");
      for (const auto& [name, value] : j.at("dimensions").items()) {
        if (!value.is_number_integer()) {
          throw Invalid("dimension '" + name + "' must be an integer");
        }
        r.dimensions[ParseDimension(name)] = value.get<int>();
      }
    }
    r.timestamp = j.value("timestamp", std::string());
  } catch (const ReviewError&) {
    throw;
  } catch (const std::exception& e) {
    throw Invalid(std::string("malformed rating: ") + e.what());
  }
  ValidateRating(r);
  return r;
}

json RatingToJson(const RatingRecord& r) {
  json dims = json::object();
  for (const auto& [d, v] : r.dimensions) dims[std::string(ToString(d))] = v;
  return json{{"item_id", r.item_id},
              {"rater_id", r.rater_id},
              {"overall", r.overall ? json(std::string(ToString(*r.overall))) : json(nullptr)},
              {"dimensions", dims},
              {"timestamp", r.timestamp}};
}

const ReviewItem* Session::FindItem(std::string_view item_id) const {
  for (const auto& item : items_) {
    if (item.item_id == item_id) return &item;
  }
  return nullptr;
}

bool Session::HasRater(std::string_view rater_id) const {
  return std::find(raters_.begin(), raters_.end(), rater_id) != raters_.end();
}

const ReviewItem* Session::NextUnrated(std::string_view rater_id) const {
  for (const auto& item : items_) {
    if (ratings_.count({item.item_id, std::string(rater_id)}) == 0) return &item;
  }
  return nullptr;
}

Progress Session::ProgressFor(std::string_view rater_id) const {
  Progress p{0, items_.size()};
  for (const auto& item : items_) {
    if (ratings_.count({item.item_id, std::string(rater_id)}) != 0) ++p.rated;
  }
  return p;
}

Progress Session::OverallProgress() const {
  return Progress{ratings_.size(), items_.size() * raters_.size()};
}

std::vector<RatingRecord> Session::RatingsFor(std::string_view item_id) const {
  std::vector<RatingRecord> out;
  for (const auto& [key, rating] : ratings_) {
    if (key.first == item_id) out.push_back(rating);
  }
  return out;
}

json SessionCreatedEvent(const Session& session) {
  json items = json::array();
  for (const auto& item : session.items_) items.push_back(ItemToJson(item));
  return json{{"event", "created"},
              {"session_id", session.id_},
              {"seed", session.seed_},
              {"single_rater", session.single_rater_},
              {"raters", session.raters_},
              {"items", items}};
}

Session CreateSession(const std::vector<ReviewSource>& generated,
                      const std::vector<ReviewSource>& originals,
                      const std::vector<std::string>& rater_ids, std::uint64_t seed,
                      const SessionOptions& options) {
  if (generated.empty() || originals.empty()) {
    throw Invalid("a session needs both generated and original impressions");
  }
  if (rater_ids.empty()) throw Invalid("a session needs at least one rater");
  std::set<std::string> raters;
  for (const auto& r : rater_ids) {
    if (r.empty()) throw Invalid("empty rater id");
    if (!raters.insert(r).second) throw Invalid("duplicate rater id '" + r + "'");
  }
  if (options.single_rater && rater_ids.size() != 1) {
    throw Invalid("a single-rater session takes exactly one rater");
  }

  std::set<std::string> seen;
  std::string fingerprint = std::to_string(seed);
  std::vector<ReviewItem> items;
  auto add = [&](const std::vector<ReviewSource>& sources, Origin origin) {
    for (const auto& s : sources) {
      if (s.report_id.empty()) throw Invalid("review source without report id");
      if (Trim(s.text).empty()) throw Invalid("report '" + s.report_id + "' has an empty impression");
      if (!seen.insert(s.report_id).second) {
        throw Invalid("report '" + s.report_id + "' appears more than once in the session");
      }
      items.push_back(ReviewItem{"", s.report_id, s.findings, s.text, origin, 0});
      fingerprint += '\0' + s.report_id + '\0' + s.text;
    }
  };
  add(generated, Origin::kGenerated);
  add(originals, Origin::kOriginal);

  PortableRng rng(seed);
  rng.Shuffle(items);
  for (std::size_t i = 0; i < items.size(); ++i) {
    items[i].position = i;
    items[i].item_id = ItemId(i);
  }

  Session session;
  session.id_ = options.session_id.empty() ? "s-" + Sha256Hex(fingerprint).substr(0, 16)
                                           : options.session_id;
  session.items_ = std::move(items);
  session.raters_ = rater_ids;
  session.single_rater_ = options.single_rater;
  session.seed_ = seed;
  if (options.journal) {
    session.journal_ = std::make_shared<SessionJournal>(*options.journal, /*must_be_new=*/true);
    session.journal_->Append(SessionCreatedEvent(session));
  }
  return session;
}

Acknowledgment SubmitRating(Session& session, RatingRecord rating, bool replace) {
  if (!session.open_) throw Conflict("session " + session.id_ + " is closed");
  if (session.FindItem(rating.item_id) == nullptr) {
    throw NotFound("unknown item '" + rating.item_id + "'");
  }
  if (!session.HasRater(rating.rater_id)) {
    throw NotFound("unknown rater '" + rating.rater_id + "'");
  }
  ValidateRating(rating);
  const auto key = std::make_pair(rating.item_id, rating.rater_id);
  const bool exists = session.ratings_.count(key) != 0;
  if (exists && !replace) {
    throw Conflict("duplicate rating by '" + rating.rater_id + "' for '" + rating.item_id + "'");
  }
  if (rating.timestamp.empty()) rating.timestamp = UtcNow();
  Acknowledgment ack{session.next_sequence_, exists};
  if (session.journal_) {
    session.journal_->Append(json{{"event", "rating"},
                                  {"sequence", ack.sequence},
                                  {"replace", replace},
                                  {"rating", RatingToJson(rating)}});
  }
  ++session.next_sequence_;
  session.ratings_[key] = std::move(rating);
  return ack;
}

void CloseSession(Session& session) {
  if (!session.open_) return;
  if (session.journal_) session.journal_->Append(json{{"event", "closed"}});
  session.open_ = false;
}

Session ReplaySession(const std::filesystem::path& journal) {
  std::ifstream in(journal);
  if (!in) throw NotFound("cannot read session journal " + journal.string());
  Session session;
  bool created = false;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (Trim(line).empty()) continue;
    const json e = json::parse(line, nullptr, false);
    if (e.is_discarded() || !e.is_object()) {
      throw Error(journal.string() + " line " + std::to_string(line_no) + ": not a JSON object");
    }
    const std::string kind = e.value("event", "");
    try {
      if (kind == "created") {
        session.id_ = e.at("session_id").get<std::string>();
        session.seed_ = e.at("seed").get<std::uint64_t>();
        session.single_rater_ = e.at("single_rater").get<bool>();
        session.raters_ = e.at("raters").get<std::vector<std::string>>();
        for (const auto& it : e.at("items")) {
          session.items_.push_back(ReviewItem{
              it.at("item_id").get<std::string>(), it.at("report_id").get<std::string>(),
              it.at("findings").get<std::string>(), it.at("shown_impression").get<std::string>(),
              it.at("origin").get<std::string>() == "generated" ? Origin::kGenerated
                                                                : Origin::kOriginal,
              it.at("position").get<std::size_t>()});
        }
        created = true;
      } else if (kind == "rating") {
        if (!created) throw Error("rating before session creation");
        SubmitRating(session, RatingFromJson(e.at("rating")), e.value("replace", false));
      } else if (kind == "closed") {
        session.open_ = false;
      } else {
        throw Error("unknown event '" + kind + "'");
      }
    } catch (const std::exception& ex) {
      throw Error(journal.string() + " line " + std::to_string(line_no) + ": " + ex.what());
    }
  }
  if (!created) throw Error(journal.string() + ": no session creation event");
  // Later submissions go to the same journal.
  session.journal_ = std::make_shared<SessionJournal>(journal, /*must_be_new=*/false);
  return session;
}

json DimensionSchema() {
  json dims = json::array();
  for (Dimension d : kAllDimensions) dims.push_back(std::string(ToString(d)));
  return json{{"dimensions", dims},
              {"scale", {{"min", kMinDimensionScore}, {"max", kMaxDimensionScore}}},
              {"overall", {"positive", "neutral", "negative"}}};
}

json RaterItemPayload(const Session& session, const ReviewItem& item) {
  return json{{"session_id", session.id()},
              {"item_id", item.item_id},
              {"position", item.position},
              {"findings", item.findings},
              {"shown_impression", item.shown_impression},
              {"schema", DimensionSchema()}};
}

ExclusionRule ParseExclusionRule(std::string_view s) {
  if (s == "consensus" || s == "default") return ExclusionRule::kConsensus;
  if (s == "unanimous") return ExclusionRule::kUnanimous;
  throw Invalid("unknown exclusion rule '" + std::string(s) + "'");
}

std::optional<OverallLabel> Consensus(const std::vector<OverallLabel>& votes, ExclusionRule rule) {
  if (votes.empty()) return std::nullopt;
  std::map<OverallLabel, std::size_t> tally;
  for (auto v : votes) ++tally[v];
  if (tally.size() == 1) return tally.begin()->first;
  if (rule == ExclusionRule::kUnanimous) return std::nullopt;
  for (const auto& [label, n] : tally) {
    if (2 * n > votes.size()) return label;
  }
  if (tally.count(OverallLabel::kPositive) != 0 && tally.count(OverallLabel::kNegative) != 0) {
    return std::nullopt;
  }
  return OverallLabel::kNeutral;
}

RatingSummary Aggregate(const Session& session, ExclusionRule rule) {
  const std::size_t required = session.single_rater() ? 1 : 2;
  std::vector<std::string> missing;
  for (const auto& item : session.items()) {
    if (item.origin == Origin::kGenerated && session.RatingsFor(item.item_id).size() < required) {
      missing.push_back(item.item_id);
    }
  }
  if (!missing.empty()) {
    std::string list;
    for (std::size_t i = 0; i < missing.size(); ++i) list += (i ? ", " : "") + missing[i];
    throw Conflict("items without enough ratings (" + std::to_string(required) +
                   " needed): " + list);
  }

  RatingSummary s;
  s.total_items = session.items().size();
  for (auto label : {OverallLabel::kPositive, OverallLabel::kNeutral, OverallLabel::kNegative}) {
    s.counts[label] = 0;
  }
  std::map<std::string, std::map<Dimension, std::pair<double, std::size_t>>> sums;
  auto accumulate = [&](const std::string& key, const std::vector<RatingRecord>& ratings) {
    for (const auto& r : ratings) {
      for (const auto& [d, v] : r.dimensions) {
        auto& acc = sums[key][d];
        acc.first += v;
        ++acc.second;
      }
    }
  };
  for (const auto& item : session.items()) {
    const auto ratings = session.RatingsFor(item.item_id);
    if (item.origin == Origin::kOriginal) {
      accumulate("original", ratings);
      continue;
    }
    ++s.generated_items;
    std::vector<OverallLabel> votes;
    for (const auto& r : ratings) votes.push_back(*r.overall);
    const auto label = Consensus(votes, rule);
    if (!label) {
      ++s.excluded;
      s.excluded_item_ids.push_back(item.item_id);
      continue;
    }
    ++s.counts[*label];
    accumulate(std::string(ToString(*label)), ratings);
  }
  for (const auto& [key, per_dim] : sums) {
    for (const auto& [d, acc] : per_dim) {
      s.dimension_means[key][d] = acc.first / static_cast<double>(acc.second);
    }
  }
  s.analyzed = s.total_items - s.excluded;
  s.acceptable_numerator = s.counts[OverallLabel::kPositive] + s.counts[OverallLabel::kNeutral];
  s.acceptable_denominator = s.generated_items;
  s.acceptable_fraction = s.generated_items == 0
                              ? 0.0
                              : static_cast<double>(s.acceptable_numerator) /
                                    static_cast<double>(s.acceptable_denominator);
  return s;
}

json SummaryToJson(const RatingSummary& s) {
  json counts = json::object();
  for (const auto& [label, n] : s.counts) counts[std::string(ToString(label))] = n;
  json means = json::object();
  for (const auto& [key, per_dim] : s.dimension_means) {
    for (const auto& [d, v] : per_dim) means[key][std::string(ToString(d))] = v;
  }
  return json{{"generated_items", s.generated_items},
              {"total_items", s.total_items},
              {"counts", counts},
              {"excluded", s.excluded},
              {"analyzed", s.analyzed},
              {"acceptable", {s.acceptable_numerator, s.acceptable_denominator}},
              {"acceptable_fraction", s.acceptable_fraction},
              {"dimension_means", means},
              {"excluded_item_ids", s.excluded_item_ids}};
}

}  // namespace radsum
