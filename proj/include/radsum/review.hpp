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

#ifndef RADSUM_REVIEW_HPP_
#define RADSUM_REVIEW_HPP_

#include <array>
#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "json.hpp"
#include "radsum/error.hpp"

namespace radsum {

// Failure category, so the review service can pick an HTTP status.
class ReviewError : public Error {
 public:
  enum class Kind { kInvalid, kNotFound, kConflict };
  ReviewError(Kind kind, const std::string& what) : Error(what), kind_(kind) {}
  Kind kind() const { return kind_; }

 private:
  Kind kind_;
};

enum class Origin { kGenerated, kOriginal };
enum class OverallLabel { kPositive, kNeutral, kNegative };
enum class Dimension { kClearance, kCompleteness, kHumanLikeness, kConciseness, kCoherence };

inline constexpr std::array<Dimension, 5> kAllDimensions = {
    Dimension::kClearance, Dimension::kCompleteness, Dimension::kHumanLikeness,
    Dimension::kConciseness, Dimension::kCoherence};
inline constexpr int kMinDimensionScore = 1;
inline constexpr int kMaxDimensionScore = 5;

std::string_view ToString(Origin o);
std::string_view ToString(OverallLabel l);
std::string_view ToString(Dimension d);
OverallLabel ParseOverallLabel(std::string_view s);
Dimension ParseDimension(std::string_view s);

// An impression to be reviewed, with the findings it summarizes.
struct ReviewSource {
  std::string report_id;
  std::string findings;
  std::string text;
};

struct ReviewItem {
  std::string item_id;
  std::string report_id;
  std::string findings;
  std::string shown_impression;
  Origin origin = Origin::kGenerated;  // never sent to raters
  std::size_t position = 0;
};

struct RatingRecord {
  std::string item_id;
  std::string rater_id;
  std::optional<OverallLabel> overall;
  std::map<Dimension, int> dimensions;
  std::string timestamp;

  friend bool operator==(const RatingRecord&, const RatingRecord&) = default;
};

// Throws ReviewError(kInvalid) naming the missing or out-of-range field.
void ValidateRating(const RatingRecord& r);
// Parses {"item_id", "rater_id", "overall", "dimensions": {...},
// "timestamp"}; missing dimensions are reported by name.
RatingRecord RatingFromJson(const nlohmann::json& j);
nlohmann::json RatingToJson(const RatingRecord& r);

struct Acknowledgment {
  std::uint64_t sequence = 0;
  bool replaced = false;
};

struct Progress {
  std::size_t rated = 0;
  std::size_t total = 0;
};

struct SessionOptions {
  std::string session_id;  // derived from the inputs when empty
  bool single_rater = false;
  // When set, every event is appended here (and fsynced) before it is
  // acknowledged.
  std::optional<std::filesystem::path> journal;
};

class SessionJournal;

// A blind review session: shuffled items, the rater roster, and every
// rating received so far. Not internally synchronized.
class Session {
 public:
  const std::string& id() const { return id_; }
  const std::vector<ReviewItem>& items() const { return items_; }
  const std::vector<std::string>& raters() const { return raters_; }
  bool single_rater() const { return single_rater_; }
  bool open() const { return open_; }
  std::uint64_t seed() const { return seed_; }
  const std::map<std::pair<std::string, std::string>, RatingRecord>& ratings() const {
    return ratings_;
  }

  const ReviewItem* FindItem(std::string_view item_id) const;
  bool HasRater(std::string_view rater_id) const;
  // First item, in position order, that `rater_id` has not rated.
  const ReviewItem* NextUnrated(std::string_view rater_id) const;
  Progress ProgressFor(std::string_view rater_id) const;
  Progress OverallProgress() const;
  std::vector<RatingRecord> RatingsFor(std::string_view item_id) const;

 private:
  friend Session CreateSession(const std::vector<ReviewSource>&, const std::vector<ReviewSource>&,
                               const std::vector<std::string>&, std::uint64_t,
                               const SessionOptions&);
  friend Acknowledgment SubmitRating(Session&, RatingRecord, bool);
  friend void CloseSession(Session&);
  friend Session ReplaySession(const std::filesystem::path&);
  friend nlohmann::json SessionCreatedEvent(const Session&);

  std::string id_;
  std::vector<ReviewItem> items_;
  std::vector<std::string> raters_;
  bool single_rater_ = false;
  bool open_ = true;
  std::uint64_t seed_ = 0;
  std::uint64_t next_sequence_ = 1;
  std::map<std::pair<std::string, std::string>, RatingRecord> ratings_;
  std::shared_ptr<SessionJournal> journal_;
};

// Mixes generated and original impressions into one shuffled, blinded
// session. Throws when a report id appears twice.
Session CreateSession(const std::vector<ReviewSource>& generated,
                      const std::vector<ReviewSource>& originals,
                      const std::vector<std::string>& rater_ids, std::uint64_t seed,
                      const SessionOptions& options = {});

// Records a rating. A second rating by the same rater for the same item is
// rejected as "duplicate" unless `replace` is set. Durable before return
// when the session has a journal.
Acknowledgment SubmitRating(Session& session, RatingRecord rating, bool replace = false);
void CloseSession(Session& session);

// Rebuilds a session from its journal.
Session ReplaySession(const std::filesystem::path& journal);

nlohmann::json SessionCreatedEvent(const Session& session);

// What a rater sees for one item. Has no origin field.
nlohmann::json RaterItemPayload(const Session& session, const ReviewItem& item);
nlohmann::json DimensionSchema();

enum class ExclusionRule {
  // Unanimous label, else strict majority, else excluded when the split
  // spans positive and negative, else neutral.
  kConsensus,
  // Anything short of unanimity is excluded.
  kUnanimous,
};
ExclusionRule ParseExclusionRule(std::string_view s);

struct RatingSummary {
  std::size_t generated_items = 0;
  std::size_t total_items = 0;
  // Consensus labels of non-excluded generated items.
  std::map<OverallLabel, std::size_t> counts;
  std::size_t excluded = 0;
  // total_items - excluded
  std::size_t analyzed = 0;
  // (positive + neutral) / generated_items, kept as an exact fraction too.
  std::size_t acceptable_numerator = 0;
  std::size_t acceptable_denominator = 0;
  double acceptable_fraction = 0.0;
  // Mean dimension scores over the ratings of non-excluded generated items,
  // by consensus label, plus "original" for the original items.
  std::map<std::string, std::map<Dimension, double>> dimension_means;
  std::vector<std::string> excluded_item_ids;
};

// Consensus over generated items. Throws ReviewError(kConflict) listing the
// generated items that lack the required ratings (two, or one in a
// single-rater session).
RatingSummary Aggregate(const Session& session, ExclusionRule rule = ExclusionRule::kConsensus);

// Consensus label for one item's overall votes; nullopt means excluded.
std::optional<OverallLabel> Consensus(const std::vector<OverallLabel>& votes, ExclusionRule rule);

nlohmann::json SummaryToJson(const RatingSummary& s);

}  // namespace radsum

#endif  // RADSUM_REVIEW_HPP_
