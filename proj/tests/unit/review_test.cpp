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

#include <gtest/gtest.h>

#include <algorithm>
#include <set>

#include "radsum/review.hpp"
#include "radsum/review_service.hpp"
#include "test_util.hpp"

// After Eigen: resolv.h, pulled in here, defines a _res macro.
#include "httplib.h"

namespace radsum {
namespace {

using nlohmann::json;

std::vector<ReviewSource> Sources(const std::string& prefix, std::size_t n) {
  std::vector<ReviewSource> out;
  for (std::size_t i = 0; i < n; ++i) {
    const std::string id = prefix + std::to_string(i);
    out.push_back({id, "Findings for " + id + ".", "Impression for " + id + "."});
  }
  return out;
}

RatingRecord Rate(const std::string& item, const std::string& rater, OverallLabel label,
                  int score = 4) {
  RatingRecord r;
  r.item_id = item;
  r.rater_id = rater;
  r.overall = label;
  for (Dimension d : kAllDimensions) r.dimensions[d] = score;
  r.timestamp = "2026-01-01T00:00:00Z";
  return r;
}

ReviewError::Kind KindOf(const std::function<void()>& f) {
  try {
    f();
  } catch (const ReviewError& e) {
    return e.kind();
  }
  ADD_FAILURE() << "no ReviewError thrown";
  return ReviewError::Kind::kInvalid;
}

TEST(CreateSession, MixesAndShuffles) {
  const Session s = CreateSession(Sources("g", 200), Sources("o", 100), {"r1", "r2"}, 11);
  ASSERT_EQ(s.items().size(), 300u);
  std::size_t generated = 0;
  std::set<std::string> ids;
  for (std::size_t i = 0; i < s.items().size(); ++i) {
    generated += s.items()[i].origin == Origin::kGenerated;
    ids.insert(s.items()[i].item_id);
    EXPECT_EQ(s.items()[i].position, i);
  }
  EXPECT_EQ(generated, 200u);
  EXPECT_EQ(ids.size(), 300u);

  // Not simply generated-then-original.
  bool interleaved = false;
  for (std::size_t i = 0; i < 200; ++i) interleaved |= s.items()[i].origin == Origin::kOriginal;
  EXPECT_TRUE(interleaved);

  const Session again = CreateSession(Sources("g", 200), Sources("o", 100), {"r1", "r2"}, 11);
  const Session other = CreateSession(Sources("g", 200), Sources("o", 100), {"r1", "r2"}, 12);
  auto order = [](const Session& x) {
    std::vector<std::string> v;
    for (const auto& it : x.items()) v.push_back(it.report_id);
    return v;
  };
  EXPECT_EQ(order(s), order(again));
  EXPECT_EQ(s.id(), again.id());
  EXPECT_NE(order(s), order(other));
}

TEST(CreateSession, RejectsBadInput) {
  auto gen = Sources("g", 3);
  auto orig = Sources("o", 2);
  orig[1].report_id = "g1";
  EXPECT_EQ(KindOf([&] { CreateSession(gen, orig, {"r1", "r2"}, 1); }), ReviewError::Kind::kInvalid);
  EXPECT_THROW(CreateSession(gen, Sources("o", 2), {}, 1), ReviewError);
  EXPECT_THROW(CreateSession(gen, Sources("o", 2), {"r1", "r1"}, 1), ReviewError);
  EXPECT_THROW(CreateSession({}, Sources("o", 2), {"r1"}, 1), ReviewError);
  SessionOptions single;
  single.single_rater = true;
  EXPECT_THROW(CreateSession(gen, Sources("o", 2), {"r1", "r2"}, 1, single), ReviewError);
  EXPECT_NO_THROW(CreateSession(gen, Sources("o", 2), {"r1"}, 1, single));
}

TEST(SubmitRating, ValidationAndDuplicates) {
  Session s = CreateSession(Sources("g", 2), Sources("o", 1), {"r1", "r2"}, 5);
  const std::string item = s.items()[0].item_id;

  RatingRecord missing = Rate(item, "r1", OverallLabel::kPositive);
  missing.dimensions.erase(Dimension::kConciseness);
  try {
    SubmitRating(s, missing);
    FAIL();
  } catch (const ReviewError& e) {
    EXPECT_EQ(e.kind(), ReviewError::Kind::kInvalid);
    EXPECT_NE(std::string(e.what()).find("conciseness"), std::string::npos) << e.what();
  }
  RatingRecord out_of_range = Rate(item, "r1", OverallLabel::kPositive, 6);
  EXPECT_EQ(KindOf([&] { SubmitRating(s, out_of_range); }), ReviewError::Kind::kInvalid);
  RatingRecord no_label = Rate(item, "r1", OverallLabel::kPositive);
  no_label.overall.reset();
  EXPECT_EQ(KindOf([&] { SubmitRating(s, no_label); }), ReviewError::Kind::kInvalid);

  const auto ack = SubmitRating(s, Rate(item, "r1", OverallLabel::kPositive));
  EXPECT_EQ(ack.sequence, 1u);
  EXPECT_FALSE(ack.replaced);
  try {
    SubmitRating(s, Rate(item, "r1", OverallLabel::kNegative));
    FAIL();
  } catch (const ReviewError& e) {
    EXPECT_EQ(e.kind(), ReviewError::Kind::kConflict);
    EXPECT_NE(std::string(e.what()).find("duplicate"), std::string::npos);
  }
  const auto replaced = SubmitRating(s, Rate(item, "r1", OverallLabel::kNegative), true);
  EXPECT_TRUE(replaced.replaced);
  EXPECT_EQ(replaced.sequence, 2u);
  EXPECT_EQ(s.RatingsFor(item).size(), 1u);
  EXPECT_EQ(*s.RatingsFor(item)[0].overall, OverallLabel::kNegative);

  EXPECT_EQ(KindOf([&] { SubmitRating(s, Rate("item-9999", "r1", OverallLabel::kPositive)); }),
            ReviewError::Kind::kNotFound);
  EXPECT_EQ(KindOf([&] { SubmitRating(s, Rate(item, "stranger", OverallLabel::kPositive)); }),
            ReviewError::Kind::kNotFound);

  CloseSession(s);
  EXPECT_EQ(KindOf([&] { SubmitRating(s, Rate(item, "r2", OverallLabel::kPositive)); }),
            ReviewError::Kind::kConflict);
}

TEST(RatingJson, RoundTripAndMissingDimension) {
  const RatingRecord r = Rate("item-0001", "r1", OverallLabel::kNeutral, 3);
  EXPECT_EQ(RatingFromJson(RatingToJson(r)), r);
  json j = RatingToJson(r);
  j["dimensions"].erase("human_likeness");
  try {
    RatingFromJson(j);
    FAIL();
  } catch (const ReviewError& e) {
    EXPECT_NE(std::string(e.what()).find("human_likeness"), std::string::npos) << e.what();
  }
}

TEST(Consensus, Rules) {
  using L = OverallLabel;
  const auto c = ExclusionRule::kConsensus;
  EXPECT_EQ(Consensus({L::kPositive, L::kPositive}, c), L::kPositive);
  EXPECT_EQ(Consensus({L::kPositive, L::kNegative}, c), std::nullopt);
  EXPECT_EQ(Consensus({L::kPositive, L::kNeutral}, c), L::kNeutral);
  EXPECT_EQ(Consensus({L::kNegative, L::kNeutral}, c), L::kNeutral);
  EXPECT_EQ(Consensus({L::kPositive, L::kPositive, L::kNegative}, c), L::kPositive);
  EXPECT_EQ(Consensus({L::kPositive, L::kNeutral, L::kNegative}, c), std::nullopt);
  const auto u = ExclusionRule::kUnanimous;
  EXPECT_EQ(Consensus({L::kNeutral, L::kNeutral}, u), L::kNeutral);
  EXPECT_EQ(Consensus({L::kPositive, L::kNeutral}, u), std::nullopt);
  EXPECT_EQ(ParseExclusionRule("unanimous"), u);
  EXPECT_THROW(ParseExclusionRule("vibes"), Error);
}

// 145 positive, 14 neutral, 30 negative, 11 split; originals all positive.
Session RatedSession(std::uint64_t seed) {
  Session s = CreateSession(Sources("g", 200), Sources("o", 100), {"r1", "r2"}, seed);
  std::size_t g = 0;
  for (const auto& item : s.items()) {
    std::pair<OverallLabel, OverallLabel> votes{OverallLabel::kPositive, OverallLabel::kPositive};
    if (item.origin == Origin::kGenerated) {
      const std::size_t k = std::stoul(item.report_id.substr(1));
      if (k < 145) {
      } else if (k < 159) {
        votes = {OverallLabel::kNeutral, OverallLabel::kNeutral};
      } else if (k < 189) {
        votes = {OverallLabel::kNegative, OverallLabel::kNegative};
      } else {
        votes = {OverallLabel::kPositive, OverallLabel::kNegative};
      }
      ++g;
    }
    SubmitRating(s, Rate(item.item_id, "r1", votes.first, 4));
    SubmitRating(s, Rate(item.item_id, "r2", votes.second, 2));
  }
  EXPECT_EQ(g, 200u);
  return s;
}

TEST(Aggregate, Arithmetic) {
  const RatingSummary sum = Aggregate(RatedSession(3));
  EXPECT_EQ(sum.generated_items, 200u);
  EXPECT_EQ(sum.total_items, 300u);
  EXPECT_EQ(sum.counts.at(OverallLabel::kPositive), 145u);
  EXPECT_EQ(sum.counts.at(OverallLabel::kNeutral), 14u);
  EXPECT_EQ(sum.counts.at(OverallLabel::kNegative), 30u);
  EXPECT_EQ(sum.excluded, 11u);
  EXPECT_EQ(sum.analyzed, 289u);
  EXPECT_EQ(sum.acceptable_numerator, 159u);
  EXPECT_EQ(sum.acceptable_denominator, 200u);
  EXPECT_EQ(sum.acceptable_fraction, 159.0 / 200.0);
  EXPECT_EQ(sum.excluded_item_ids.size(), 11u);
  EXPECT_EQ(sum.dimension_means.at("original").at(Dimension::kCoherence), 3.0);
  EXPECT_EQ(sum.dimension_means.at("positive").at(Dimension::kClearance), 3.0);
}

// Item ids follow shuffled positions, so excluded items are compared by report.
std::set<std::string> ExcludedReports(const Session& s, const RatingSummary& sum) {
  std::set<std::string> out;
  for (const auto& id : sum.excluded_item_ids) out.insert(s.FindItem(id)->report_id);
  return out;
}

TEST(Aggregate, PermutationInvariant) {
  const Session a = RatedSession(3);
  const Session b = RatedSession(99);
  const RatingSummary sa = Aggregate(a);
  const RatingSummary sb = Aggregate(b);
  EXPECT_EQ(ExcludedReports(a, sa), ExcludedReports(b, sb));
  json ja = SummaryToJson(sa);
  json jb = SummaryToJson(sb);
  ja.erase("excluded_item_ids");
  jb.erase("excluded_item_ids");
  EXPECT_EQ(ja, jb);
}

TEST(Aggregate, UnanimousAllPositive) {
  Session s = CreateSession(Sources("g", 4), Sources("o", 2), {"r1", "r2"}, 1);
  for (const auto& item : s.items()) {
    for (const auto* r : {"r1", "r2"}) SubmitRating(s, Rate(item.item_id, r, OverallLabel::kPositive));
  }
  const RatingSummary sum = Aggregate(s, ExclusionRule::kUnanimous);
  EXPECT_EQ(sum.acceptable_fraction, 1.0);
  EXPECT_EQ(sum.excluded, 0u);
}

TEST(Aggregate, MissingRatingsAreAnError) {
  Session s = CreateSession(Sources("g", 2), Sources("o", 1), {"r1", "r2"}, 1);
  const ReviewItem* first = nullptr;
  for (const auto& item : s.items()) {
    if (item.origin == Origin::kGenerated && !first) first = &item;
  }
  for (const auto& item : s.items()) {
    SubmitRating(s, Rate(item.item_id, "r1", OverallLabel::kPositive));
    if (&item != first) SubmitRating(s, Rate(item.item_id, "r2", OverallLabel::kPositive));
  }
  try {
    Aggregate(s);
    FAIL();
  } catch (const ReviewError& e) {
    EXPECT_EQ(e.kind(), ReviewError::Kind::kConflict);
    EXPECT_NE(std::string(e.what()).find(first->item_id), std::string::npos) << e.what();
  }
  CloseSession(s);
  EXPECT_THROW(Aggregate(s), ReviewError);
}

TEST(Blindness, PayloadHasNoOrigin) {
  const Session s = CreateSession(Sources("g", 3), Sources("o", 3), {"r1"}, 1);
  for (const auto& item : s.items()) {
    const json p = RaterItemPayload(s, item);
    EXPECT_FALSE(p.contains("origin"));
    EXPECT_FALSE(p.contains("report_id"));
    const std::string dumped = p.dump();
    EXPECT_EQ(dumped.find("generated"), std::string::npos) << dumped;
    EXPECT_EQ(dumped.find("original"), std::string::npos) << dumped;
  }
}

TEST(Journal, ReplayReproducesSummary) {
  testing::TempDir dir;
  SessionOptions opts;
  opts.journal = dir / "s.jsonl";
  {
    Session s = CreateSession(Sources("g", 6), Sources("o", 3), {"r1", "r2"}, 8, opts);
    for (const auto& item : s.items()) {
      SubmitRating(s, Rate(item.item_id, "r1", OverallLabel::kPositive));
      SubmitRating(s, Rate(item.item_id, "r2", OverallLabel::kNeutral));
    }
    SubmitRating(s, Rate(s.items()[0].item_id, "r2", OverallLabel::kNegative, 1), true);
    const json before = SummaryToJson(Aggregate(s));
    Session replayed = ReplaySession(*opts.journal);
    EXPECT_EQ(SummaryToJson(Aggregate(replayed)), before);
    EXPECT_EQ(replayed.ratings(), s.ratings());
    EXPECT_EQ(replayed.id(), s.id());
  }
  // Journals are never overwritten.
  EXPECT_THROW(CreateSession(Sources("g", 6), Sources("o", 3), {"r1", "r2"}, 8, opts), ReviewError);
}

class ServiceTest : public ::testing::Test {
 protected:
  json CreateBody() const {
    json gen = json::array();
    json orig = json::array();
    for (const auto& s : Sources("g", 4)) {
      gen.push_back({{"report_id", s.report_id}, {"findings", s.findings}, {"text", s.text}});
    }
    for (const auto& s : Sources("o", 2)) {
      orig.push_back({{"report_id", s.report_id}, {"findings", s.findings}, {"text", s.text}});
    }
    return {{"generated", gen}, {"originals", orig}, {"raters", {"r1", "r2"}}, {"seed", 4}};
  }
  static json RatingBody(const std::string& item, const std::string& rater) {
    return RatingToJson(Rate(item, rater, OverallLabel::kPositive));
  }
  testing::TempDir dir_;
};

TEST_F(ServiceTest, FullSessionThroughHandlers) {
  std::string id;
  {
    ReviewService svc(dir_.path());
    const auto created = svc.CreateSession(CreateBody());
    ASSERT_EQ(created.status, 201) << created.body.dump();
    id = created.body.at("session_id");
    EXPECT_EQ(svc.CreateSession(CreateBody()).status, 409);

    EXPECT_EQ(svc.Next("nope", "r1").status, 404);
    EXPECT_EQ(svc.Next(id, "stranger").status, 404);
    for (int i = 0; i < 3; ++i) {
      const auto next = svc.Next(id, "r1");
      ASSERT_EQ(next.status, 200);
      EXPECT_FALSE(next.body.at("done").get<bool>());
      EXPECT_FALSE(next.body.contains("origin"));
      EXPECT_EQ(svc.Submit(id, RatingBody(next.body.at("item_id"), "r1"), false).status, 200);
    }
    EXPECT_EQ(svc.Progress(id, "r1").body.at("rater").at("rated"), 3);
    json bad = RatingBody("item-0001", "r2");
    bad["dimensions"].erase("coherence");
    const auto rejected = svc.Submit(id, bad, false);
    EXPECT_EQ(rejected.status, 400);
    EXPECT_NE(rejected.body.dump().find("coherence"), std::string::npos);
    EXPECT_EQ(svc.Summary(id, "").status, 409);
  }
  // Restart: the journal is replayed and rating resumes where it stopped.
  ReviewService svc(dir_.path());
  EXPECT_EQ(svc.session_count(), 1u);
  EXPECT_EQ(svc.Progress(id, "r1").body.at("rater").at("rated"), 3);
  for (const auto* rater : {"r1", "r2"}) {
    for (;;) {
      const auto next = svc.Next(id, rater);
      if (next.body.at("done").get<bool>()) break;
      ASSERT_EQ(svc.Submit(id, RatingBody(next.body.at("item_id"), rater), false).status, 200);
    }
  }
  const auto summary = svc.Summary(id, "consensus");
  ASSERT_EQ(summary.status, 200) << summary.body.dump();
  EXPECT_EQ(summary.body.at("acceptable_fraction"), 1.0);
  EXPECT_EQ(svc.Close(id).status, 200);
  EXPECT_EQ(svc.Submit(id, RatingBody("item-0001", "r1"), true).status, 409);
}

TEST_F(ServiceTest, HttpRoutes) {
  ReviewService svc(dir_.path());
  httplib::Server server;
  svc.Register(server);
  const int port = server.bind_to_any_port("127.0.0.1");
  std::thread worker([&] { server.listen_after_bind(); });
  server.wait_until_ready();
  httplib::Client client("127.0.0.1", port);

  const auto schema = client.Get("/api/v1/schema");
  ASSERT_TRUE(schema);
  EXPECT_EQ(schema->status, 200);
  EXPECT_EQ(json::parse(schema->body).at("dimensions").size(), 5u);

  EXPECT_EQ(client.Post("/api/v1/sessions", "{not json", "application/json")->status, 400);
  const auto created = client.Post("/api/v1/sessions", CreateBody().dump(), "application/json");
  ASSERT_EQ(created->status, 201);
  const std::string id = json::parse(created->body).at("session_id");

  const auto next = client.Get("/api/v1/sessions/" + id + "/next?rater=r1");
  ASSERT_EQ(next->status, 200);
  const json item = json::parse(next->body);
  EXPECT_FALSE(item.contains("origin"));
  const auto ack = client.Post("/api/v1/sessions/" + id + "/ratings",
                               RatingBody(item.at("item_id"), "r1").dump(), "application/json");
  ASSERT_EQ(ack->status, 200);
  EXPECT_EQ(json::parse(ack->body).at("sequence"), 1);
  EXPECT_EQ(client.Post("/api/v1/sessions/" + id + "/ratings",
                        RatingBody(item.at("item_id"), "r1").dump(), "application/json")
                ->status,
            409);
  EXPECT_EQ(client.Post("/api/v1/sessions/" + id + "/ratings?replace=true",
                        RatingBody(item.at("item_id"), "r1").dump(), "application/json")
                ->status,
            200);
  EXPECT_EQ(client.Get("/api/v1/sessions/missing/progress")->status, 404);
  const auto list = client.Get("/api/v1/sessions");
  EXPECT_NE(list->body.find(id), std::string::npos);
  EXPECT_EQ(client.Post("/api/v1/sessions/" + id + "/close", "", "application/json")->status, 200);

  server.stop();
  worker.join();
}

}  // namespace
}  // namespace radsum
