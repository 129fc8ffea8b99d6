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

#include <map>

#include "radsum/corpus.hpp"
#include "radsum/error.hpp"
#include "test_util.hpp"

namespace radsum {
namespace {

using testing::DataPath;
using testing::TempDir;

const char* kThree =
    "clinical_information,findings,impression,gender,age,id\n"
    "Cough.,Lungs are clear.,Normal chest.,female,34,a\n"
    "\"Pain, acute.\",\"Small effusion, left.\",\"Effusion \"\"small\"\".\",male,,b\n"
    "Fall.,No fracture.,No fracture.,,90,c\n";

TEST(LoadDataset, DelimitedTable) {
  const Dataset d = ParseDataset(kThree, {});
  ASSERT_EQ(d.reports.size(), 3u);
  EXPECT_EQ(d.reports[1].clinical_information, "Pain, acute.");
  EXPECT_EQ(d.reports[1].impression, "Effusion \"small\".");
  EXPECT_EQ(d.reports[1].gender, Gender::kMale);
  EXPECT_FALSE(d.reports[1].age_years);
  EXPECT_FALSE(d.reports[2].gender);
  EXPECT_EQ(d.reports[2].age_years, 90);
  EXPECT_EQ(d.reports[0].source, Source::kInternal);
}

TEST(LoadDataset, MissingColumnNamed) {
  try {
    ParseDataset("clinical_information,impression,id\nx,y,1\n", {});
    FAIL();
  } catch (const Error& e) {
    EXPECT_NE(std::string(e.what()).find("findings"), std::string::npos) << e.what();
  }
}

TEST(LoadDataset, RecordErrorsCarryIndex) {
  try {
    ParseDataset("clinical_information,findings,impression,id\nx,,y,1\n", {});
    FAIL();
  } catch (const Error& e) {
    EXPECT_NE(std::string(e.what()).find("record 1"), std::string::npos) << e.what();
    EXPECT_NE(std::string(e.what()).find("empty findings"), std::string::npos) << e.what();
  }
  EXPECT_THROW(ParseDataset("clinical_information,findings,impression,id\nx,f,y,1\nx,f,y,1\n", {}),
               Error);
}

TEST(LoadDataset, ExtraColumnsIgnoredCrlfAndBom) {
  const Dataset d = ParseDataset(
      "\xEF\xBB\xBFid,extra,clinical_information,findings,impression\r\n1,zz,c,f,i\r\n", {});
  ASSERT_EQ(d.reports.size(), 1u);
  EXPECT_EQ(d.reports[0].id, "1");
  EXPECT_EQ(d.reports[0].impression, "i");
}

TEST(LoadDataset, RecordLinesRoundTrip) {
  const Dataset d = ParseDataset(kThree, {});
  LoadOptions o;
  o.format = DatasetFormat::kRecordLines;
  const Dataset back = ParseDataset(SerializeDataset(d, DatasetFormat::kRecordLines), o);
  EXPECT_EQ(back.reports, d.reports);
  const Dataset csv_back = ParseDataset(SerializeDataset(d, DatasetFormat::kDelimitedTable), {});
  EXPECT_EQ(csv_back.reports, d.reports);
}

TEST(LoadDataset, ImportProfileMapsColumns) {
  TempDir dir;
  {
    std::ofstream(dir / "profile.json")
        << R"({"source": "external", "format": "csv",
              "columns": {"findings": "Findings", "impression": "Impression",
                          "clinical_information": "History", "id": "Study"}})";
    std::ofstream(dir / "ext.csv") << "Study,History,Findings,Impression\nx1,h,f,i\n";
  }
  const Dataset d = LoadDataset(dir / "ext.csv", LoadImportProfile(dir / "profile.json"));
  ASSERT_EQ(d.reports.size(), 1u);
  EXPECT_EQ(d.reports[0].findings, "f");
  EXPECT_EQ(d.reports[0].source, Source::kExternal);
  EXPECT_EQ(d.name, "ext");
}

TEST(LoadDataset, LargeSyntheticFixture) {
  TempDir dir;
  {
    std::ofstream f(dir / "big.csv");
    f << "clinical_information,findings,impression,gender,age,id\n";
    for (int i = 0; i < 7893; ++i) {
      f << "History.,Finding " << i << ".,Impression " << i << ".,female," << (i % 90) << ",r"
        << i << "\n";
    }
  }
  // Independent count: data lines in the file.
  std::ifstream in(dir / "big.csv");
  std::string line;
  std::size_t lines = 0;
  while (std::getline(in, line)) ++lines;
  const Dataset d = LoadDataset(dir / "big.csv", {});
  EXPECT_EQ(d.reports.size(), lines - 1);
  EXPECT_EQ(d.reports.size(), 7893u);
}

Report MakeReport(std::string id, std::string findings, std::string impression) {
  Report r;
  r.id = std::move(id);
  r.findings = std::move(findings);
  r.impression = std::move(impression);
  return r;
}

TEST(DatasetStats, Examples) {
  Dataset one{"one", {MakeReport("a", "a b c d e f g h i j", "x y")}};
  EXPECT_DOUBLE_EQ(ComputeDatasetStats(one).mean_findings_to_impression_token_ratio, 5.0);

  std::string f64;
  for (int i = 0; i < 64; ++i) f64 += "w ";
  Dataset two{"two", {MakeReport("a", "a b c d e f", "x"), MakeReport("b", f64, "a b c d e f g")}};
  // Ratios 6.0 and 64/7 = 9.14.
  EXPECT_NEAR(ComputeDatasetStats(two).mean_findings_to_impression_token_ratio, 7.57, 0.005);

  try {
    ComputeDatasetStats(Dataset{"empty", {}});
    FAIL();
  } catch (const Error& e) {
    EXPECT_STREQ(e.what(), "empty dataset");
  }
  Dataset zero{"z", {MakeReport("a", "f", "...")}};
  EXPECT_THROW(ComputeDatasetStats(zero), Error);
}

TEST(DatasetStats, ConcatenationIsWeightedCombination) {
  const Dataset a = ParseDataset(kThree, {});
  const Dataset b = LoadDataset(DataPath("reports5.csv"), {});
  Dataset ab = a;
  ab.reports.insert(ab.reports.end(), b.reports.begin(), b.reports.end());
  const auto sa = ComputeDatasetStats(a);
  const auto sb = ComputeDatasetStats(b);
  const auto sab = ComputeDatasetStats(ab);
  EXPECT_EQ(sab.total_tokens, sa.total_tokens + sb.total_tokens);
  EXPECT_NEAR(sab.mean_tokens_per_report,
              (sa.mean_tokens_per_report * 3 + sb.mean_tokens_per_report * 5) / 8, 1e-12);
  EXPECT_NEAR(sab.mean_findings_to_impression_token_ratio,
              (sa.mean_findings_to_impression_token_ratio * 3 +
               sb.mean_findings_to_impression_token_ratio * 5) /
                  8,
              1e-12);
}

TEST(AgeBucket, Decades) {
  EXPECT_EQ(AgeBucket(0), "0-9");
  EXPECT_EQ(AgeBucket(45), "40-49");
  EXPECT_EQ(AgeBucket(89), "80-89");
  EXPECT_EQ(AgeBucket(90), "90+");
  EXPECT_EQ(AgeBucket(std::nullopt), "unknown");
}

Dataset GenderBalanced(std::size_t n) {
  Dataset d{"g", {}};
  for (std::size_t i = 0; i < n; ++i) {
    Report r = MakeReport("r" + std::to_string(i), "findings", "impression");
    r.gender = i % 2 == 0 ? Gender::kFemale : Gender::kMale;
    r.age_years = static_cast<int>(20 + i % 60);
    d.reports.push_back(r);
  }
  return d;
}

std::map<std::string, std::size_t> StratumCounts(const Dataset& d,
                                                 const std::vector<std::string>& strata) {
  std::map<std::string, std::size_t> out;
  for (const auto& r : d.reports) ++out[StratumKey(r, strata)];
  return out;
}

TEST(StratifiedSplit, GenderExample) {
  const auto [train, test] = StratifiedSplit(GenderBalanced(100), 80, 20, {"gender"}, 1);
  const auto tc = StratumCounts(train, {"gender"});
  const auto ec = StratumCounts(test, {"gender"});
  EXPECT_EQ(tc.at("gender=female"), 40u);
  EXPECT_EQ(tc.at("gender=male"), 40u);
  EXPECT_EQ(ec.at("gender=female"), 10u);
  EXPECT_EQ(ec.at("gender=male"), 10u);
}

TEST(StratifiedSplit, DeterministicDisjointAndProportional) {
  const Dataset d = LoadDataset(DataPath("split550.csv"), {});
  const std::vector<std::string> strata{"gender", "age"};
  const auto a = StratifiedSplit(d, 500, 50, strata, 3407);
  const auto b = StratifiedSplit(d, 500, 50, strata, 3407);
  EXPECT_EQ(a.first.reports, b.first.reports);
  EXPECT_EQ(a.second.reports, b.second.reports);
  EXPECT_EQ(a.first.reports.size(), 500u);
  EXPECT_EQ(a.second.reports.size(), 50u);
  std::set<std::string> ids;
  for (const auto& r : a.first.reports) ids.insert(r.id);
  for (const auto& r : a.second.reports) EXPECT_TRUE(ids.insert(r.id).second);

  const auto total = StratumCounts(d, strata);
  const auto tc = StratumCounts(a.first, strata);
  const auto ec = StratumCounts(a.second, strata);
  for (const auto& [key, n] : total) {
    const double exact_train = 500.0 * n / d.reports.size();
    const double exact_test = 50.0 * n / d.reports.size();
    const double got_train = tc.count(key) ? tc.at(key) : 0;
    const double got_test = ec.count(key) ? ec.at(key) : 0;
    EXPECT_LE(std::abs(got_train - exact_train), 1.0) << key;
    EXPECT_LE(std::abs(got_test - exact_test), 1.0) << key;
  }
  const auto c = StratifiedSplit(d, 500, 50, strata, 1);
  EXPECT_NE(a.second.reports, c.second.reports);
}

TEST(StratifiedSplit, Errors) {
  const Dataset d = GenderBalanced(10);
  EXPECT_THROW(StratifiedSplit(d, 8, 3, {"gender"}, 1), Error);
  EXPECT_THROW(StratifiedSplit(d, 5, 5, {"height"}, 1), Error);
}

}  // namespace
}  // namespace radsum
