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

#include <fstream>
#include <sstream>

#include "cli.hpp"
#include "radsum/corpus.hpp"
#include "test_util.hpp"

namespace radsum {
namespace {

struct Result {
  int code;
  std::string out;
  std::string err;
};

Result RunRadsum(std::vector<std::string> args) {
  args.insert(args.begin(), "radsum");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out;
  std::ostringstream err;
  const int code = RunCli(static_cast<int>(argv.size()), argv.data(), out, err);
  return {code, out.str(), err.str()};
}

std::string Reports5() { return testing::DataPath("reports5.csv").string(); }
std::string Systems() { return testing::DataPath("systems_mock.json").string(); }

TEST(Cli, ExitCodes) {
  EXPECT_EQ(RunRadsum({"ingest", "--dataset", Reports5()}).code, 0);
  EXPECT_EQ(RunRadsum({}).code, 2);
  EXPECT_EQ(RunRadsum({"ingest", "--dataset", Reports5(), "--bogus"}).code, 2);
  EXPECT_EQ(RunRadsum({"frobnicate"}).code, 2);
  EXPECT_EQ(RunRadsum({"ingest"}).code, 2);

  testing::TempDir dir;
  {
    std::ofstream bad(dir / "bad.csv");
    bad << "clinical_information,findings,id\nhx,Lungs clear.,b1\n";
  }
  const auto r = RunRadsum({"ingest", "--dataset", (dir / "bad.csv").string()});
  EXPECT_EQ(r.code, 1);
  EXPECT_NE(r.err.find("impression"), std::string::npos) << r.err;
}

TEST(Cli, HelpEverywhere) {
  for (std::vector<std::string> sub :
       {std::vector<std::string>{}, {"ingest"}, {"split"}, {"generate"}, {"evaluate"}, {"perturb"},
        {"stability"}, {"review"}, {"review", "serve"}, {"review", "aggregate"}}) {
    sub.push_back("--help");
    const auto r = RunRadsum(sub);
    EXPECT_EQ(r.code, 0) << sub.front();
    EXPECT_NE(r.out.find("Usage"), std::string::npos) << r.out;
  }
}

TEST(Cli, IngestPrintsStats) {
  const auto r = RunRadsum({"ingest", "--dataset", Reports5()});
  ASSERT_EQ(r.code, 0) << r.err;
  const auto j = nlohmann::json::parse(r.out);
  EXPECT_EQ(j.at("reports"), 5);
  EXPECT_EQ(j.at("dataset"), "reports5");
}

TEST(Cli, EvaluateMarkdownAndArtifacts) {
  testing::TempDir dir;
  const auto r = RunRadsum({"evaluate", "--dataset", Reports5(), "--systems", Systems(), "--format",
                      "markdown", "--out", dir.path().string()});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_EQ(r.out.rfind("| System | ROUGE | BLEU | BERT | FC |", 0), 0u) << r.out;
  EXPECT_NE(r.out.find("| reference | 1.000 | 1.000 | 1.000 |"), std::string::npos) << r.out;
  for (const char* f : {"manifest.jsonl", "scores.jsonl", "run.toml", "table.csv"}) {
    EXPECT_TRUE(std::filesystem::exists(dir / f)) << f;
  }
  const auto manifest = nlohmann::json::parse(testing::ReadFile(dir / "manifest.jsonl"));
  EXPECT_EQ(manifest.at("command"), "evaluate");
  EXPECT_FALSE(manifest.at("config_digest").get<std::string>().empty());
  EXPECT_EQ(manifest.at("inputs").size(), 2u);
}

TEST(Cli, SplitSizesAndDeterminism) {
  testing::TempDir a;
  testing::TempDir b;
  const std::string data = testing::DataPath("split550.csv").string();
  for (const auto* dir : {&a, &b}) {
    const auto r = RunRadsum({"split", "--dataset", data, "--train", "500", "--test", "50", "--strata",
                        "gender,age", "--seed", "3407", "--out", dir->path().string()});
    ASSERT_EQ(r.code, 0) << r.err;
  }
  EXPECT_EQ(LoadDataset(a / "train.csv", {}).reports.size(), 500u);
  EXPECT_EQ(LoadDataset(a / "test.csv", {}).reports.size(), 50u);
  EXPECT_EQ(testing::ReadFile(a / "train.csv"), testing::ReadFile(b / "train.csv"));
  EXPECT_EQ(testing::ReadFile(a / "test.csv"), testing::ReadFile(b / "test.csv"));

  // The recorded run.toml replays the same split.
  testing::TempDir c;
  const auto replay = RunRadsum({"--config", (a / "run.toml").string(), "split", "--out", c.path().string()});
  ASSERT_EQ(replay.code, 0) << replay.err;
  EXPECT_EQ(testing::ReadFile(a / "test.csv"), testing::ReadFile(c / "test.csv"));

  const auto too_big = RunRadsum({"split", "--dataset", data, "--train", "540", "--test", "50",
                            "--out", c.path().string()});
  EXPECT_EQ(too_big.code, 1);
}

TEST(Cli, PerturbWritesDataset) {
  testing::TempDir dir;
  const auto out = dir / "nested" / "noisy.csv";
  const auto r = RunRadsum({"perturb", "--dataset", Reports5(), "--rate", "0.1", "--seed", "5", "--out",
                      out.string()});
  ASSERT_EQ(r.code, 0) << r.err;
  const Dataset clean = LoadDataset(Reports5(), {});
  const Dataset noisy = LoadDataset(out, {});
  ASSERT_EQ(noisy.reports.size(), clean.reports.size());
  EXPECT_NE(noisy.reports[0].findings, clean.reports[0].findings);
  EXPECT_EQ(noisy.reports[0].impression, clean.reports[0].impression);
  EXPECT_TRUE(std::filesystem::exists(dir / "nested" / "noisy.manifest.json"));
  // Out-of-range flag values are usage errors; a disabled operation set is a domain error.
  EXPECT_EQ(RunRadsum({"perturb", "--dataset", Reports5(), "--rate", "1.5", "--out", out.string()}).code, 2);
  EXPECT_EQ(RunRadsum({"perturb", "--dataset", Reports5(), "--weights", "0,0,0,0", "--out",
                       out.string()})
                .code,
            1);
}

TEST(Cli, StabilityWritesDelta) {
  testing::TempDir dir;
  const auto r = RunRadsum({"stability", "--dataset", Reports5(), "--systems", Systems(), "--system",
                      "reference", "--rate", "0.03", "--out", dir.path().string()});
  ASSERT_EQ(r.code, 0) << r.err;
  const auto delta = nlohmann::json::parse(testing::ReadFile(dir / "delta.json"));
  EXPECT_NE(delta.dump().find("bleu"), std::string::npos);
  EXPECT_TRUE(std::filesystem::exists(dir / "scores.perturbed.jsonl"));
}

}  // namespace
}  // namespace radsum
