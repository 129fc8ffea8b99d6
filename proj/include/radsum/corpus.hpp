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

#ifndef RADSUM_CORPUS_HPP_
#define RADSUM_CORPUS_HPP_

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "json.hpp"
#include "radsum/text.hpp"

namespace radsum {

enum class Gender { kFemale, kMale, kOther, kUnknown };
enum class Source { kInternal, kExternal };

std::string_view ToString(Gender g);
std::string_view ToString(Source s);
Gender ParseGender(std::string_view s);
Source ParseSource(std::string_view s);

// One clinical record with the three text columns.
struct Report {
  std::string id;
  std::string clinical_information;
  std::string findings;
  std::string impression;
  std::optional<Gender> gender;
  std::optional<int> age_years;
  Source source = Source::kInternal;

  friend bool operator==(const Report&, const Report&) = default;
};

struct Dataset {
  std::string name;
  std::vector<Report> reports;

  // Throws on duplicate ids or empty findings.
  void Validate() const;
  const Report* Find(std::string_view id) const;
};

enum class DatasetFormat { kDelimitedTable, kRecordLines };

DatasetFormat ParseDatasetFormat(std::string_view s);
// ".csv" -> delimited table, ".jsonl"/".ndjson" -> record lines.
DatasetFormat GuessDatasetFormat(const std::filesystem::path& path);

struct LoadOptions {
  DatasetFormat format = DatasetFormat::kDelimitedTable;
  Source source = Source::kInternal;
  // Canonical column name -> name used in the file. Lets external corpora
  // with their own headers load without conversion.
  std::map<std::string, std::string> column_map;
};

// Reads an import adapter profile: {"source": "external",
// "columns": {"findings": "Findings", ...}, "format": "delimited-table"}.
LoadOptions LoadImportProfile(const std::filesystem::path& path);

// Delimited tables need a header naming at least clinical_information,
// findings, impression and id; gender and age are optional and extra columns
// are ignored. Record lines hold one JSON object per line with the same
// keys (plus an optional "source"). Errors carry the 1-based record index.
Dataset LoadDataset(const std::filesystem::path& path, const LoadOptions& options);
Dataset ParseDataset(std::string_view content, const LoadOptions& options,
                     std::string name = "dataset");

std::string SerializeDataset(const Dataset& d, DatasetFormat format);
void WriteDataset(const Dataset& d, const std::filesystem::path& path, DatasetFormat format);

nlohmann::json ReportToJson(const Report& r);
Report ReportFromJson(const nlohmann::json& j);

struct CorpusStats {
  std::size_t report_count = 0;
  std::size_t total_tokens = 0;
  double mean_tokens_per_report = 0.0;
  double mean_findings_to_impression_token_ratio = 0.0;
};

// Report tokens are the tokens of all three text columns. The ratio is the
// mean over reports of findings tokens / impression tokens.
CorpusStats ComputeDatasetStats(const Dataset& d, const TokenizerConfig& tok = {});

// "0-9", "10-19", ..., "80-89", "90+", or "unknown".
std::string AgeBucket(const std::optional<int>& age_years);

// Proportional train/test partition. Each stratum (a combination of the
// requested fields, "gender" and/or "age"/"age_bucket") receives its share
// of train_n and test_n by largest-remainder apportionment, so per-stratum
// counts are within one report of the exact proportion. Members are drawn
// with a seeded portable shuffle; outputs keep input order.
std::pair<Dataset, Dataset> StratifiedSplit(const Dataset& d, std::size_t train_n,
                                            std::size_t test_n,
                                            const std::vector<std::string>& strata,
                                            std::uint64_t seed);

// Stratum label of a report, e.g. "gender=female|age=40-49".
std::string StratumKey(const Report& r, const std::vector<std::string>& strata);

}  // namespace radsum

#endif  // RADSUM_CORPUS_HPP_
