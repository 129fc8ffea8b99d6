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

#include "radsum/corpus.hpp"

#include <algorithm>
#include <fstream>
#include <set>
#include <sstream>

#include "radsum/error.hpp"
#include "radsum/random.hpp"

namespace radsum {
namespace {

using nlohmann::json;

constexpr std::string_view kRequiredColumns[] = {"clinical_information", "findings",
                                                 "impression", "id"};

std::string Lower(std::string_view s) {
  std::string out(s);
  for (char& c : out) {
    if (c >= 'A' && c <= 'Z') c = static_cast<char>(c - 'A' + 'a');
  }
  return out;
}

std::string RecordError(std::size_t index, const std::string& what) {
  return "record " + std::to_string(index) + ": " + what;
}

struct CsvRecord {
  std::vector<std::string> fields;
};

// RFC 4180 style: comma separated, fields optionally double-quoted, quotes
// escaped by doubling, quoted fields may span lines. CRLF and LF accepted.
std::vector<CsvRecord> ParseCsv(std::string_view text) {
  std::vector<CsvRecord> records;
  CsvRecord current;
  std::string field;
  bool in_quotes = false;
  bool field_started = false;
  bool field_was_quoted = false;
  std::size_t i = 0;
  auto end_field = [&] {
    current.fields.push_back(std::move(field));
    field.clear();
    field_started = false;
    field_was_quoted = false;
  };
  auto end_record = [&] {
    end_field();
    const bool blank = current.fields.size() == 1 && current.fields[0].empty();
    if (!blank) records.push_back(std::move(current));
    current = CsvRecord{};
  };
  if (text.substr(0, 3) == "\xEF\xBB\xBF") i = 3;
  for (; i < text.size(); ++i) {
    const char c = text[i];
    if (in_quotes) {
      if (c == '"') {
        if (i + 1 < text.size() && text[i + 1] == '"') {
          field.push_back('"');
          ++i;
        } else {
          in_quotes = false;
        }
      } else {
        field.push_back(c);
      }
      continue;
    }
    if (c == '"' && !field_started) {
      in_quotes = true;
      field_started = true;
      field_was_quoted = true;
    } else if (c == ',') {
      end_field();
    } else if (c == '\r' && i + 1 < text.size() && text[i + 1] == '\n') {
      continue;
    } else if (c == '\n') {
      end_record();
    } else {
      if (field_was_quoted) {
        throw Error("record " + std::to_string(records.size()) +
                    ": unexpected character after closing quote");
      }
      field.push_back(c);
      field_started = true;
    }
  }
  if (in_quotes) throw Error("record " + std::to_string(records.size()) + ": unterminated quote");
  if (field_started || !current.fields.empty()) end_record();
  return records;
}

std::string CsvEscape(std::string_view s) {
  const bool needs = s.find_first_of(",\"\r\n") != std::string_view::npos ||
                     (!s.empty() && (s.front() == ' ' || s.back() == ' '));
  if (!needs) return std::string(s);
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out.push_back('"');
    out.push_back(c);
  }
  out.push_back('"');
  return out;
}

std::optional<int> ParseAge(std::string_view s, std::size_t index) {
  const std::string t = Trim(s);
  if (t.empty()) return std::nullopt;
  int age = 0;
  for (char c : t) {
    if (c < '0' || c > '9') throw Error(RecordError(index, "age is not a non-negative integer"));
    age = age * 10 + (c - '0');
    if (age > 200) throw Error(RecordError(index, "age out of range"));
  }
  return age;
}

std::string MappedColumn(const LoadOptions& options, const std::string& canonical) {
  auto it = options.column_map.find(canonical);
  return it == options.column_map.end() ? canonical : it->second;
}

Report BuildReport(const std::map<std::string, std::string>& cells, const LoadOptions& options,
                   std::size_t index) {
  auto get = [&](const std::string& canonical) -> const std::string* {
    auto it = cells.find(MappedColumn(options, canonical));
    return it == cells.end() ? nullptr : &it->second;
  };
  Report r;
  r.id = Trim(*get("id"));
  r.clinical_information = *get("clinical_information");
  r.findings = *get("findings");
  r.impression = *get("impression");
  if (r.id.empty()) throw Error(RecordError(index, "empty id"));
  if (Trim(r.findings).empty()) throw Error(RecordError(index, "empty findings"));
  try {
    if (const auto* g = get("gender"); g != nullptr && !Trim(*g).empty()) {
      r.gender = ParseGender(Trim(*g));
    }
    if (const auto* src = get("source"); src != nullptr && !Trim(*src).empty()) {
      r.source = ParseSource(Trim(*src));
    } else {
      r.source = options.source;
    }
  } catch (const Error& e) {
    throw Error(RecordError(index, e.what()));
  }
  if (const auto* a = get("age"); a != nullptr) r.age_years = ParseAge(*a, index);
  return r;
}

void CheckUniqueIds(const Dataset& d) {
  std::map<std::string_view, std::size_t> seen;
  for (std::size_t i = 0; i < d.reports.size(); ++i) {
    auto [it, inserted] = seen.emplace(d.reports[i].id, i + 1);
    if (!inserted) {
      throw Error(RecordError(i + 1, "duplicate id '" + d.reports[i].id + "' (first at record " +
                                         std::to_string(it->second) + ")"));
    }
  }
}

Dataset ParseDelimited(std::string_view content, const LoadOptions& options, std::string name) {
  const auto records = ParseCsv(content);
  if (records.empty()) throw Error("missing header row");
  const auto& header = records.front().fields;
  std::map<std::string, std::size_t> column_index;
  for (std::size_t c = 0; c < header.size(); ++c) column_index.emplace(Trim(header[c]), c);
  for (auto required : kRequiredColumns) {
    const std::string col = MappedColumn(options, std::string(required));
    if (column_index.count(col) == 0) throw Error("missing required column '" + col + "'");
  }
  Dataset d;
  d.name = std::move(name);
  d.reports.reserve(records.size() - 1);
  for (std::size_t r = 1; r < records.size(); ++r) {
    const auto& fields = records[r].fields;
    if (fields.size() != header.size()) {
      throw Error(RecordError(r, "expected " + std::to_string(header.size()) + " fields, got " +
                                     std::to_string(fields.size())));
    }
    std::map<std::string, std::string> cells;
    for (const auto& [col, idx] : column_index) cells[col] = fields[idx];
    d.reports.push_back(BuildReport(cells, options, r));
  }
  CheckUniqueIds(d);
  return d;
}

Dataset ParseRecordLines(std::string_view content, const LoadOptions& options, std::string name) {
  Dataset d;
  d.name = std::move(name);
  std::size_t index = 0;
  std::size_t start = 0;
  while (start < content.size()) {
    std::size_t nl = content.find('\n', start);
    if (nl == std::string_view::npos) nl = content.size();
    const std::string line = Trim(content.substr(start, nl - start));
    start = nl + 1;
    if (line.empty()) continue;
    ++index;
    json j = json::parse(line, nullptr, false);
    if (j.is_discarded() || !j.is_object()) throw Error(RecordError(index, "not a JSON object"));
    std::map<std::string, std::string> cells;
    for (const auto& [key, value] : j.items()) {
      if (value.is_string()) {
        cells[key] = value.get<std::string>();
      } else if (value.is_number_integer()) {
        if (value.get<long long>() < 0) throw Error(RecordError(index, key + " is negative"));
        cells[key] = std::to_string(value.get<long long>());
      } else if (value.is_null()) {
        cells[key] = "";
      } else {
        throw Error(RecordError(index, "field '" + key + "' has an unsupported type"));
      }
    }
    for (auto required : kRequiredColumns) {
      const std::string col = MappedColumn(options, std::string(required));
      if (cells.count(col) == 0) throw Error(RecordError(index, "missing required column '" + col + "'"));
    }
    d.reports.push_back(BuildReport(cells, options, index));
  }
  CheckUniqueIds(d);
  return d;
}

}  // namespace

std::string_view ToString(Gender g) {
  switch (g) {
    case Gender::kFemale:
      return "female";
    case Gender::kMale:
      return "male";
    case Gender::kOther:
      return "other";
    case Gender::kUnknown:
      return "unknown";
  }
  return "unknown";
}

std::string_view ToString(Source s) { return s == Source::kExternal ? "external" : "internal"; }

Gender ParseGender(std::string_view s) {
  const std::string v = Lower(s);
  if (v == "female" || v == "f") return Gender::kFemale;
  if (v == "male" || v == "m") return Gender::kMale;
  if (v == "other" || v == "o") return Gender::kOther;
  if (v == "unknown" || v == "u") return Gender::kUnknown;
  throw Error("unrecognized gender '" + std::string(s) + "'");
}

Source ParseSource(std::string_view s) {
  const std::string v = Lower(s);
  if (v == "internal") return Source::kInternal;
  if (v == "external") return Source::kExternal;
  throw Error("unrecognized source '" + std::string(s) + "'");
}

void Dataset::Validate() const {
  for (std::size_t i = 0; i < reports.size(); ++i) {
    if (reports[i].id.empty()) throw Error(RecordError(i + 1, "empty id"));
    if (Trim(reports[i].findings).empty()) throw Error(RecordError(i + 1, "empty findings"));
  }
  CheckUniqueIds(*this);
}

const Report* Dataset::Find(std::string_view id) const {
  for (const auto& r : reports) {
    if (r.id == id) return &r;
  }
  return nullptr;
}

DatasetFormat ParseDatasetFormat(std::string_view s) {
  if (s == "delimited-table" || s == "csv") return DatasetFormat::kDelimitedTable;
  if (s == "record-lines" || s == "jsonl") return DatasetFormat::kRecordLines;
  throw Error("unknown dataset format '" + std::string(s) + "'");
}

DatasetFormat GuessDatasetFormat(const std::filesystem::path& path) {
  const std::string ext = Lower(path.extension().string());
  if (ext == ".jsonl" || ext == ".ndjson") return DatasetFormat::kRecordLines;
  return DatasetFormat::kDelimitedTable;
}

LoadOptions LoadImportProfile(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open import profile " + path.string());
  json j = json::parse(in, nullptr, false);
  if (j.is_discarded() || !j.is_object()) throw Error("import profile is not a JSON object");
  LoadOptions o;
  try {
    if (j.contains("source")) o.source = ParseSource(j.at("source").get<std::string>());
    if (j.contains("format")) o.format = ParseDatasetFormat(j.at("format").get<std::string>());
    if (j.contains("columns")) {
      for (const auto& [k, v] : j.at("columns").items()) o.column_map[k] = v.get<std::string>();
    }
  } catch (const Error&) {
    throw;
  } catch (const std::exception& e) {
    throw Error(std::string("invalid import profile: ") + e.what());
  }
  return o;
}

Dataset ParseDataset(std::string_view content, const LoadOptions& options, std::string name) {
  return options.format == DatasetFormat::kDelimitedTable
             ? ParseDelimited(content, options, std::move(name))
             : ParseRecordLines(content, options, std::move(name));
}

Dataset LoadDataset(const std::filesystem::path& path, const LoadOptions& options) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot read dataset file " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  try {
    return ParseDataset(buf.str(), options, path.stem().string());
  } catch (...) {
    RethrowWithContext(path.string());
  }
}

json ReportToJson(const Report& r) {
  json j;
  j["id"] = r.id;
  j["clinical_information"] = r.clinical_information;
  j["findings"] = r.findings;
  j["impression"] = r.impression;
  j["gender"] = r.gender ? json(std::string(ToString(*r.gender))) : json(nullptr);
  j["age"] = r.age_years ? json(*r.age_years) : json(nullptr);
  j["source"] = std::string(ToString(r.source));
  return j;
}

Report ReportFromJson(const json& j) {
  LoadOptions o;
  o.format = DatasetFormat::kRecordLines;
  Dataset d = ParseRecordLines(j.dump(), o, "record");
  return d.reports.front();
}

std::string SerializeDataset(const Dataset& d, DatasetFormat format) {
  std::string out;
  if (format == DatasetFormat::kRecordLines) {
    for (const auto& r : d.reports) {
      out += ReportToJson(r).dump();
      out.push_back('\n');
    }
    return out;
  }
  out = "clinical_information,findings,impression,gender,age,id,source\n";
  for (const auto& r : d.reports) {
    out += CsvEscape(r.clinical_information) + ',' + CsvEscape(r.findings) + ',' +
           CsvEscape(r.impression) + ',' + (r.gender ? std::string(ToString(*r.gender)) : "") +
           ',' + (r.age_years ? std::to_string(*r.age_years) : "") + ',' + CsvEscape(r.id) + ',' +
           std::string(ToString(r.source)) + '\n';
  }
  return out;
}

void WriteDataset(const Dataset& d, const std::filesystem::path& path, DatasetFormat format) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot write dataset file " + path.string());
  out << SerializeDataset(d, format);
  if (!out) throw Error("write failed for " + path.string());
}

CorpusStats ComputeDatasetStats(const Dataset& d, const TokenizerConfig& tok) {
  if (d.reports.empty()) throw Error("empty dataset");
  CorpusStats s;
  s.report_count = d.reports.size();
  double ratio_sum = 0.0;
  for (const auto& r : d.reports) {
    const std::size_t findings = Tokenize(r.findings, tok).size();
    const std::size_t impression = Tokenize(r.impression, tok).size();
    if (impression == 0) throw Error("report '" + r.id + "' has a zero-token impression");
    s.total_tokens += Tokenize(r.clinical_information, tok).size() + findings + impression;
    ratio_sum += static_cast<double>(findings) / static_cast<double>(impression);
  }
  const auto n = static_cast<double>(s.report_count);
  s.mean_tokens_per_report = static_cast<double>(s.total_tokens) / n;
  s.mean_findings_to_impression_token_ratio = ratio_sum / n;
  return s;
}

std::string AgeBucket(const std::optional<int>& age_years) {
  if (!age_years || *age_years < 0) return "unknown";
  if (*age_years >= 90) return "90+";
  const int lo = (*age_years / 10) * 10;
  return std::to_string(lo) + "-" + std::to_string(lo + 9);
}

std::string StratumKey(const Report& r, const std::vector<std::string>& strata) {
  std::string key;
  for (const auto& field : strata) {
    if (!key.empty()) key.push_back('|');
    if (field == "gender") {
      key += "gender=" + std::string(r.gender ? ToString(*r.gender) : "unknown");
    } else if (field == "age" || field == "age_bucket") {
      key += "age=" + AgeBucket(r.age_years);
    } else {
      throw Error("unknown stratum field '" + field + "' (expected gender or age)");
    }
  }
  return key.empty() ? "all" : key;
}

std::pair<Dataset, Dataset> StratifiedSplit(const Dataset& d, std::size_t train_n,
                                            std::size_t test_n,
                                            const std::vector<std::string>& strata,
                                            std::uint64_t seed) {
  const std::size_t total = d.reports.size();
  if (train_n + test_n > total) {
    throw Error("insufficient reports: requested " + std::to_string(train_n + test_n) +
                " but dataset has " + std::to_string(total));
  }
  std::set<std::string> seen_fields;
  for (const auto& f : strata) {
    if (!seen_fields.insert(f == "age_bucket" ? "age" : f).second) {
      throw Error("stratum field '" + f + "' listed twice");
    }
  }

  struct Stratum {
    std::string key;
    std::vector<std::size_t> members;
    std::size_t train = 0;
    std::size_t test = 0;
  };
  std::map<std::string, std::vector<std::size_t>> groups;
  for (std::size_t i = 0; i < total; ++i) groups[StratumKey(d.reports[i], strata)].push_back(i);
  std::vector<Stratum> s;
  for (auto& [key, members] : groups) s.push_back({key, std::move(members), 0, 0});

  // Largest-remainder apportionment of `quota` over strata, proportional to
  // stratum size. `capacity` bounds how many each stratum can still give.
  auto apportion = [&](std::size_t quota, auto&& assign, auto&& capacity) {
    std::vector<std::size_t> rem(s.size());
    std::size_t assigned = 0;
    for (std::size_t k = 0; k < s.size(); ++k) {
      const std::size_t scaled = s[k].members.size() * quota;
      assign(k) = scaled / total;
      rem[k] = scaled % total;
      assigned += scaled / total;
    }
    std::vector<std::size_t> order(s.size());
    for (std::size_t k = 0; k < order.size(); ++k) order[k] = k;
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return rem[a] > rem[b]; });
    std::size_t extra = quota - assigned;
    for (std::size_t k : order) {
      if (extra == 0) break;
      if (capacity(k) == 0) continue;
      ++assign(k);
      --extra;
    }
    if (extra != 0) {
      for (std::size_t k : order) {
        if (rem[k] > 0 && capacity(k) == 0) {
          throw Error("insufficient reports in stratum '" + s[k].key + "'");
        }
      }
      throw Error("insufficient reports in stratum '" + s[order.front()].key + "'");
    }
  };
  if (total > 0) {
    apportion(
        train_n, [&](std::size_t k) -> std::size_t& { return s[k].train; },
        [&](std::size_t k) { return s[k].members.size() - s[k].train; });
    apportion(
        test_n, [&](std::size_t k) -> std::size_t& { return s[k].test; },
        [&](std::size_t k) { return s[k].members.size() - s[k].train - s[k].test; });
  }

  PortableRng rng(seed);
  std::vector<std::size_t> train_idx;
  std::vector<std::size_t> test_idx;
  for (auto& stratum : s) {
    if (stratum.train + stratum.test > stratum.members.size()) {
      throw Error("insufficient reports in stratum '" + stratum.key + "'");
    }
    rng.Shuffle(stratum.members);
    train_idx.insert(train_idx.end(), stratum.members.begin(),
                     stratum.members.begin() + static_cast<std::ptrdiff_t>(stratum.train));
    test_idx.insert(test_idx.end(),
                    stratum.members.begin() + static_cast<std::ptrdiff_t>(stratum.train),
                    stratum.members.begin() +
                        static_cast<std::ptrdiff_t>(stratum.train + stratum.test));
  }
  std::sort(train_idx.begin(), train_idx.end());
  std::sort(test_idx.begin(), test_idx.end());

  std::pair<Dataset, Dataset> out;
  out.first.name = d.name + "-train";
  out.second.name = d.name + "-test";
  for (std::size_t i : train_idx) out.first.reports.push_back(d.reports[i]);
  for (std::size_t i : test_idx) out.second.reports.push_back(d.reports[i]);
  return out;
}

}  // namespace radsum
