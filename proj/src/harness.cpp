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

#include "radsum/harness.hpp"

#include <atomic>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <set>
#include <thread>

#include "radsum/digest.hpp"
#include "radsum/error.hpp"
#include "radsum/random.hpp"

namespace radsum {
namespace {

using nlohmann::json;

template <typename Fn>
void ParallelFor(std::size_t n, std::size_t workers, Fn&& fn) {
  if (workers <= 1 || n <= 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::jthread> threads;
  threads.reserve(std::min(workers, n));
  for (std::size_t w = 0; w < std::min(workers, n); ++w) {
    threads.emplace_back([&] {
      for (std::size_t i = next.fetch_add(1); i < n; i = next.fetch_add(1)) fn(i);
    });
  }
}

std::size_t EffectiveJobs(std::size_t requested, std::initializer_list<int> limits) {
  std::size_t jobs = std::max<std::size_t>(1, requested);
  for (int limit : limits) {
    if (limit > 0) jobs = std::min(jobs, static_cast<std::size_t>(limit));
  }
  return jobs;
}

json MetricConfigToJson(const MetricConfig& m) {
  json bleu{{"max_order", m.bleu.max_order},
            {"weights", m.bleu.ResolvedWeights()},
            {"smoothing", m.bleu.smoothing == BleuConfig::Smoothing::kNone ? "none" : "epsilon"},
            {"epsilon", m.bleu.epsilon}};
  return json{{"tokenizer",
               {{"lowercase", m.tokenizer.lowercase},
                {"strip_punctuation", m.tokenizer.strip_punctuation}}},
              {"rouge", {{"orders", m.rouge.orders}, {"beta", m.rouge.beta}}},
              {"bleu", bleu}};
}

json ResolvedConfig(const Dataset& d, const std::vector<const SystemUnderTest*>& systems,
                    const MetricProviders& providers, const RunOptions& options) {
  json j;
  j["dataset"] = {{"name", d.name},
                  {"reports", d.reports.size()},
                  {"digest", Sha256Hex(SerializeDataset(d, DatasetFormat::kRecordLines))}};
  j["systems"] = json::array();
  for (const auto* s : systems) {
    j["systems"].push_back({{"name", s->name},
                            {"coarse_backend", s->coarse->id()},
                            {"fine_backend", s->fine->id()},
                            {"style", StyleTierToJson(s->style)},
                            {"config", s->config}});
  }
  j["metrics"] = MetricConfigToJson(options.metrics);
  j["providers"] = {
      {"embedding", providers.embedding ? json(providers.embedding->id()) : json(nullptr)},
      {"nli", providers.nli ? json(providers.nli->id()) : json(nullptr)}};
  const auto& p = options.pipeline;
  j["pipeline"] = {{"templates", p.Templates().version()},
                   {"templates_digest", p.Templates().Digest()},
                   {"include_clinical_information", p.include_clinical_information},
                   {"refinement_count", p.refinement_count},
                   {"max_output_tokens", p.max_output_tokens},
                   {"temperature", p.temperature}};
  return j;
}

std::string FormatCell(const std::optional<double>& v) {
  if (!v) return "n/a";
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.3f", *v);
  std::string s(buf);
  if (s == "-0.000") s = "0.000";
  return s;
}

struct Cells {
  std::optional<double> rouge, bleu, bert, fc;
};

Cells CellsOf(const TableRow& row) {
  Cells c;
  if (row.scored == 0) return c;
  if (auto it = row.mean.rouge_n.find(1); it != row.mean.rouge_n.end()) c.rouge = it->second;
  c.bleu = row.mean.bleu;
  if (row.mean.bert) c.bert = row.mean.bert->f;
  c.fc = row.mean.factual_consistency;
  return c;
}

std::string CsvField(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out.push_back('"');
    out.push_back(c);
  }
  return out + "\"";
}

std::vector<std::string> SplitCsvLine(std::string_view line) {
  std::vector<std::string> out;
  std::string field;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"' && i + 1 < line.size() && line[i + 1] == '"') {
        field.push_back('"');
        ++i;
      } else if (c == '"') {
        quoted = false;
      } else {
        field.push_back(c);
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      out.push_back(std::move(field));
      field.clear();
    } else {
      field.push_back(c);
    }
  }
  out.push_back(std::move(field));
  return out;
}

std::optional<double> ParseCell(const std::string& s) {
  if (s == "n/a") return std::nullopt;
  std::size_t used = 0;
  double v = 0.0;
  try {
    v = std::stod(s, &used);
  } catch (const std::exception&) {
    throw Error("table cell '" + s + "' is not a number");
  }
  if (used != s.size()) throw Error("table cell '" + s + "' is not a number");
  return v;
}

}  // namespace

const TableRow* EvaluationTable::Find(std::string_view system) const {
  for (const auto& row : rows) {
    if (row.system == system) return &row;
  }
  return nullptr;
}

MetricReport MeanOf(std::span<const MetricReport> reports) {
  MetricReport mean;
  if (reports.empty()) return mean;
  const auto n = static_cast<double>(reports.size());
  bool all_bert = true;
  bool all_fc = true;
  BertScores bert_sum;
  double fc_sum = 0.0;
  for (const auto& r : reports) {
    for (const auto& [order, v] : r.rouge_n) mean.rouge_n[order] += v;
    mean.rouge_l.recall += r.rouge_l.recall;
    mean.rouge_l.precision += r.rouge_l.precision;
    mean.rouge_l.f += r.rouge_l.f;
    mean.bleu += r.bleu;
    if (r.bert) {
      bert_sum.recall += r.bert->recall;
      bert_sum.precision += r.bert->precision;
      bert_sum.f += r.bert->f;
    } else {
      all_bert = false;
    }
    if (r.factual_consistency) {
      fc_sum += *r.factual_consistency;
    } else {
      all_fc = false;
    }
  }
  for (auto& [order, v] : mean.rouge_n) v /= n;
  mean.rouge_l.recall /= n;
  mean.rouge_l.precision /= n;
  mean.rouge_l.f /= n;
  mean.bleu /= n;
  if (all_bert) mean.bert = BertScores{bert_sum.recall / n, bert_sum.precision / n, bert_sum.f / n};
  if (all_fc) mean.factual_consistency = fc_sum / n;
  return mean;
}

MetricReport Difference(const MetricReport& a, const MetricReport& b) {
  MetricReport d;
  for (const auto& [order, v] : a.rouge_n) {
    if (auto it = b.rouge_n.find(order); it != b.rouge_n.end()) d.rouge_n[order] = v - it->second;
  }
  d.rouge_l = {a.rouge_l.recall - b.rouge_l.recall, a.rouge_l.precision - b.rouge_l.precision,
               a.rouge_l.f - b.rouge_l.f};
  d.bleu = a.bleu - b.bleu;
  if (a.bert && b.bert) {
    d.bert = BertScores{a.bert->recall - b.bert->recall, a.bert->precision - b.bert->precision,
                        a.bert->f - b.bert->f};
  }
  if (a.factual_consistency && b.factual_consistency) {
    d.factual_consistency = *a.factual_consistency - *b.factual_consistency;
  }
  return d;
}

EvaluationRun RunEvaluation(const Dataset& d, const std::vector<SystemUnderTest>& systems,
                            const MetricProviders& providers, const RunOptions& options) {
  if (d.reports.empty()) throw Error("evaluation needs at least one report");
  if (systems.empty()) throw Error("evaluation needs at least one system");
  std::set<std::string_view> ids;
  for (const auto& r : d.reports) {
    if (!ids.insert(r.id).second) throw Error("duplicate report id '" + r.id + "'");
    if (Trim(r.impression).empty()) {
      throw Error("report '" + r.id + "' has no reference impression");
    }
  }
  std::vector<const SystemUnderTest*> system_ptrs;
  std::set<std::string> names;
  for (const auto& s : systems) {
    if (!names.insert(s.name).second) throw Error("duplicate system name '" + s.name + "'");
    if (!s.coarse || !s.fine) throw Error("system '" + s.name + "' has no backend");
    s.style.Validate();
    system_ptrs.push_back(&s);
  }
  options.metrics.rouge.Validate();
  options.metrics.bleu.Validate();

  EvaluationRun run;
  run.resolved_config = ResolvedConfig(d, system_ptrs, providers, options);
  run.table.config_digest = ConfigDigest(run.resolved_config);
  run.table.n_reports = d.reports.size();

  std::size_t total_scored = 0;
  for (const auto& system : systems) {
    std::vector<ReportOutcome> outcomes(d.reports.size());
    const std::size_t jobs = EffectiveJobs(
        options.jobs,
        {system.coarse->max_in_flight(), system.fine->max_in_flight(),
         providers.embedding ? providers.embedding->max_in_flight() : 0,
         providers.nli ? providers.nli->max_in_flight() : 0});
    ParallelFor(d.reports.size(), jobs, [&](std::size_t i) {
      const Report& report = d.reports[i];
      ReportOutcome& out = outcomes[i];
      out.system = system.name;
      out.report_id = report.id;
      try {
        out.generated = GenerateImpression(report, *system.coarse, *system.fine, system.style,
                                           options.pipeline);
      } catch (const std::exception& e) {
        out.error = e.what();
        out.failed_stage = "generate";
        return;
      }
      try {
        out.metrics = EvaluatePair(out.generated->final_text, report.impression, report.findings,
                                   providers, options.metrics);
      } catch (const std::exception& e) {
        out.error = e.what();
        out.failed_stage = "evaluate";
      }
    });

    // Ordered reduction: report index order, independent of scheduling.
    std::vector<MetricReport> scored;
    TableRow row;
    row.system = system.name;
    for (const auto& o : outcomes) {
      if (o.metrics) {
        scored.push_back(*o.metrics);
      } else {
        ++row.excluded;
      }
    }
    row.scored = scored.size();
    row.mean = MeanOf(scored);
    total_scored += row.scored;
    run.table.rows.push_back(std::move(row));
    run.outcomes.insert(run.outcomes.end(), std::make_move_iterator(outcomes.begin()),
                        std::make_move_iterator(outcomes.end()));
  }
  if (total_scored == 0) {
    std::string first_error = run.outcomes.empty() ? "" : run.outcomes.front().error;
    throw Error("every system failed on every report (first error: " + first_error + ")");
  }
  return run;
}

Dataset PerturbFindings(const Dataset& d, const TypoSpec& spec, std::size_t* total_edits) {
  spec.Validate();
  Dataset out = d;
  out.name = d.name + "-typos";
  std::size_t edits = 0;
  for (std::size_t i = 0; i < out.reports.size(); ++i) {
    TypoSpec per_report = spec;
    per_report.seed = DeriveSeed(spec.seed, i);
    TypoResult r = InjectTypos(out.reports[i].findings, per_report);
    out.reports[i].findings = std::move(r.text);
    edits += r.edit_count;
  }
  if (total_edits != nullptr) *total_edits = edits;
  return out;
}

StabilityRun StabilityTest(const Dataset& d, const SystemUnderTest& system, const TypoSpec& spec,
                           const MetricProviders& providers, const RunOptions& options) {
  StabilityRun run;
  run.perturbed_dataset = PerturbFindings(d, spec, &run.total_edits);
  run.clean = RunEvaluation(d, {system}, providers, options);
  run.perturbed = RunEvaluation(run.perturbed_dataset, {system}, providers, options);

  TableRow clean_row = run.clean.table.rows.front();
  TableRow noisy_row = run.perturbed.table.rows.front();
  clean_row.system = system.name + " [clean]";
  noisy_row.system = system.name + " [perturbed]";
  run.delta = Difference(noisy_row.mean, clean_row.mean);

  json config{{"clean", run.clean.resolved_config},
              {"typos",
               {{"rate", spec.rate},
                {"weights", spec.weights},
                {"seed", spec.seed},
                {"perturbed_dataset_digest",
                 run.perturbed.resolved_config["dataset"]["digest"]}}}};
  run.table.config_digest = ConfigDigest(config);
  run.table.n_reports = d.reports.size();
  run.table.rows = {std::move(clean_row), std::move(noisy_row)};
  return run;
}

EvaluationTable WithDeltaRow(const StabilityRun& run) {
  EvaluationTable t = run.table;
  TableRow delta;
  delta.system = "delta";
  delta.mean = run.delta;
  delta.scored = std::min(t.rows[0].scored, t.rows[1].scored);
  t.rows.push_back(std::move(delta));
  return t;
}

TableFormat ParseTableFormat(std::string_view s) {
  if (s == "plain") return TableFormat::kPlain;
  if (s == "delimited" || s == "csv") return TableFormat::kDelimited;
  if (s == "markdown" || s == "md") return TableFormat::kMarkdown;
  throw Error("unknown table format '" + std::string(s) + "'");
}

std::string RenderTable(const EvaluationTable& t, TableFormat format) {
  static const std::vector<std::string> kHeader = {"System", "ROUGE", "BLEU", "BERT", "FC"};
  std::vector<std::vector<std::string>> rows;
  for (const auto& row : t.rows) {
    const Cells c = CellsOf(row);
    rows.push_back({row.system, FormatCell(c.rouge), FormatCell(c.bleu), FormatCell(c.bert),
                    FormatCell(c.fc)});
  }
  std::string out;
  switch (format) {
    case TableFormat::kDelimited: {
      out = "system,rouge,bleu,bert,fc\n";
      for (const auto& r : rows) {
        out += CsvField(r[0]) + ',' + r[1] + ',' + r[2] + ',' + r[3] + ',' + r[4] + '\n';
      }
      break;
    }
    case TableFormat::kMarkdown: {
      out = "| System | ROUGE | BLEU | BERT | FC |\n|---|---:|---:|---:|---:|\n";
      for (const auto& r : rows) {
        out += "| " + r[0] + " | " + r[1] + " | " + r[2] + " | " + r[3] + " | " + r[4] + " |\n";
      }
      break;
    }
    case TableFormat::kPlain: {
      std::vector<std::size_t> width(kHeader.size());
      for (std::size_t c = 0; c < kHeader.size(); ++c) width[c] = kHeader[c].size();
      for (const auto& r : rows) {
        for (std::size_t c = 0; c < r.size(); ++c) width[c] = std::max(width[c], r[c].size());
      }
      auto line = [&](const std::vector<std::string>& cells) {
        std::string l;
        for (std::size_t c = 0; c < cells.size(); ++c) {
          if (c > 0) l += "  ";
          const std::string pad(width[c] - cells[c].size(), ' ');
          l += c == 0 ? cells[c] + pad : pad + cells[c];
        }
        while (!l.empty() && l.back() == ' ') l.pop_back();
        return l + '\n';
      };
      out = line(kHeader);
      for (const auto& r : rows) out += line(r);
      break;
    }
  }
  return out;
}

std::vector<ParsedTableRow> ParseDelimitedTable(std::string_view text) {
  std::vector<ParsedTableRow> out;
  std::size_t start = 0;
  bool header = true;
  while (start < text.size()) {
    std::size_t nl = text.find('\n', start);
    if (nl == std::string_view::npos) nl = text.size();
    const std::string line = Trim(text.substr(start, nl - start));
    start = nl + 1;
    if (line.empty()) continue;
    const auto fields = SplitCsvLine(line);
    if (header) {
      if (fields.size() != 5 || fields[0] != "system") throw Error("unexpected table header");
      header = false;
      continue;
    }
    if (fields.size() != 5) throw Error("table row has " + std::to_string(fields.size()) + " fields");
    out.push_back({fields[0], ParseCell(fields[1]), ParseCell(fields[2]), ParseCell(fields[3]),
                   ParseCell(fields[4])});
  }
  return out;
}

json MetricReportToJson(const MetricReport& m) {
  json j;
  j["rouge_n"] = json::object();
  for (const auto& [order, v] : m.rouge_n) j["rouge_n"][std::to_string(order)] = v;
  j["rouge_l"] = {{"recall", m.rouge_l.recall},
                  {"precision", m.rouge_l.precision},
                  {"f", m.rouge_l.f}};
  j["bleu"] = m.bleu;
  j["bert"] = m.bert ? json{{"recall", m.bert->recall},
                            {"precision", m.bert->precision},
                            {"f", m.bert->f}}
                     : json(nullptr);
  j["factual_consistency"] = m.factual_consistency ? json(*m.factual_consistency) : json(nullptr);
  return j;
}

MetricReport MetricReportFromJson(const json& j) {
  MetricReport m;
  for (const auto& [order, v] : j.at("rouge_n").items()) {
    m.rouge_n[static_cast<std::size_t>(std::stoul(order))] = v.get<double>();
  }
  const auto& l = j.at("rouge_l");
  m.rouge_l = {l.at("recall").get<double>(), l.at("precision").get<double>(),
               l.at("f").get<double>()};
  m.bleu = j.at("bleu").get<double>();
  if (!j.at("bert").is_null()) {
    const auto& b = j.at("bert");
    m.bert = BertScores{b.at("recall").get<double>(), b.at("precision").get<double>(),
                        b.at("f").get<double>()};
  }
  if (!j.at("factual_consistency").is_null()) {
    m.factual_consistency = j.at("factual_consistency").get<double>();
  }
  return m;
}

std::string ConfigDigest(const json& resolved) { return Sha256Hex(resolved.dump()); }

void WriteRunArtifacts(const std::filesystem::path& dir, const json& manifest,
                       const EvaluationRun& run, std::string_view scores_name) {
  std::filesystem::create_directories(dir);
  {
    std::ofstream out(dir / "manifest.jsonl", std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot write " + (dir / "manifest.jsonl").string());
    out << manifest.dump() << '\n';
  }
  const auto scores_path = dir / std::string(scores_name);
  std::ofstream out(scores_path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot write " + scores_path.string());
  for (const auto& o : run.outcomes) {
    json rec{{"system", o.system}, {"report_id", o.report_id}};
    if (o.generated) {
      rec["coarse_draft"] = o.generated->coarse_draft;
      rec["final_text"] = o.generated->final_text;
      rec["prompt_hashes"] = {o.generated->prompt_hashes.first, o.generated->prompt_hashes.second};
    }
    if (o.metrics) {
      rec["status"] = "scored";
      rec["metrics"] = MetricReportToJson(*o.metrics);
    } else {
      rec["status"] = "excluded";
      rec["failed_stage"] = o.failed_stage;
      rec["error"] = o.error;
    }
    out << rec.dump() << '\n';
  }
  if (!out) throw Error("write failed for " + scores_path.string());
}

}  // namespace radsum
