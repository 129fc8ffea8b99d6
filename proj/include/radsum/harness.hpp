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

#ifndef RADSUM_HARNESS_HPP_
#define RADSUM_HARNESS_HPP_

#include <filesystem>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"
#include "radsum/corpus.hpp"
#include "radsum/metrics.hpp"
#include "radsum/perturb.hpp"
#include "radsum/pipeline.hpp"

namespace radsum {

// One row of a comparison: a named generation setup.
struct SystemUnderTest {
  std::string name;
  std::shared_ptr<const GenerationBackend> coarse;
  std::shared_ptr<const GenerationBackend> fine;
  StyleTier style;
  // Resolved backend configuration, folded into the run's config digest.
  nlohmann::json config;
};

struct RunOptions {
  MetricConfig metrics;
  PipelineOptions pipeline;
  // Worker threads per system; further bounded by provider in-flight limits.
  std::size_t jobs = 1;
};

// Per (system, report) result. Exactly one of `metrics` and `error` is set.
struct ReportOutcome {
  std::string system;
  std::string report_id;
  std::optional<GeneratedImpression> generated;
  std::optional<MetricReport> metrics;
  std::string error;
  // "generate" or "evaluate" when failed.
  std::string failed_stage;
};

struct TableRow {
  std::string system;
  // Arithmetic mean of the per-report reports that scored.
  MetricReport mean;
  std::size_t scored = 0;
  std::size_t excluded = 0;
};

struct EvaluationTable {
  std::vector<TableRow> rows;  // insertion order
  std::size_t n_reports = 0;
  std::string config_digest;

  const TableRow* Find(std::string_view system) const;
};

struct EvaluationRun {
  EvaluationTable table;
  std::vector<ReportOutcome> outcomes;  // system-major, report order
  nlohmann::json resolved_config;
};

// Element-wise mean, accumulated in the given order. BERT and factual
// consistency are present in the mean only if present in every input.
MetricReport MeanOf(std::span<const MetricReport> reports);
// a - b, field by field.
MetricReport Difference(const MetricReport& a, const MetricReport& b);

// Generates and scores every report with every system. Per-report failures
// are recorded and excluded from the means; the run fails only if nothing
// scored at all.
EvaluationRun RunEvaluation(const Dataset& d, const std::vector<SystemUnderTest>& systems,
                            const MetricProviders& providers, const RunOptions& options);

struct StabilityRun {
  // Two rows: "<name> [clean]" and "<name> [perturbed]".
  EvaluationTable table;
  // perturbed - clean
  MetricReport delta;
  EvaluationRun clean;
  EvaluationRun perturbed;
  Dataset perturbed_dataset;
  std::size_t total_edits = 0;
};

// Runs `system` on the clean dataset and on a copy whose findings carry
// injected typos (report i uses seed DeriveSeed(spec.seed, i)). The noisy
// findings feed both generation and the factual-consistency premise;
// reference impressions are untouched.
StabilityRun StabilityTest(const Dataset& d, const SystemUnderTest& system, const TypoSpec& spec,
                           const MetricProviders& providers, const RunOptions& options);

Dataset PerturbFindings(const Dataset& d, const TypoSpec& spec, std::size_t* total_edits = nullptr);

enum class TableFormat { kPlain, kDelimited, kMarkdown };
TableFormat ParseTableFormat(std::string_view s);

// Columns: System, ROUGE (ROUGE-1 recall), BLEU, BERT (F), FC; three
// decimals; "n/a" for a metric that was not computed.
std::string RenderTable(const EvaluationTable& t, TableFormat format);
// Appends a delta row to a rendered stability table.
EvaluationTable WithDeltaRow(const StabilityRun& run);

struct ParsedTableRow {
  std::string system;
  std::optional<double> rouge;
  std::optional<double> bleu;
  std::optional<double> bert;
  std::optional<double> fc;
};
std::vector<ParsedTableRow> ParseDelimitedTable(std::string_view text);

nlohmann::json MetricReportToJson(const MetricReport& m);
MetricReport MetricReportFromJson(const nlohmann::json& j);

// Stable digest of a resolved configuration object.
std::string ConfigDigest(const nlohmann::json& resolved);

// Writes <dir>/manifest.jsonl (one record: digest, seeds, configuration)
// and <dir>/scores.jsonl (one record per system and report).
void WriteRunArtifacts(const std::filesystem::path& dir, const nlohmann::json& manifest,
                       const EvaluationRun& run, std::string_view scores_name = "scores.jsonl");

}  // namespace radsum

#endif  // RADSUM_HARNESS_HPP_
