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

#include "cli.hpp"

#include <atomic>
#include <csignal>
#include <fstream>
#include <iostream>
#include <sstream>
#include <thread>

#include "CLI11.hpp"
#include "json.hpp"
#include "radsum/corpus.hpp"
#include "radsum/digest.hpp"
#include "radsum/harness.hpp"
#include "radsum/perturb.hpp"
#include "radsum/review.hpp"
#include "radsum/review_service.hpp"
#include "systems_profile.hpp"

// After Eigen: resolv.h, pulled in here, defines a _res macro.
#include "httplib.h"

namespace radsum {

using nlohmann::json;

namespace {

constexpr const char* kToolVersion = "0.1.0";

struct DatasetArgs {
  std::string path;
  std::string format = "auto";
  std::string import_profile;

  void Add(CLI::App* app) {
    app->add_option("--dataset", path, "Dataset file (.csv or .jsonl)")
        ->required()
        ->check(CLI::ExistingFile);
    app->add_option("--dataset-format", format, "Dataset format: auto, csv, jsonl")
        ->check(CLI::IsMember({"auto", "csv", "delimited-table", "jsonl", "record-lines"}));
    app->add_option("--import-profile", import_profile, "Column mapping for external corpora")
        ->check(CLI::ExistingFile);
  }

  LoadOptions Options() const {
    LoadOptions o = import_profile.empty() ? LoadOptions{} : LoadImportProfile(import_profile);
    if (format != "auto") {
      o.format = ParseDatasetFormat(format);
    } else if (import_profile.empty()) {
      o.format = GuessDatasetFormat(path);
    }
    return o;
  }
  Dataset Load() const { return LoadDataset(path, Options()); }
  DatasetFormat Format() const { return Options().format; }
};

std::size_t DefaultJobs() { return std::max(1u, std::thread::hardware_concurrency()); }

void WriteFile(const std::filesystem::path& path, const std::string& text) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream f(path, std::ios::binary);
  if (!f) throw Error("cannot write " + path.string());
  f << text;
  if (!f) throw Error("failed writing " + path.string());
}

std::string FileDigest(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot read " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return Sha256Hex(ss.str());
}

std::string TomlQuote(const std::string& s) {
  std::string out = "\"";
  for (char c : s) {
    if (c == '"' || c == '\\') out += '\\';
    out += c;
  }
  return out + "\"";
}

// Effective option values of the invoked subcommand, as a TOML section that
// `radsum --config run.toml <subcommand>` reads back.
std::string RunToml(const CLI::App& sub) {
  std::string section = sub.get_name();
  for (const CLI::App* p = sub.get_parent(); p && p->get_parent(); p = p->get_parent()) {
    section = p->get_name() + "." + section;
  }
  std::string out = "[" + section + "]\n";
  for (const CLI::Option* opt : sub.get_options()) {
    const std::string name = opt->get_single_name();
    if (name == "help" || name.empty()) continue;
    std::vector<std::string> values = opt->results();
    if (values.empty()) {
      if (opt->get_default_str().empty()) continue;
      values = {opt->get_default_str()};
    }
    if (values.size() == 1) {
      out += name + " = " + TomlQuote(values[0]) + "\n";
    } else {
      out += name + " = [";
      for (std::size_t i = 0; i < values.size(); ++i) out += (i ? ", " : "") + TomlQuote(values[i]);
      out += "]\n";
    }
  }
  return out;
}

// The manifest records the exact invocation plus digests of its inputs;
// run.toml holds the effective options and can be fed back with --config.
json Manifest(const CLI::App& sub, const std::vector<std::string>& args,
              const json& resolved) {
  json inputs = json::object();
  for (const CLI::Option* opt : sub.get_options()) {
    if (opt->count() == 0 || opt->get_name() == "--help") continue;
    const std::string value = opt->as<std::string>();
    if (std::filesystem::is_regular_file(value)) inputs[value] = FileDigest(value);
  }
  return json{{"tool", "radsum"},
              {"version", kToolVersion},
              {"command", sub.get_name()},
              {"argv", args},
              {"options", RunToml(sub)},
              {"inputs", inputs},
              {"resolved", resolved},
              {"config_digest", ConfigDigest(resolved)}};
}

void WriteManifest(const std::filesystem::path& dir, const json& manifest) {
  WriteFile(dir / "manifest.json", manifest.dump(2) + "\n");
  WriteFile(dir / "run.toml", manifest.at("options").get<std::string>());
}

std::vector<std::string> SplitList(const std::string& s) {
  std::vector<std::string> out;
  std::string cur;
  std::istringstream in(s);
  while (std::getline(in, cur, ',')) {
    cur = Trim(cur);
    if (!cur.empty()) out.push_back(cur);
  }
  return out;
}

json StatsJson(const Dataset& d, const CorpusStats& s) {
  return json{{"dataset", d.name},
              {"reports", s.report_count},
              {"total_tokens", s.total_tokens},
              {"mean_tokens_per_report", s.mean_tokens_per_report},
              {"mean_findings_to_impression_token_ratio",
               s.mean_findings_to_impression_token_ratio}};
}

std::atomic<httplib::Server*> g_server{nullptr};

void StopServer(int) {
  if (auto* s = g_server.load()) s->stop();
}

}  // namespace

int RunCli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Radiology impression summarization workbench", "radsum"};
  app.set_config("--config", "", "TOML/INI file with option values; flags win")
      ->check(CLI::ExistingFile);
  app.require_subcommand(1);
  app.set_version_flag("--version", kToolVersion);

  std::vector<std::string> args(argv + (argc > 0 ? 1 : 0), argv + argc);

  // ingest
  DatasetArgs ingest_data;
  std::string ingest_out;
  auto* ingest = app.add_subcommand("ingest", "Validate a dataset and print corpus statistics");
  ingest_data.Add(ingest);
  ingest->add_option("--out", ingest_out, "Directory for the stats file and manifest");

  // split
  DatasetArgs split_data;
  std::size_t split_train = 0;
  std::size_t split_test = 0;
  std::string split_strata;
  std::uint64_t split_seed = 3407;
  std::string split_out = ".";
  auto* split = app.add_subcommand("split", "Stratified train/test split");
  split_data.Add(split);
  split->add_option("--train", split_train, "Training set size")->required();
  split->add_option("--test", split_test, "Test set size")->required();
  split->add_option("--strata", split_strata, "Comma-separated strata: gender, age");
  split->add_option("--seed", split_seed, "Shuffle seed")->capture_default_str();
  split->add_option("--out", split_out, "Output directory")->capture_default_str();

  // generate
  DatasetArgs gen_data;
  std::string gen_systems;
  std::string gen_out = "generate-out";
  std::string gen_only;
  std::size_t gen_jobs = DefaultJobs();
  auto* generate = app.add_subcommand("generate", "Run the coarse-to-fine pipeline over a dataset");
  gen_data.Add(generate);
  generate->add_option("--systems", gen_systems, "Systems profile (JSON)")
      ->required()
      ->check(CLI::ExistingFile);
  generate->add_option("--system", gen_only, "Only run the named system");
  generate->add_option("--out", gen_out, "Output directory")->capture_default_str();
  generate->add_option("--jobs", gen_jobs, "Parallel workers")->check(CLI::PositiveNumber);

  // evaluate
  DatasetArgs eval_data;
  std::string eval_systems;
  std::string eval_format = "plain";
  std::string eval_out = "evaluate-out";
  std::size_t eval_jobs = DefaultJobs();
  auto* evaluate = app.add_subcommand("evaluate", "Generate and score every system");
  eval_data.Add(evaluate);
  evaluate->add_option("--systems", eval_systems, "Systems profile (JSON)")
      ->required()
      ->check(CLI::ExistingFile);
  evaluate->add_option("--format", eval_format, "Table format: plain, csv, markdown")
      ->check(CLI::IsMember({"plain", "delimited", "csv", "markdown", "md"}))
      ->capture_default_str();
  evaluate->add_option("--out", eval_out, "Artifact directory")->capture_default_str();
  evaluate->add_option("--jobs", eval_jobs, "Parallel workers")->check(CLI::PositiveNumber);

  // perturb
  DatasetArgs perturb_data;
  double perturb_rate = 0.03;
  std::uint64_t perturb_seed = 3407;
  std::vector<double> perturb_weights = {1, 1, 1, 1};
  std::string perturb_out;
  auto* perturb = app.add_subcommand("perturb", "Inject typos into the findings column");
  perturb_data.Add(perturb);
  perturb->add_option("--rate", perturb_rate, "Per-character edit probability")
      ->check(CLI::Range(0.0, 1.0))
      ->capture_default_str();
  perturb->add_option("--seed", perturb_seed, "Noise seed")->capture_default_str();
  perturb->add_option("--weights", perturb_weights,
                      "Weights for substitute,delete,insert,transpose")
      ->expected(4)
      ->delimiter(',');
  perturb->add_option("--out", perturb_out, "Output dataset file")->required();

  // stability
  DatasetArgs stab_data;
  std::string stab_systems;
  std::string stab_system;
  double stab_rate = 0.03;
  std::uint64_t stab_seed = 3407;
  std::string stab_format = "plain";
  std::string stab_out = "stability-out";
  std::size_t stab_jobs = DefaultJobs();
  auto* stability = app.add_subcommand("stability", "Clean vs typo-perturbed paired run");
  stab_data.Add(stability);
  stability->add_option("--systems", stab_systems, "Systems profile (JSON)")
      ->required()
      ->check(CLI::ExistingFile);
  stability->add_option("--system", stab_system, "System to test (default: first)");
  stability->add_option("--rate", stab_rate, "Per-character edit probability")
      ->check(CLI::Range(0.0, 1.0))
      ->capture_default_str();
  stability->add_option("--seed", stab_seed, "Noise seed")->capture_default_str();
  stability->add_option("--format", stab_format, "Table format: plain, csv, markdown")
      ->check(CLI::IsMember({"plain", "delimited", "csv", "markdown", "md"}))
      ->capture_default_str();
  stability->add_option("--out", stab_out, "Artifact directory")->capture_default_str();
  stability->add_option("--jobs", stab_jobs, "Parallel workers")->check(CLI::PositiveNumber);

  // review
  auto* review = app.add_subcommand("review", "Blind review sessions");
  review->require_subcommand(1);
  std::string serve_logs = "review-logs";
  std::string serve_host = "127.0.0.1";
  int serve_port = 8080;
  auto* serve = review->add_subcommand("serve", "Start the review service");
  serve->add_option("--log-dir", serve_logs, "Session journal directory")->capture_default_str();
  serve->add_option("--host", serve_host, "Listen address")->capture_default_str();
  serve->add_option("--port", serve_port, "Listen port")
      ->check(CLI::Range(0, 65535))
      ->capture_default_str();
  std::string agg_log;
  std::string agg_rule = "consensus";
  auto* aggregate = review->add_subcommand("aggregate", "Summarize a session event log");
  aggregate->add_option("--log", agg_log, "Session journal (.jsonl)")
      ->required()
      ->check(CLI::ExistingFile);
  aggregate->add_option("--rule", agg_rule, "Exclusion rule: consensus, unanimous")
      ->check(CLI::IsMember({"consensus", "unanimous"}))
      ->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    if (code == 0) return kExitOk;
    err << "\n" << app.help() << "\n";
    return kExitUsage;
  }

  try {
    if (ingest->parsed()) {
      const Dataset d = ingest_data.Load();
      d.Validate();
      const json stats = StatsJson(d, ComputeDatasetStats(d));
      out << stats.dump(2) << "\n";
      if (!ingest_out.empty()) {
        WriteFile(std::filesystem::path(ingest_out) / "stats.json", stats.dump(2) + "\n");
        WriteManifest(ingest_out, Manifest(*ingest, args, stats));
      }
      return kExitOk;
    }

    if (split->parsed()) {
      const Dataset d = split_data.Load();
      d.Validate();
      const auto strata = SplitList(split_strata);
      auto [train, test] = StratifiedSplit(d, split_train, split_test, strata, split_seed);
      const DatasetFormat fmt = split_data.Format();
      const std::string ext = fmt == DatasetFormat::kRecordLines ? ".jsonl" : ".csv";
      const std::filesystem::path dir = split_out;
      std::filesystem::create_directories(dir);
      WriteDataset(train, dir / ("train" + ext), fmt);
      WriteDataset(test, dir / ("test" + ext), fmt);
      const json resolved{{"dataset", Sha256Hex(SerializeDataset(d, fmt))},
                          {"train", split_train},
                          {"test", split_test},
                          {"strata", strata},
                          {"seed", split_seed}};
      WriteManifest(dir, Manifest(*split, args, resolved));
      out << "train: " << train.reports.size() << " reports -> " << (dir / ("train" + ext)).string()
          << "\ntest: " << test.reports.size() << " reports -> " << (dir / ("test" + ext)).string()
          << "\n";
      return kExitOk;
    }

    if (generate->parsed()) {
      const Dataset d = gen_data.Load();
      SystemsProfile profile = LoadSystemsProfile(gen_systems, d);
      std::vector<SystemUnderTest> systems;
      for (auto& s : profile.systems) {
        if (gen_only.empty() || s.name == gen_only) systems.push_back(s);
      }
      if (systems.empty()) throw Error("no system named '" + gen_only + "' in the profile");
      const std::filesystem::path dir = gen_out;
      std::filesystem::create_directories(dir);
      std::string lines;
      std::size_t failures = 0;
      for (const auto& s : systems) {
        std::vector<json> rows(d.reports.size());
        std::atomic<std::size_t> next{0};
        {
          std::vector<std::jthread> workers;
          const std::size_t n = std::min(gen_jobs, std::max<std::size_t>(1, d.reports.size()));
          for (std::size_t w = 0; w < n; ++w) {
            workers.emplace_back([&] {
              for (std::size_t i = next++; i < d.reports.size(); i = next++) {
                try {
                  json g = GeneratedImpressionToJson(GenerateImpression(
                      d.reports[i], *s.coarse, *s.fine, s.style, profile.options.pipeline));
                  rows[i] = json{{"system", s.name}, {"generated", g}};
                } catch (const std::exception& e) {
                  rows[i] = json{{"system", s.name},
                                 {"report_id", d.reports[i].id},
                                 {"error", e.what()}};
                }
              }
            });
          }
        }
        for (const auto& r : rows) {
          if (r.contains("error")) {
            ++failures;
            err << "warning: " << s.name << " / " << r.at("report_id").get<std::string>() << ": "
                << r.at("error").get<std::string>() << "\n";
          }
          lines += r.dump() + "\n";
        }
      }
      WriteFile(dir / "generations.jsonl", lines);
      json systems_json = json::array();
      for (const auto& s : systems) systems_json.push_back(s.config);
      const json resolved{{"dataset", Sha256Hex(SerializeDataset(d, DatasetFormat::kRecordLines))},
                          {"systems", systems_json},
                          {"templates", profile.options.pipeline.Templates().Digest()}};
      WriteManifest(dir, Manifest(*generate, args, resolved));
      const std::size_t total = systems.size() * d.reports.size();
      out << "generated " << (total - failures) << " of " << total << " impressions -> "
          << (dir / "generations.jsonl").string() << "\n";
      if (failures == total) throw Error("every generation failed");
      return kExitOk;
    }

    if (evaluate->parsed()) {
      const Dataset d = eval_data.Load();
      SystemsProfile profile = LoadSystemsProfile(eval_systems, d);
      profile.options.jobs = eval_jobs;
      const MetricProviders providers{profile.embedding.get(), profile.nli.get()};
      const EvaluationRun run = RunEvaluation(d, profile.systems, providers, profile.options);
      const std::string table = RenderTable(run.table, ParseTableFormat(eval_format));
      out << table;
      const std::filesystem::path dir = eval_out;
      WriteRunArtifacts(dir, Manifest(*evaluate, args, run.resolved_config), run);
      WriteFile(dir / "run.toml", RunToml(*evaluate));
      WriteFile(dir / "table.csv", RenderTable(run.table, TableFormat::kDelimited));
      for (const auto& o : run.outcomes) {
        if (!o.error.empty()) {
          err << "warning: " << o.system << " / " << o.report_id << " (" << o.failed_stage
              << "): " << o.error << "\n";
        }
      }
      return kExitOk;
    }

    if (perturb->parsed()) {
      const Dataset d = perturb_data.Load();
      TypoSpec spec;
      spec.rate = perturb_rate;
      spec.seed = perturb_seed;
      std::copy(perturb_weights.begin(), perturb_weights.end(), spec.weights.begin());
      std::size_t edits = 0;
      const Dataset noisy = PerturbFindings(d, spec, &edits);
      const std::filesystem::path target = perturb_out;
      if (target.has_parent_path()) std::filesystem::create_directories(target.parent_path());
      WriteDataset(noisy, target, perturb_data.Format());
      const json resolved{{"dataset", Sha256Hex(SerializeDataset(d, DatasetFormat::kRecordLines))},
                          {"rate", spec.rate},
                          {"seed", spec.seed},
                          {"weights", spec.weights},
                          {"edit_count", edits}};
      const std::filesystem::path manifest_dir =
          target.has_parent_path() ? target.parent_path() : std::filesystem::path(".");
      const json manifest = Manifest(*perturb, args, resolved);
      WriteFile(manifest_dir / (target.stem().string() + ".manifest.json"), manifest.dump(2) + "\n");
      WriteFile(manifest_dir / (target.stem().string() + ".run.toml"),
                manifest.at("options").get<std::string>());
      out << edits << " edits over " << d.reports.size() << " reports -> " << target.string()
          << "\n";
      return kExitOk;
    }

    if (stability->parsed()) {
      const Dataset d = stab_data.Load();
      SystemsProfile profile = LoadSystemsProfile(stab_systems, d);
      profile.options.jobs = stab_jobs;
      const SystemUnderTest* system = nullptr;
      for (const auto& s : profile.systems) {
        if (stab_system.empty() || s.name == stab_system) {
          system = &s;
          break;
        }
      }
      if (system == nullptr) throw Error("no system named '" + stab_system + "' in the profile");
      TypoSpec spec;
      spec.rate = stab_rate;
      spec.seed = stab_seed;
      const MetricProviders providers{profile.embedding.get(), profile.nli.get()};
      const StabilityRun run = StabilityTest(d, *system, spec, providers, profile.options);
      out << RenderTable(WithDeltaRow(run), ParseTableFormat(stab_format));
      const std::filesystem::path dir = stab_out;
      const json resolved{{"clean", run.clean.resolved_config},
                          {"perturbed", run.perturbed.resolved_config},
                          {"rate", spec.rate},
                          {"seed", spec.seed},
                          {"total_edits", run.total_edits}};
      const json manifest = Manifest(*stability, args, resolved);
      WriteRunArtifacts(dir, manifest, run.clean, "scores.clean.jsonl");
      WriteRunArtifacts(dir, manifest, run.perturbed, "scores.perturbed.jsonl");
      WriteFile(dir / "run.toml", manifest.at("options").get<std::string>());
      WriteFile(dir / "table.csv", RenderTable(WithDeltaRow(run), TableFormat::kDelimited));
      json delta = MetricReportToJson(run.delta);
      WriteFile(dir / "delta.json", delta.dump(2) + "\n");
      return kExitOk;
    }

    if (serve->parsed()) {
      ReviewService service(serve_logs);
      httplib::Server server;
      service.Register(server);
      g_server = &server;
      std::signal(SIGINT, StopServer);
      std::signal(SIGTERM, StopServer);
      const int port = serve_port == 0 ? server.bind_to_any_port(serve_host)
                                       : (server.bind_to_port(serve_host, serve_port) ? serve_port
                                                                                       : -1);
      if (port < 0) throw Error("cannot listen on " + serve_host + ":" + std::to_string(serve_port));
      out << "review service on http://" << serve_host << ":" << port << "/api/v1/ ("
          << service.session_count() << " sessions restored from " << serve_logs << ")"
          << std::endl;
      server.listen_after_bind();
      g_server = nullptr;
      return kExitOk;
    }

    if (aggregate->parsed()) {
      const Session session = ReplaySession(agg_log);
      const RatingSummary summary = Aggregate(session, ParseExclusionRule(agg_rule));
      json j = SummaryToJson(summary);
      j["session_id"] = session.id();
      out << j.dump(2) << "\n";
      return kExitOk;
    }
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitError;
  }
  err << app.help();
  return kExitUsage;
}

}  // namespace radsum
