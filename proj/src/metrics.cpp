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

#include "radsum/metrics.hpp"

#include <cmath>
#include <numeric>

namespace radsum {
namespace {

// Sum over grams of `of` of min(count in `of`, count in `against`).
std::size_t ClippedMatches(const NGramCounts& of, const NGramCounts& against) {
  std::size_t matches = 0;
  for (const auto& [gram, count] : of.counts) {
    matches += std::min(count, against.CountOf(gram));
  }
  return matches;
}

}  // namespace

void RougeConfig::Validate() const {
  if (orders.empty()) throw Error("rouge: at least one n-gram order is required");
  if (*orders.begin() < 1) throw Error("rouge: n-gram orders must be >= 1");
  if (!std::isfinite(beta) || beta <= 0.0) throw Error("rouge: beta must be finite and positive");
}

std::vector<double> BleuConfig::ResolvedWeights() const {
  if (!weights.empty()) return weights;
  return std::vector<double>(max_order, 1.0 / static_cast<double>(max_order));
}

void BleuConfig::Validate() const {
  if (max_order < 1) throw Error("bleu: max order must be >= 1");
  const auto w = ResolvedWeights();
  if (w.size() != max_order) {
    throw Error("bleu: expected " + std::to_string(max_order) + " weights, got " +
                std::to_string(w.size()));
  }
  for (double x : w) {
    if (!(x > 0.0) || !std::isfinite(x)) throw Error("bleu: weights must be positive");
  }
  const double sum = std::accumulate(w.begin(), w.end(), 0.0);
  if (std::abs(sum - 1.0) > 1e-9) throw Error("bleu: weights must sum to 1");
  if (smoothing == Smoothing::kEpsilon && !(epsilon > 0.0 && epsilon <= 1.0)) {
    throw Error("bleu: epsilon must be in (0, 1]");
  }
}

double RougeN(const TokenSeq& candidate, const TokenSeq& reference, std::size_t n) {
  if (n < 1) throw Error("rouge-n: order must be >= 1");
  if (reference.size() < n) {
    throw Error("reference too short for order " + std::to_string(n));
  }
  const NGramCounts ref = NGrams(reference, n);
  const NGramCounts cand = NGrams(candidate, n);
  return static_cast<double>(ClippedMatches(ref, cand)) / static_cast<double>(ref.Total());
}

LcsScores RougeL(const TokenSeq& candidate, const TokenSeq& reference, double beta) {
  if (candidate.empty() || reference.empty()) {
    throw Error("rouge-l: candidate and reference must be non-empty");
  }
  if (!std::isfinite(beta) || beta <= 0.0) throw Error("rouge-l: beta must be finite and positive");
  const auto lcs = static_cast<double>(LcsLength(candidate, reference));
  LcsScores s;
  if (lcs == 0.0) return s;
  s.recall = lcs / static_cast<double>(reference.size());
  s.precision = lcs / static_cast<double>(candidate.size());
  const double b2 = beta * beta;
  s.f = (1.0 + b2) * s.recall * s.precision / (s.recall + b2 * s.precision);
  return s;
}

double BrevityPenalty(std::size_t candidate_length, std::size_t reference_length) {
  if (candidate_length == 0) throw Error("brevity penalty undefined for empty candidate");
  if (candidate_length > reference_length) return 1.0;
  return std::exp(1.0 - static_cast<double>(reference_length) /
                            static_cast<double>(candidate_length));
}

double Bleu(const TokenSeq& candidate, const TokenSeq& reference, const BleuConfig& cfg) {
  cfg.Validate();
  if (candidate.empty()) throw Error("bleu: candidate must be non-empty");
  const auto weights = cfg.ResolvedWeights();
  double log_sum = 0.0;
  for (std::size_t m = 1; m <= cfg.max_order; ++m) {
    const NGramCounts cand = NGrams(candidate, m);
    const NGramCounts ref = NGrams(reference, m);
    const std::size_t total = cand.Total();
    double p = total == 0 ? 0.0
                          : static_cast<double>(ClippedMatches(cand, ref)) /
                                static_cast<double>(total);
    if (p == 0.0) {
      if (cfg.smoothing == BleuConfig::Smoothing::kNone) return 0.0;
      p = cfg.epsilon;
    }
    log_sum += weights[m - 1] * std::log(p);
  }
  return BrevityPenalty(candidate.size(), reference.size()) * std::exp(log_sum);
}

double FactualConsistency(std::string_view findings, std::string_view summary,
                          const NliProvider& nli) {
  if (Trim(findings).empty() || Trim(summary).empty()) {
    throw Error("factual consistency: findings and summary must be non-empty");
  }
  try {
    return Entail(/*premise=*/findings, /*hypothesis=*/summary, nli);
  } catch (...) {
    RethrowWithContext("factual consistency via " + nli.id());
  }
}

MetricReport EvaluatePair(std::string_view candidate, std::string_view reference,
                          std::string_view findings, const MetricProviders& providers,
                          const MetricConfig& cfg) {
  const TokenSeq cand = Tokenize(candidate, cfg.tokenizer);
  const TokenSeq ref = Tokenize(reference, cfg.tokenizer);
  if (cand.empty()) throw Error("candidate has no tokens");
  if (ref.empty()) throw Error("reference has no tokens");

  MetricReport report;
  for (std::size_t n : cfg.rouge.orders) {
    try {
      report.rouge_n[n] = RougeN(cand, ref, n);
    } catch (...) {
      RethrowWithContext("rouge-" + std::to_string(n));
    }
  }
  try {
    report.rouge_l = RougeL(cand, ref, cfg.rouge.beta);
  } catch (...) {
    RethrowWithContext("rouge-l");
  }
  try {
    report.bleu = Bleu(cand, ref, cfg.bleu);
  } catch (...) {
    RethrowWithContext("bleu");
  }
  if (providers.embedding != nullptr) {
    try {
      const EmbeddingMatrix c = Embed(cand, *providers.embedding);
      const EmbeddingMatrix r = Embed(ref, *providers.embedding);
      report.bert = BertScore(c, r);
    } catch (...) {
      RethrowWithContext("bertscore");
    }
  }
  if (providers.nli != nullptr) {
    try {
      report.factual_consistency = FactualConsistency(findings, candidate, *providers.nli);
    } catch (...) {
      RethrowWithContext("factual-consistency");
    }
  }
  return report;
}

}  // namespace radsum
