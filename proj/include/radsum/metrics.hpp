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

#ifndef RADSUM_METRICS_HPP_
#define RADSUM_METRICS_HPP_

#include <Eigen/Dense>

#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "radsum/embedding.hpp"
#include "radsum/error.hpp"
#include "radsum/providers.hpp"
#include "radsum/text.hpp"

namespace radsum {

struct RougeConfig {
  std::set<std::size_t> orders = {1, 2};
  // Weight of recall relative to precision in the LCS F-measure.
  double beta = 1.0;

  void Validate() const;
};

struct BleuConfig {
  enum class Smoothing { kNone, kEpsilon };

  std::size_t max_order = 4;
  // Empty means uniform 1/max_order.
  std::vector<double> weights;
  Smoothing smoothing = Smoothing::kNone;
  double epsilon = 1e-9;

  std::vector<double> ResolvedWeights() const;
  void Validate() const;
};

struct LcsScores {
  double recall = 0.0;
  double precision = 0.0;
  double f = 0.0;
};

template <typename Scalar>
struct BasicBertScores {
  Scalar recall{0};
  Scalar precision{0};
  Scalar f{0};
};

using BertScores = BasicBertScores<double>;

struct MetricReport {
  // ROUGE-N recall by order.
  std::map<std::size_t, double> rouge_n;
  LcsScores rouge_l;
  double bleu = 0.0;
  std::optional<BertScores> bert;
  std::optional<double> factual_consistency;
};

// Clipped n-gram recall of `candidate` against a single reference. Throws
// when the reference has fewer than n tokens.
double RougeN(const TokenSeq& candidate, const TokenSeq& reference, std::size_t n);

// LCS recall (over reference length), precision (over candidate length) and
// the beta-weighted F-measure. Both sequences must be non-empty.
LcsScores RougeL(const TokenSeq& candidate, const TokenSeq& reference, double beta = 1.0);

// Brevity penalty times the weighted geometric mean of clipped n-gram
// precisions for orders 1..max_order.
double Bleu(const TokenSeq& candidate, const TokenSeq& reference, const BleuConfig& cfg = {});

double BrevityPenalty(std::size_t candidate_length, std::size_t reference_length);

// Greedy-matching BERTScore over unit-norm token embeddings, one per row.
// Recall averages, over reference tokens, the best inner product with any
// candidate token; precision is the mirror image; F is their harmonic mean
// (0 when P + R = 0).
template <typename DerivedC, typename DerivedR>
BasicBertScores<typename DerivedC::Scalar> BertScore(const Eigen::MatrixBase<DerivedC>& candidate,
                                                     const Eigen::MatrixBase<DerivedR>& reference) {
  using Scalar = typename DerivedC::Scalar;
  static_assert(std::is_same_v<Scalar, typename DerivedR::Scalar>,
                "candidate and reference embeddings must share a scalar type");
  if (candidate.rows() == 0 || reference.rows() == 0) {
    throw Error("bert score needs at least one candidate and one reference token");
  }
  if (candidate.cols() != reference.cols()) {
    throw Error("embedding dimension mismatch: candidate " + std::to_string(candidate.cols()) +
                " vs reference " + std::to_string(reference.cols()));
  }
  RequireUnitRows(candidate, "candidate");
  RequireUnitRows(reference, "reference");

  // similarity(i, j) = <reference_i, candidate_j>
  const Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic> similarity =
      reference * candidate.transpose();
  BasicBertScores<Scalar> out;
  out.recall = similarity.rowwise().maxCoeff().mean();
  out.precision = similarity.colwise().maxCoeff().mean();
  const Scalar denom = out.precision + out.recall;
  out.f = denom == Scalar(0) ? Scalar(0) : Scalar(2) * out.precision * out.recall / denom;
  return out;
}

inline BertScores BertScore(const EmbeddingMatrix& candidate, const EmbeddingMatrix& reference) {
  return BertScore(candidate.vectors, reference.vectors);
}

// Entailment probability of `summary` (hypothesis) given `findings`
// (premise). The argument order is fixed here so callers cannot swap roles.
double FactualConsistency(std::string_view findings, std::string_view summary,
                          const NliProvider& nli);

struct MetricProviders {
  const EmbeddingProvider* embedding = nullptr;
  const NliProvider* nli = nullptr;
};

struct MetricConfig {
  TokenizerConfig tokenizer;
  RougeConfig rouge;
  BleuConfig bleu;
};

// Scores one generated impression: ROUGE and BLEU against the reference
// impression, BERTScore when an embedding provider is given, and factual
// consistency against the findings when an NLI provider is given.
MetricReport EvaluatePair(std::string_view candidate, std::string_view reference,
                          std::string_view findings, const MetricProviders& providers,
                          const MetricConfig& cfg = {});

}  // namespace radsum

#endif  // RADSUM_METRICS_HPP_
