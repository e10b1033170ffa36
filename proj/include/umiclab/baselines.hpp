//
// Copyright 2026 The UMICLab Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
//

#pragma once

#include <map>
#include <span>
#include <string>
#include <vector>

#include "umiclab/corpus.hpp"

namespace umiclab {

using Tokens = std::vector<std::string>;

// Counts of all n-grams of orders 1..max_order.
class NGramProfile {
 public:
  NGramProfile(const Tokens& tokens, int max_order = 4);

  const std::map<Tokens, int>& counts(int order) const { return counts_.at(static_cast<std::size_t>(order - 1)); }
  int count(const Tokens& ngram) const;
  // Number of n-gram positions of this order: max(0, T - n + 1).
  int total(int order) const;
  std::size_t length() const { return length_; }
  int max_order() const { return static_cast<int>(counts_.size()); }

 private:
  std::vector<std::map<Tokens, int>> counts_;
  std::size_t length_;
};

// Added to zero clipped-match counts so one missing order does not zero
// the geometric mean.
inline constexpr double kBleuEpsilon = 1e-9;

// Sentence-level BLEU: geometric mean of clipped n-gram precisions for
// orders 1..max_n times the brevity penalty against the reference closest
// in length (shorter wins ties). Orders the candidate is too short to
// contain are left out of the mean. Empty candidates score 0 with a
// warning.
double bleu(const Tokens& candidate, const std::vector<Tokens>& references, int max_n);

// Max over references of the LCS F-measure
// (1 + beta^2) P R / (R + beta^2 P).
inline constexpr double kRougeBeta = 1.2;
double rouge_l(const Tokens& candidate, const std::vector<Tokens>& references,
               double beta = kRougeBeta);

std::size_t lcs_length(const Tokens& a, const Tokens& b);

// Document frequencies over a reference corpus: one "document" per image
// (the union of that image's reference n-grams).
class CiderCorpusStats {
 public:
  explicit CiderCorpusStats(const std::vector<std::vector<Tokens>>& references_per_image);

  std::size_t corpus_size() const { return corpus_size_; }
  int document_frequency(const Tokens& ngram) const;
  // log(N / max(1, df)).
  double idf(const Tokens& ngram) const;

 private:
  std::size_t corpus_size_;
  std::map<Tokens, int> df_;
};

inline constexpr int kCiderMaxOrder = 4;

// Base CIDEr: mean over n = 1..4 of 10 x the average cosine similarity
// between TF-IDF vectors of the candidate and each reference.
double cider(const CiderCorpusStats& stats, const Tokens& candidate,
             const std::vector<Tokens>& references);

// Scores one candidate per image against that image's references. Throws
// InvariantError for fewer than two images.
std::vector<double> cider(const std::vector<Tokens>& candidates,
                          const std::vector<std::vector<Tokens>>& references);

enum class Aggregation { kAverage, kMax };

double aggregate_over_refs(std::span<const double> per_ref_scores, Aggregation mode);

enum class BaselineMetric { kBleu1, kBleu4, kRougeL, kCider };

std::string_view to_string(BaselineMetric metric);
BaselineMetric baseline_metric_from_string(std::string_view name);

inline constexpr int kDefaultReferenceCount = 5;

// Scores a candidate against each of the first `max_refs` references
// separately and aggregates (average by default). CIDEr needs corpus
// statistics and is handled by `stats`.
double score_against_references(BaselineMetric metric, const Tokens& candidate,
                                const std::vector<Tokens>& references,
                                const CiderCorpusStats* stats = nullptr,
                                Aggregation mode = Aggregation::kAverage,
                                std::size_t max_refs = kDefaultReferenceCount);

}  // namespace umiclab
