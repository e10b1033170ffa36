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

#include "umiclab/baselines.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>

#include "umiclab/errors.hpp"
#include "umiclab/logging.hpp"

namespace umiclab {

NGramProfile::NGramProfile(const Tokens& tokens, int max_order)
    : counts_(static_cast<std::size_t>(std::max(max_order, 1))), length_(tokens.size()) {
  for (int n = 1; n <= max_order; ++n) {
    auto& table = counts_[static_cast<std::size_t>(n - 1)];
    for (std::size_t i = 0; i + static_cast<std::size_t>(n) <= tokens.size(); ++i) {
      ++table[Tokens(tokens.begin() + static_cast<std::ptrdiff_t>(i),
                     tokens.begin() + static_cast<std::ptrdiff_t>(i) + n)];
    }
  }
}

int NGramProfile::count(const Tokens& ngram) const {
  if (ngram.empty() || ngram.size() > counts_.size()) return 0;
  const auto& table = counts_[ngram.size() - 1];
  const auto it = table.find(ngram);
  return it == table.end() ? 0 : it->second;
}

int NGramProfile::total(int order) const {
  return std::max(0, static_cast<int>(length_) - order + 1);
}

double bleu(const Tokens& candidate, const std::vector<Tokens>& references, int max_n) {
  if (references.empty()) throw InvariantError("BLEU needs at least one reference");
  if (max_n < 1 || max_n > 4) throw RangeError("BLEU order must be in 1..4");
  if (candidate.empty()) {
    warn("bleu-empty", "empty candidate scores BLEU 0");
    return 0.0;
  }
  const NGramProfile cand(candidate, max_n);
  std::vector<NGramProfile> refs;
  refs.reserve(references.size());
  for (const auto& r : references) refs.emplace_back(r, max_n);

  double log_sum = 0.0;
  int orders = 0;
  for (int n = 1; n <= max_n; ++n) {
    const int total = cand.total(n);
    if (total == 0) continue;
    int clipped = 0;
    for (const auto& [gram, count] : cand.counts(n)) {
      int max_ref = 0;
      for (const auto& r : refs) max_ref = std::max(max_ref, r.count(gram));
      clipped += std::min(count, max_ref);
    }
    const double numerator = clipped > 0 ? clipped : kBleuEpsilon;
    log_sum += std::log(numerator / total);
    ++orders;
  }
  const double precision = std::exp(log_sum / orders);

  const auto c = static_cast<double>(candidate.size());
  double closest = static_cast<double>(references.front().size());
  for (const auto& r : references) {
    const auto len = static_cast<double>(r.size());
    const double diff = std::abs(len - c);
    const double best = std::abs(closest - c);
    if (diff < best || (diff == best && len < closest)) closest = len;
  }
  const double brevity = c > closest ? 1.0 : std::exp(1.0 - closest / c);
  return precision * brevity;
}

std::size_t lcs_length(const Tokens& a, const Tokens& b) {
  std::vector<std::size_t> prev(b.size() + 1, 0), cur(b.size() + 1, 0);
  for (std::size_t i = 1; i <= a.size(); ++i) {
    for (std::size_t j = 1; j <= b.size(); ++j) {
      cur[j] = a[i - 1] == b[j - 1] ? prev[j - 1] + 1 : std::max(prev[j], cur[j - 1]);
    }
    std::swap(prev, cur);
  }
  return prev[b.size()];
}

double rouge_l(const Tokens& candidate, const std::vector<Tokens>& references, double beta) {
  if (references.empty()) throw InvariantError("ROUGE-L needs at least one reference");
  double best = 0.0;
  for (const auto& ref : references) {
    const auto lcs = static_cast<double>(lcs_length(candidate, ref));
    if (lcs == 0.0) continue;
    const double precision = lcs / static_cast<double>(candidate.size());
    const double recall = lcs / static_cast<double>(ref.size());
    const double b2 = beta * beta;
    best = std::max(best, (1.0 + b2) * precision * recall / (recall + b2 * precision));
  }
  return best;
}

CiderCorpusStats::CiderCorpusStats(const std::vector<std::vector<Tokens>>& references_per_image)
    : corpus_size_(references_per_image.size()) {
  for (const auto& refs : references_per_image) {
    std::set<Tokens> seen;
    for (const auto& r : refs) {
      const NGramProfile profile(r, kCiderMaxOrder);
      for (int n = 1; n <= kCiderMaxOrder; ++n) {
        for (const auto& [gram, count] : profile.counts(n)) seen.insert(gram);
      }
    }
    for (const auto& gram : seen) ++df_[gram];
  }
}

int CiderCorpusStats::document_frequency(const Tokens& ngram) const {
  const auto it = df_.find(ngram);
  return it == df_.end() ? 0 : it->second;
}

double CiderCorpusStats::idf(const Tokens& ngram) const {
  return std::log(static_cast<double>(corpus_size_) /
                  std::max(1.0, static_cast<double>(document_frequency(ngram))));
}

namespace {

using TfIdf = std::map<Tokens, double>;

TfIdf tfidf(const CiderCorpusStats& stats, const NGramProfile& profile, int order) {
  TfIdf v;
  for (const auto& [gram, count] : profile.counts(order)) v[gram] = count * stats.idf(gram);
  return v;
}

double cosine(const TfIdf& a, const TfIdf& b) {
  double dot = 0.0, na = 0.0, nb = 0.0;
  for (const auto& [g, w] : a) {
    na += w * w;
    if (const auto it = b.find(g); it != b.end()) dot += w * it->second;
  }
  for (const auto& [g, w] : b) nb += w * w;
  if (na == 0.0 || nb == 0.0) return 0.0;
  return dot / (std::sqrt(na) * std::sqrt(nb));
}

}  // namespace

double cider(const CiderCorpusStats& stats, const Tokens& candidate,
             const std::vector<Tokens>& references) {
  if (references.empty()) throw InvariantError("CIDEr needs at least one reference");
  const NGramProfile cand(candidate, kCiderMaxOrder);
  std::vector<NGramProfile> refs;
  for (const auto& r : references) refs.emplace_back(r, kCiderMaxOrder);
  double sum = 0.0;
  for (int n = 1; n <= kCiderMaxOrder; ++n) {
    const TfIdf vc = tfidf(stats, cand, n);
    double order_sum = 0.0;
    for (const auto& r : refs) order_sum += cosine(vc, tfidf(stats, r, n));
    sum += 10.0 * order_sum / static_cast<double>(refs.size());
  }
  return sum / kCiderMaxOrder;
}

std::vector<double> cider(const std::vector<Tokens>& candidates,
                          const std::vector<std::vector<Tokens>>& references) {
  if (candidates.size() != references.size()) {
    throw InvariantError("CIDEr needs one reference list per candidate");
  }
  if (references.size() < 2) {
    throw InvariantError("CIDEr needs a reference corpus of at least two images");
  }
  const CiderCorpusStats stats(references);
  std::vector<double> out;
  out.reserve(candidates.size());
  for (std::size_t i = 0; i < candidates.size(); ++i) {
    out.push_back(cider(stats, candidates[i], references[i]));
  }
  return out;
}

double aggregate_over_refs(std::span<const double> per_ref_scores, Aggregation mode) {
  if (per_ref_scores.empty()) throw InvariantError("cannot aggregate an empty score list");
  if (mode == Aggregation::kMax) {
    return *std::max_element(per_ref_scores.begin(), per_ref_scores.end());
  }
  return std::accumulate(per_ref_scores.begin(), per_ref_scores.end(), 0.0) /
         static_cast<double>(per_ref_scores.size());
}

std::string_view to_string(BaselineMetric metric) {
  switch (metric) {
    case BaselineMetric::kBleu1: return "bleu1";
    case BaselineMetric::kBleu4: return "bleu4";
    case BaselineMetric::kRougeL: return "rouge_l";
    default: return "cider";
  }
}

BaselineMetric baseline_metric_from_string(std::string_view name) {
  for (auto m : {BaselineMetric::kBleu1, BaselineMetric::kBleu4, BaselineMetric::kRougeL,
                 BaselineMetric::kCider}) {
    if (to_string(m) == name) return m;
  }
  throw Error("unknown baseline metric '" + std::string(name) + "'");
}

double score_against_references(BaselineMetric metric, const Tokens& candidate,
                                const std::vector<Tokens>& references,
                                const CiderCorpusStats* stats, Aggregation mode,
                                std::size_t max_refs) {
  if (references.empty()) throw InvariantError("reference-based metric needs references");
  const std::size_t used = std::min(max_refs, references.size());
  std::vector<double> per_ref;
  per_ref.reserve(used);
  for (std::size_t r = 0; r < used; ++r) {
    const std::vector<Tokens> single{references[r]};
    switch (metric) {
      case BaselineMetric::kBleu1: per_ref.push_back(bleu(candidate, single, 1)); break;
      case BaselineMetric::kBleu4: per_ref.push_back(bleu(candidate, single, 4)); break;
      case BaselineMetric::kRougeL: per_ref.push_back(rouge_l(candidate, single)); break;
      case BaselineMetric::kCider:
        if (!stats) throw InvariantError("CIDEr scoring needs corpus statistics");
        per_ref.push_back(cider(*stats, candidate, single));
        break;
    }
  }
  return aggregate_over_refs(per_ref, mode);
}

}  // namespace umiclab
