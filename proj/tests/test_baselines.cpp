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

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <random>

#include "umiclab/baselines.hpp"
#include "umiclab/errors.hpp"
#include "umiclab/random.hpp"

using namespace umiclab;

namespace {

Tokens T(const std::string& s) { return tokenize(s); }

// Longest common subsequence by trying every subsequence of `a`.
std::size_t brute_lcs(const Tokens& a, const Tokens& b) {
  std::size_t best = 0;
  const std::size_t n = a.size();
  for (std::uint32_t mask = 0; mask < (1u << n); ++mask) {
    std::size_t pos = 0, len = 0;
    bool ok = true;
    for (std::size_t i = 0; i < n && ok; ++i) {
      if (!(mask & (1u << i))) continue;
      while (pos < b.size() && b[pos] != a[i]) ++pos;
      if (pos == b.size()) ok = false;
      else {
        ++pos;
        ++len;
      }
    }
    if (ok) best = std::max(best, len);
  }
  return best;
}

Tokens random_tokens(Rng& rng, std::size_t max_len, int alphabet) {
  std::uniform_int_distribution<std::size_t> len(1, max_len);
  std::uniform_int_distribution<int> sym(0, alphabet - 1);
  Tokens t(len(rng));
  for (auto& w : t) w = std::string(1, static_cast<char>('a' + sym(rng)));
  return t;
}

}  // namespace

TEST(NGramProfile, CountsEveryOrder) {
  const NGramProfile p(T("a b a b"), 3);
  EXPECT_EQ(p.count({"a"}), 2);
  EXPECT_EQ(p.count({"a", "b"}), 2);
  EXPECT_EQ(p.count({"b", "a"}), 1);
  EXPECT_EQ(p.count({"a", "b", "a"}), 1);
  EXPECT_EQ(p.count({"a", "b", "a", "b"}), 0);
  EXPECT_EQ(p.total(2), 3);
  EXPECT_EQ(p.total(3), 2);
}

TEST(Bleu, HandComputedBrevityPenalty) {
  const double expected = std::exp(1.0 - 4.0 / 3.0);
  EXPECT_NEAR(bleu(T("the cat sat"), {T("the cat sat down")}, 1), expected, 1e-12);
  EXPECT_NEAR(bleu(T("the cat sat"), {T("the cat sat down")}, 1), 0.7165, 1e-3);
  // The candidate has no 4-grams, so that order is left out.
  EXPECT_NEAR(bleu(T("the cat sat"), {T("the cat sat down")}, 4), expected, 1e-12);
}

TEST(Bleu, ClipsRepeatedWords) {
  // "the" x4 against one "the": unigram precision 1/4, no brevity penalty.
  EXPECT_NEAR(bleu(T("the the the the"), {T("the cat on mat")}, 1), 0.25, 1e-12);
}

TEST(Bleu, ClosestReferenceLengthWithShorterOnTies) {
  // Lengths 2 and 4 are both 1 away from 3; the shorter one means no penalty.
  EXPECT_NEAR(bleu(T("a b c"), {T("a b"), T("a b c d")}, 1), 1.0, 1e-12);
  EXPECT_NEAR(bleu(T("a b c"), {T("a b c d e"), T("a b c d")}, 1), std::exp(1.0 - 4.0 / 3.0), 1e-12);
}

TEST(Bleu, ZeroMatchesAreSmoothedNotFatal) {
  const double s = bleu(T("a b c d"), {T("a x b y")}, 4);
  EXPECT_GT(s, 0.0);
  EXPECT_LT(s, 1e-3);
  EXPECT_NEAR(bleu(T("q r s"), {T("a b c")}, 1), 1e-9 / 3, 1e-20);
}

TEST(Bleu, IdentityAndSelfInclusionScoreOne) {
  Rng rng(4);
  for (int i = 0; i < 200; ++i) {
    const Tokens c = random_tokens(rng, 12, 5);
    std::vector<Tokens> refs{random_tokens(rng, 12, 5), random_tokens(rng, 12, 5)};
    EXPECT_EQ(bleu(c, {c}, 4), 1.0);
    refs.push_back(c);
    EXPECT_EQ(bleu(c, refs, 4), 1.0);
    EXPECT_EQ(bleu(c, refs, 1), 1.0);
  }
}

TEST(Bleu, EmptyInputs) {
  EXPECT_EQ(bleu({}, {T("a")}, 4), 0.0);
  EXPECT_THROW(bleu(T("a"), {}, 4), InvariantError);
}

TEST(RougeL, HandExample) {
  EXPECT_EQ(lcs_length(T("a b c d"), T("a c b d")), 3u);
  EXPECT_NEAR(rouge_l(T("a b c d"), {T("a c b d")}), 0.75, 1e-12);
}

TEST(RougeL, FMeasureWeightsRecall) {
  // P = 1, R = 1/2: F = (1 + b^2) P R / (R + b^2 P).
  const double b2 = 1.2 * 1.2;
  EXPECT_NEAR(rouge_l(T("a b"), {T("a b c d")}), (1 + b2) * 0.5 / (0.5 + b2), 1e-12);
  EXPECT_EQ(rouge_l(T("x y"), {T("a b")}), 0.0);
}

TEST(RougeL, MatchesBruteForceLcs) {
  Rng rng(5);
  for (int i = 0; i < 500; ++i) {
    const Tokens a = random_tokens(rng, 12, 4);
    const Tokens b = random_tokens(rng, 12, 4);
    const std::size_t lcs = brute_lcs(a, b);
    ASSERT_EQ(lcs_length(a, b), lcs);
    const double p = double(lcs) / a.size(), r = double(lcs) / b.size();
    const double expected = lcs == 0 ? 0.0 : (1 + 1.44) * p * r / (r + 1.44 * p);
    EXPECT_NEAR(rouge_l(a, {b}), expected, 1e-12);
  }
}

TEST(RougeL, IdentityScoresOne) {
  Rng rng(6);
  for (int i = 0; i < 100; ++i) {
    const Tokens c = random_tokens(rng, 12, 5);
    EXPECT_EQ(rouge_l(c, {random_tokens(rng, 12, 5), c}), 1.0);
  }
}

TEST(Cider, IdenticalCandidateInTwoImageCorpusScoresTen) {
  const std::vector<std::vector<Tokens>> refs{{T("a man rides a horse")}, {T("two dogs play in snow")}};
  const auto s = cider({T("a man rides a horse"), T("cats sleep on sofas today")}, refs);
  EXPECT_NEAR(s[0], 10.0, 1e-9);
  EXPECT_EQ(s[1], 0.0);
}

TEST(Cider, HandBuiltTfIdf) {
  // Image 0 refs "x y", image 1 refs "x z". idf(x) = 0, idf(y) = log 2.
  // Candidate "x y" for image 0: unigram vectors c = (0, log2), r = (0, log2)
  // -> cosine 1. Bigram "x y": idf log 2 on both -> cosine 1. Orders 3, 4
  // are empty -> 0. Score = 10 * (1 + 1 + 0 + 0) / 4.
  const CiderCorpusStats stats({{T("x y")}, {T("x z")}});
  EXPECT_EQ(stats.document_frequency({"x"}), 2);
  EXPECT_NEAR(stats.idf({"y"}), std::log(2.0), 1e-15);
  EXPECT_NEAR(stats.idf({"unseen"}), std::log(2.0), 1e-15);
  EXPECT_NEAR(cider(stats, T("x y"), {T("x y")}), 5.0, 1e-12);
}

TEST(Cider, NonnegativeAndZeroWithoutOverlap) {
  Rng rng(7);
  std::vector<std::vector<Tokens>> refs;
  std::vector<Tokens> cands;
  for (int i = 0; i < 30; ++i) {
    refs.push_back({random_tokens(rng, 10, 8), random_tokens(rng, 10, 8)});
    cands.push_back(random_tokens(rng, 10, 8));
  }
  for (double s : cider(cands, refs)) EXPECT_GE(s, 0.0);
  const CiderCorpusStats stats(refs);
  EXPECT_EQ(cider(stats, T("zz yy"), refs[0]), 0.0);
}

TEST(Cider, DuplicatingAReferenceLeavesTheScoreUnchanged) {
  const CiderCorpusStats stats({{T("a man rides a horse")}, {T("a dog")}, {T("a horse eats")}});
  const double one = cider(stats, T("a man on a horse"), {T("a man rides a horse")});
  const double two = cider(stats, T("a man on a horse"),
                           {T("a man rides a horse"), T("a man rides a horse")});
  EXPECT_NEAR(one, two, 1e-12);
}

TEST(Cider, SingleImageCorpusIsRejected) {
  EXPECT_THROW(cider({T("a")}, {{T("a")}}), InvariantError);
}

TEST(Baselines, ReferenceOrderDoesNotMatter) {
  Rng rng(8);
  std::vector<std::vector<Tokens>> corpus;
  for (int i = 0; i < 10; ++i) corpus.push_back({random_tokens(rng, 8, 6), random_tokens(rng, 8, 6)});
  const CiderCorpusStats stats(corpus);
  for (int i = 0; i < 100; ++i) {
    const Tokens c = random_tokens(rng, 10, 6);
    std::vector<Tokens> refs;
    for (int k = 0; k < 5; ++k) refs.push_back(random_tokens(rng, 10, 6));
    std::vector<Tokens> shuffled = refs;
    std::shuffle(shuffled.begin(), shuffled.end(), rng);
    EXPECT_EQ(bleu(c, refs, 4), bleu(c, shuffled, 4));
    EXPECT_EQ(rouge_l(c, refs), rouge_l(c, shuffled));
    EXPECT_NEAR(cider(stats, c, refs), cider(stats, c, shuffled), 1e-12);
  }
}

TEST(Aggregation, Examples) {
  const std::vector<double> s{0.2, 0.4, 0.6};
  EXPECT_NEAR(aggregate_over_refs(s, Aggregation::kAverage), 0.4, 1e-15);
  EXPECT_EQ(aggregate_over_refs(s, Aggregation::kMax), 0.6);
  const std::vector<double> one{0.3};
  EXPECT_EQ(aggregate_over_refs(one, Aggregation::kAverage), 0.3);
  EXPECT_EQ(aggregate_over_refs(one, Aggregation::kMax), 0.3);
  EXPECT_THROW(aggregate_over_refs({}, Aggregation::kMax), InvariantError);
}

TEST(Aggregation, ScoreAgainstReferencesAveragesPerReferenceScores) {
  Rng rng(9);
  for (int i = 0; i < 50; ++i) {
    const Tokens c = random_tokens(rng, 10, 5);
    std::vector<Tokens> refs;
    for (int k = 0; k < 7; ++k) refs.push_back(random_tokens(rng, 10, 5));
    double sum = 0.0, best = 0.0;
    for (int k = 0; k < 5; ++k) {
      const double s = bleu(c, {refs[static_cast<std::size_t>(k)]}, 4);
      sum += s;
      best = std::max(best, s);
    }
    EXPECT_EQ(score_against_references(BaselineMetric::kBleu4, c, refs), sum / 5);
    EXPECT_EQ(score_against_references(BaselineMetric::kBleu4, c, refs, nullptr, Aggregation::kMax), best);
  }
  EXPECT_THROW(score_against_references(BaselineMetric::kCider, T("a"), {T("a")}), InvariantError);
}

TEST(BaselineMetricNames, RoundTrip) {
  for (auto m : {BaselineMetric::kBleu1, BaselineMetric::kBleu4, BaselineMetric::kRougeL, BaselineMetric::kCider}) {
    EXPECT_EQ(baseline_metric_from_string(to_string(m)), m);
  }
  EXPECT_THROW(baseline_metric_from_string("meteor"), Error);
}
