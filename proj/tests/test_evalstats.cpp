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
#include <numeric>
#include <random>
#include <set>

#include "umiclab/evalstats.hpp"
#include "umiclab/random.hpp"

using namespace umiclab;

namespace {

struct BruteTau {
  double tau_b;
  double tau_c;
  long c = 0, d = 0;
};

BruteTau brute_tau(const std::vector<double>& x, const std::vector<double>& y) {
  long c = 0, d = 0, tx = 0, ty = 0;
  const std::size_t n = x.size();
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      const double sx = x[i] - x[j], sy = y[i] - y[j];
      if (sx == 0 && sy == 0) continue;
      if (sx == 0) ++tx;
      else if (sy == 0) ++ty;
      else if ((sx > 0) == (sy > 0)) ++c;
      else ++d;
    }
  }
  const double m = static_cast<double>(std::min(std::set<double>(x.begin(), x.end()).size(),
                                                std::set<double>(y.begin(), y.end()).size()));
  BruteTau r;
  r.c = c;
  r.d = d;
  r.tau_b = (c - d) / std::sqrt(double(c + d + tx) * double(c + d + ty));
  r.tau_c = 2 * m * (c - d) / (double(n) * double(n) * (m - 1));
  return r;
}

std::vector<double> random_values(Rng& rng, std::size_t n, int levels) {
  std::uniform_int_distribution<int> u(0, levels - 1);
  std::vector<double> v(n);
  for (auto& x : v) x = u(rng);
  return v;
}

TripletRecord triplet(Choice c) {
  TripletRecord t;
  t.image_id = "i";
  t.candidate_b = make_caption("b", "i", "a");
  t.candidate_c = make_caption("c", "i", "b");
  t.human_choice = c;
  return t;
}

}  // namespace

TEST(Kendall, PerfectAndReversed) {
  const std::vector<double> x{1, 2, 3}, rev{3, 2, 1};
  EXPECT_EQ(kendall_tau_b(x, x).coefficient, 1.0);
  EXPECT_EQ(kendall_tau_b(x, rev).coefficient, -1.0);
  EXPECT_EQ(kendall_tau_c(x, rev).coefficient, -1.0);
}

TEST(Kendall, TiedExampleAgainstPairEnumeration) {
  const std::vector<double> x{1, 2, 2, 3}, y{1, 3, 2, 4};
  // Pairs: (0,1)C (0,2)C (0,3)C (1,2) tie in x (1,3)C (2,3)C: C=5, D=0, Tx=1.
  EXPECT_NEAR(kendall_tau_b(x, y).coefficient, 5.0 / std::sqrt(6.0 * 5.0), 1e-15);
  const auto pc = count_pairs(x, y);
  EXPECT_EQ(pc.concordant, 5);
  EXPECT_EQ(pc.discordant, 0);
  EXPECT_EQ(pc.tied_x, 1);
  EXPECT_EQ(pc.tied_y, 0);
}

TEST(Kendall, TauCOnTwoBalancedGroupsIsOne) {
  const std::vector<double> x{1, 1, 2, 2};
  EXPECT_DOUBLE_EQ(kendall_tau_c(x, x).coefficient, 1.0);
}

TEST(Kendall, MatchesBruteForceOracle) {
  Rng rng(11);
  std::uniform_int_distribution<std::size_t> len(2, 200);
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t n = len(rng);
    const int levels = trial % 2 ? 5 : 1000000;
    auto x = random_values(rng, n, levels);
    auto y = random_values(rng, n, levels);
    const auto pc = count_pairs(x, y);
    const auto oracle = brute_tau(x, y);
    EXPECT_EQ(pc.concordant, oracle.c);
    EXPECT_EQ(pc.discordant, oracle.d);
    try {
      EXPECT_NEAR(kendall_tau_b(x, y).coefficient, oracle.tau_b, 1e-12);
      EXPECT_NEAR(kendall_tau_c(x, y).coefficient, oracle.tau_c, 1e-12);
    } catch (const UndefinedStatisticError&) {
      // Only possible for a constant input.
      EXPECT_TRUE(std::set<double>(x.begin(), x.end()).size() == 1 ||
                  std::set<double>(y.begin(), y.end()).size() == 1);
    }
  }
}

TEST(Kendall, RankStatisticsIgnoreMonotoneTransforms) {
  Rng rng(12);
  auto x = random_values(rng, 100, 7);
  auto y = random_values(rng, 100, 7);
  std::vector<double> tx(x.size());
  std::transform(x.begin(), x.end(), tx.begin(), [](double v) { return std::exp(v) - 3; });
  EXPECT_NEAR(kendall_tau_b(tx, y).coefficient, kendall_tau_b(x, y).coefficient, 1e-15);
  EXPECT_NEAR(kendall_tau_c(tx, y).coefficient, kendall_tau_c(x, y).coefficient, 1e-15);
  std::vector<double> neg(y.size());
  std::transform(y.begin(), y.end(), neg.begin(), [](double v) { return -v; });
  EXPECT_NEAR(kendall_tau_c(x, neg).coefficient, -kendall_tau_c(x, y).coefficient, 1e-15);
  EXPECT_NEAR(kendall_tau_b(x, neg).coefficient, -kendall_tau_b(x, y).coefficient, 1e-15);
}

TEST(Kendall, SelfCorrelationIsOneForTauB) {
  Rng rng(13);
  const auto x = random_values(rng, 300, 4);
  EXPECT_EQ(kendall_tau_b(x, x).coefficient, 1.0);
}

TEST(Kendall, TauCApproachesTauBWithoutTies) {
  Rng rng(14);
  std::vector<double> x(500), y(500);
  std::iota(x.begin(), x.end(), 0.0);
  std::iota(y.begin(), y.end(), 0.0);
  std::shuffle(y.begin(), y.end(), rng);
  const double b = kendall_tau_b(x, y).coefficient;
  const double c = kendall_tau_c(x, y).coefficient;
  // Without ties m = n and both reduce to (C - D) / (n(n - 1)/2).
  EXPECT_NEAR(c, b, 1e-12);
}

TEST(Kendall, DegenerateInputsThrow) {
  const std::vector<double> a{1, 2}, b{1, 2, 3}, k{4, 4, 4};
  EXPECT_THROW(kendall_tau_b(a, b), InvariantError);
  EXPECT_THROW(kendall_tau_b(k, k), UndefinedStatisticError);
  EXPECT_THROW(kendall_tau_c(k, b), UndefinedStatisticError);
  const std::vector<double> one{1};
  EXPECT_THROW(kendall_tau_b(one, one), InvariantError);
  const std::vector<double> nan{1, std::nan("")};
  EXPECT_THROW(kendall_tau_b(nan, a), InvariantError);
}

TEST(Significance, ExactTailForPerfectOrder) {
  std::vector<double> x(10);
  std::iota(x.begin(), x.end(), 0.0);
  const auto r = kendall_tau_b(x, x);
  EXPECT_EQ(r.method, SignificanceMethod::kExact);
  EXPECT_NEAR(r.p_value, 2.0 / 3628800.0, 1e-18);
}

TEST(Significance, TwoItemsAreNeverSignificant) {
  const std::vector<double> x{1, 2};
  EXPECT_EQ(kendall_tau_b(x, x).p_value, 1.0);
}

TEST(Significance, InversionDistributionMatchesEnumeration) {
  for (long n : {1L, 2L, 4L, 7L}) {
    std::vector<int> perm(static_cast<std::size_t>(n));
    std::iota(perm.begin(), perm.end(), 0);
    const std::int64_t max_inv = n * (n - 1) / 2;
    std::vector<long> hist(static_cast<std::size_t>(max_inv + 1), 0);
    long total = 0;
    do {
      long inv = 0;
      for (long i = 0; i < n; ++i) {
        for (long j = i + 1; j < n; ++j) inv += perm[std::size_t(i)] > perm[std::size_t(j)];
      }
      ++hist[std::size_t(inv)];
      ++total;
    } while (std::next_permutation(perm.begin(), perm.end()));
    long cum = 0;
    for (std::int64_t k = 0; k <= max_inv; ++k) {
      cum += hist[std::size_t(k)];
      EXPECT_NEAR(inversion_cdf(n, k), double(cum) / total, 1e-14) << n << " " << k;
    }
  }
}

TEST(Significance, TiesUseTheCorrectedNormalApproximation) {
  const std::vector<double> x{1, 1, 2, 2, 3, 3, 4, 5, 6, 7}, y{1, 2, 1, 3, 4, 4, 5, 7, 6, 8};
  const auto pc = count_pairs(x, y);
  const double n = 10;
  // Tie groups: x has three pairs, y has two pairs.
  const double v0 = n * (n - 1) * (2 * n + 5);
  const double vt = 3 * (2 * 1 * 9), vu = 2 * (2 * 1 * 9);
  const double v1 = (3 * 2) * (2 * 2);
  const double v2 = 0;
  const double var = (v0 - vt - vu) / 18 + v1 / (2 * n * (n - 1)) + v2 / (9 * n * (n - 1) * (n - 2));
  const double z = double(pc.concordant - pc.discordant) / std::sqrt(var);
  const auto r = kendall_tau_b(x, y);
  EXPECT_EQ(r.method, SignificanceMethod::kNormal);
  EXPECT_NEAR(r.p_value, std::erfc(std::abs(z) / std::sqrt(2.0)), 1e-12);
}

TEST(Significance, NullDataIsRarelySignificant) {
  Rng rng(15);
  int quiet = 0;
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<double> x(1000), y(1000);
    std::normal_distribution<double> g;
    for (auto& v : x) v = g(rng);
    for (auto& v : y) v = g(rng);
    quiet += kendall_tau_b(x, y).p_value > 0.05;
  }
  EXPECT_GE(quiet, 90);
}

TEST(Pascal, HalfCreditForTies) {
  const std::vector<TripletRecord> t{triplet(Choice::B), triplet(Choice::B), triplet(Choice::C)};
  const std::vector<double> b{0.9, 0.1, 0.5}, c{0.1, 0.9, 0.5};
  EXPECT_DOUBLE_EQ(pascal_accuracy(b, c, t), 0.5);
  EXPECT_DOUBLE_EQ(pascal_accuracy(b, c, t, TiePolicy::kStrict), 1.0 / 3.0);
  const auto one = std::span(t).first(1);
  EXPECT_EQ(pascal_accuracy(std::span(c).first(1), std::span(b).first(1), one), 0.0);
  EXPECT_EQ(pascal_accuracy(std::span(b).first(1), std::span(c).first(1), one), 1.0);
}

TEST(Pascal, MonotoneTransformAndErrors) {
  Rng rng(16);
  std::uniform_real_distribution<double> u;
  std::vector<TripletRecord> t;
  std::vector<double> b, c, tb, tc;
  for (int i = 0; i < 200; ++i) {
    t.push_back(triplet(u(rng) < 0.5 ? Choice::B : Choice::C));
    b.push_back(std::round(u(rng) * 5));
    c.push_back(std::round(u(rng) * 5));
    tb.push_back(std::pow(b.back(), 3) + 1);
    tc.push_back(std::pow(c.back(), 3) + 1);
  }
  EXPECT_EQ(pascal_accuracy(b, c, t), pascal_accuracy(tb, tc, t));
  EXPECT_THROW(pascal_accuracy(std::span(b).first(3), c, t), InvariantError);
  EXPECT_THROW(pascal_accuracy({}, {}, {}), InvariantError);
}

namespace {

// Pairwise definition: D_o averages squared differences within units,
// D_e over all pairable values regardless of unit.
double brute_alpha(const Eigen::MatrixXd& m) {
  std::vector<std::vector<double>> units;
  for (Eigen::Index j = 0; j < m.cols(); ++j) {
    std::vector<double> vals;
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
      if (!std::isnan(m(i, j))) vals.push_back(m(i, j));
    }
    if (vals.size() >= 2) units.push_back(vals);
  }
  std::vector<double> all;
  double n = 0, d_o = 0;
  for (const auto& u : units) {
    n += double(u.size());
    all.insert(all.end(), u.begin(), u.end());
    double s = 0;
    for (double a : u) {
      for (double b : u) s += (a - b) * (a - b);
    }
    d_o += s / double(u.size() - 1);
  }
  d_o /= n;
  double d_e = 0;
  for (double a : all) {
    for (double b : all) d_e += (a - b) * (a - b);
  }
  d_e /= n * (n - 1);
  return 1 - d_o / d_e;
}

}  // namespace

TEST(Krippendorff, HandBuiltCoincidenceTable) {
  RatingsMatrix r{Eigen::MatrixXd(2, 2)};
  r.values << 1, 2, 1, 2;
  EXPECT_DOUBLE_EQ(krippendorff_alpha(r), 1.0);
  // Unit 1 {1, 2}, unit 2 {2, 2}: o(1,2) = o(2,1) = 1, o(2,2) = 2; n = 4,
  // n_1 = 1, n_2 = 3. D_o = 2 * 1 / 4, D_e = 2 * 1 * 3 / 12.
  r.values << 1, 2, 2, 2;
  EXPECT_NEAR(krippendorff_alpha(r), 1 - 0.5 / 0.5, 1e-15);
}

TEST(Krippendorff, MatchesPairwiseOracleWithMissingValues) {
  Rng rng(17);
  std::uniform_int_distribution<int> score(1, 5);
  std::uniform_real_distribution<double> u;
  for (int trial = 0; trial < 50; ++trial) {
    RatingsMatrix r = RatingsMatrix::missing(2 + trial % 4, 3 + trial);
    for (Eigen::Index i = 0; i < r.values.rows(); ++i) {
      for (Eigen::Index j = 0; j < r.values.cols(); ++j) {
        if (u(rng) < 0.8) r.values(i, j) = score(rng) + (trial % 3 ? 0.0 : 0.5 * score(rng));
      }
    }
    double oracle = 0;
    try {
      oracle = brute_alpha(r.values);
    } catch (...) {
      continue;
    }
    if (!std::isfinite(oracle)) continue;
    EXPECT_NEAR(krippendorff_alpha(r), oracle, 1e-12);
  }
}

TEST(Krippendorff, ShiftInvariant) {
  Rng rng(18);
  std::uniform_int_distribution<int> score(1, 5);
  RatingsMatrix r = RatingsMatrix::missing(3, 40);
  for (Eigen::Index k = 0; k < r.values.size(); ++k) r.values(k) = score(rng);
  RatingsMatrix shifted = r;
  shifted.values.array() += 7.0;
  EXPECT_NEAR(krippendorff_alpha(r), krippendorff_alpha(shifted), 1e-12);
}

TEST(Krippendorff, PerfectAgreementAndRandomRatings) {
  RatingsMatrix same = RatingsMatrix::missing(3, 10);
  for (Eigen::Index j = 0; j < 10; ++j) same.values.col(j).setConstant(double(j % 4));
  EXPECT_DOUBLE_EQ(krippendorff_alpha(same), 1.0);

  Rng rng(19);
  std::uniform_int_distribution<int> score(1, 5);
  RatingsMatrix noise = RatingsMatrix::missing(3, 1000);
  for (Eigen::Index k = 0; k < noise.values.size(); ++k) noise.values(k) = score(rng);
  EXPECT_LT(std::abs(krippendorff_alpha(noise)), 0.05);
}

TEST(Krippendorff, Errors) {
  RatingsMatrix constant = RatingsMatrix::missing(2, 3);
  constant.values.setConstant(3.0);
  EXPECT_THROW(krippendorff_alpha(constant), UndefinedStatisticError);
  EXPECT_THROW(krippendorff_alpha(RatingsMatrix::missing(1, 3)), InvariantError);
  EXPECT_THROW(krippendorff_alpha(RatingsMatrix::missing(2, 3)), InvariantError);
}

TEST(Krippendorff, FromJudgmentsPadsMissingRaters) {
  std::vector<JudgmentRecord> recs(2);
  recs[0].raw_scores = {1, 2, 3};
  recs[1].raw_scores = {4};
  const auto r = RatingsMatrix::from_judgments(recs);
  ASSERT_EQ(r.values.rows(), 3);
  ASSERT_EQ(r.values.cols(), 2);
  EXPECT_EQ(r.values(2, 0), 3.0);
  EXPECT_EQ(r.values(0, 1), 4.0);
  EXPECT_TRUE(std::isnan(r.values(1, 1)));
}

TEST(Histogram, BoundaryRule) {
  const std::vector<double> s{0, 0.5, 1};
  EXPECT_EQ(score_histogram(s, 2), (std::vector<long>{2, 1}));
  EXPECT_EQ(score_histogram(s, 1), (std::vector<long>{3}));
}

TEST(Histogram, MatchesLinearScanOracle) {
  Rng rng(20);
  std::uniform_int_distribution<int> tenth(0, 100);
  for (int bins : {3, 7, 10}) {
    std::vector<double> s;
    for (int i = 0; i < 500; ++i) s.push_back(tenth(rng) / 100.0);
    std::vector<long> expected(static_cast<std::size_t>(bins), 0);
    for (double v : s) {
      int k = 1;
      while (v > double(k) / bins) ++k;
      ++expected[static_cast<std::size_t>(k - 1)];
    }
    const auto counts = score_histogram(s, bins);
    EXPECT_EQ(counts, expected);
    EXPECT_EQ(std::accumulate(counts.begin(), counts.end(), 0L), 500);
  }
}

TEST(Histogram, Errors) {
  const std::vector<double> bad{0.5, 1.01};
  EXPECT_THROW(score_histogram(bad), RangeError);
  const std::vector<double> neg{-0.01};
  EXPECT_THROW(score_histogram(neg), RangeError);
  const std::vector<double> ok{0.5};
  EXPECT_THROW(score_histogram(ok, 0), InvariantError);
  const std::vector<long> counts{2, 1};
  EXPECT_EQ(histogram_csv(counts), "bin,lower,upper,count\n0,0,0.5,2\n1,0.5,1,1\n");
}

TEST(MetricReport, JsonRoundTripAndTable) {
  const std::vector<double> x{1, 2, 3, 4}, y{1, 3, 2, 4};
  std::vector<MetricReport> reports{
      correlation_report("flickr", "umic", kendall_tau_c(x, y)),
      correlation_report("flickr", "bleu1", kendall_tau_b(x, x)),
  };
  MetricReport acc;
  acc.dataset = "pascal";
  acc.metric = "umic";
  acc.value = 0.851;
  acc.n = 4000;
  reports.push_back(acc);
  for (const auto& r : reports) {
    const auto back = MetricReport::from_json(r.to_json());
    EXPECT_EQ(back.to_json(), r.to_json());
  }
  EXPECT_TRUE(reports[2].to_json().contains("accuracy"));
  EXPECT_TRUE(reports[0].to_json().contains("coefficient"));
  EXPECT_EQ(markdown_table(reports),
            "| metric | flickr | pascal |\n"
            "|---|---|---|\n"
            "| bleu1 | 1.000 | - |\n"
            "| umic | 0.667 | 85.1 |\n");
}
