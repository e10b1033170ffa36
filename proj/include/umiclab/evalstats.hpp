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

#include <Eigen/Dense>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"
#include "umiclab/corpus.hpp"
#include "umiclab/errors.hpp"

namespace umiclab {

class UndefinedStatisticError : public Error {
 public:
  using Error::Error;
};

enum class TauVariant { kTauB, kTauC };
std::string_view to_string(TauVariant v);  // "tau_b" / "tau_c"
TauVariant tau_variant_from_string(std::string_view s);

enum class SignificanceMethod { kExact, kNormal };
std::string_view to_string(SignificanceMethod m);  // "exact" / "normal"

struct CorrelationResult {
  double coefficient = 0.0;
  double p_value = 1.0;
  long n = 0;
  TauVariant variant = TauVariant::kTauB;
  SignificanceMethod method = SignificanceMethod::kNormal;
};

// Pair counts over all n(n-1)/2 pairs. `tied_x` counts pairs tied in x
// (including joint ties), likewise `tied_y`; `tied_xy` counts joint ties.
struct PairCounts {
  long n = 0;
  std::int64_t concordant = 0;
  std::int64_t discordant = 0;
  std::int64_t tied_x = 0;
  std::int64_t tied_y = 0;
  std::int64_t tied_xy = 0;
  long distinct_x = 0;
  long distinct_y = 0;
  // Sizes of the tie groups, used by the variance correction.
  std::vector<std::int64_t> x_groups;
  std::vector<std::int64_t> y_groups;
};

// O(n log n) pair counting (sort + merge-sort inversion count). Throws
// InvariantError on a length mismatch, n < 2 or a NaN.
PairCounts count_pairs(std::span<const double> x, std::span<const double> y);

// tau_b = (C - D) / sqrt((C + D + Tx)(C + D + Ty)).
CorrelationResult kendall_tau_b(std::span<const double> x, std::span<const double> y);

// Stuart's tau_c = 2m(C - D) / (n^2 (m - 1)), m = min(#distinct x, #distinct y).
CorrelationResult kendall_tau_c(std::span<const double> x, std::span<const double> y);

struct Significance {
  double p_value = 1.0;
  SignificanceMethod method = SignificanceMethod::kNormal;
};

// Two-sided test of S = C - D against no association. Exact permutation
// distribution when n <= kExactSignificanceMaxN and there are no ties;
// otherwise the normal approximation with the tie-corrected variance of S.
// The statistic is the same for both tau variants.
inline constexpr long kExactSignificanceMaxN = 25;
Significance significance(TauVariant variant, std::int64_t concordant, std::int64_t discordant,
                          long n, std::span<const std::int64_t> x_ties = {},
                          std::span<const std::int64_t> y_ties = {});

// P(number of inversions <= k) for a uniform permutation of n items.
double inversion_cdf(long n, std::int64_t k);

enum class TiePolicy { kHalfCredit, kStrict };

// Fraction of triplets whose metric preference sign(B - C) agrees with the
// human choice. Exact ties score 0.5, or 0 under kStrict.
double pascal_accuracy(std::span<const double> scores_b, std::span<const double> scores_c,
                       std::span<const TripletRecord> triplets,
                       TiePolicy ties = TiePolicy::kHalfCredit);

// raters x items; NaN marks a missing rating.
struct RatingsMatrix {
  Eigen::MatrixXd values;

  static RatingsMatrix missing(Eigen::Index raters, Eigen::Index items);
  // One column per record from its raw rater scores; records with fewer
  // raters than the widest leave the remainder missing.
  static RatingsMatrix from_judgments(std::span<const JudgmentRecord> records);
  void validate() const;
};

// Interval-level alpha = 1 - D_o / D_e via the coincidence matrix of
// pairable values. Throws UndefinedStatisticError when D_e = 0.
double krippendorff_alpha(const RatingsMatrix& ratings);

// Equal-width bins over [0, 1]: the first bin is [0, 1/bins], later bins
// are (a, b]. Throws RangeError for scores outside [0, 1].
std::vector<long> score_histogram(std::span<const double> scores, int bins = 10);
std::string histogram_csv(std::span<const long> counts);

struct MetricReport {
  std::string dataset;
  std::string metric;
  // Set for judgment datasets.
  std::optional<TauVariant> variant;
  std::optional<SignificanceMethod> method;
  // Correlation coefficient, or accuracy in [0, 1] for triplet datasets.
  double value = 0.0;
  std::optional<double> p_value;
  long n = 0;

  bool is_accuracy() const { return !variant.has_value(); }
  nlohmann::json to_json() const;
  static MetricReport from_json(const nlohmann::json& j);
};

MetricReport correlation_report(std::string dataset, std::string metric,
                                const CorrelationResult& r);

// One row per metric sorted by name, one column per dataset in first-seen
// order. Correlations print with three decimals, accuracies as
// percentages with one decimal.
std::string markdown_table(std::span<const MetricReport> reports);

}  // namespace umiclab
