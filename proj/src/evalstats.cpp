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

#include "umiclab/evalstats.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <map>
#include <numeric>
#include <sstream>

namespace umiclab {

std::string_view to_string(TauVariant v) { return v == TauVariant::kTauB ? "tau_b" : "tau_c"; }

TauVariant tau_variant_from_string(std::string_view s) {
  if (s == "tau_b") return TauVariant::kTauB;
  if (s == "tau_c") return TauVariant::kTauC;
  throw Error("unknown tau variant '" + std::string(s) + "' (expected tau_b or tau_c)");
}

std::string_view to_string(SignificanceMethod m) {
  return m == SignificanceMethod::kExact ? "exact" : "normal";
}

namespace {

std::int64_t pairs_of(std::int64_t t) { return t * (t - 1) / 2; }

// Sizes of runs of equal values in a sorted range, given an equality test.
template <typename Eq>
std::vector<std::int64_t> run_lengths(std::size_t n, Eq eq) {
  std::vector<std::int64_t> runs;
  std::size_t start = 0;
  for (std::size_t i = 1; i <= n; ++i) {
    if (i == n || !eq(i - 1, i)) {
      runs.push_back(static_cast<std::int64_t>(i - start));
      start = i;
    }
  }
  return runs;
}

std::int64_t merge_count(std::vector<double>& v, std::vector<double>& buf, std::size_t lo,
                         std::size_t hi) {
  if (hi - lo < 2) return 0;
  const std::size_t mid = lo + (hi - lo) / 2;
  std::int64_t swaps = merge_count(v, buf, lo, mid) + merge_count(v, buf, mid, hi);
  std::size_t i = lo, j = mid, k = lo;
  while (i < mid && j < hi) {
    if (v[j] < v[i]) {
      swaps += static_cast<std::int64_t>(mid - i);
      buf[k++] = v[j++];
    } else {
      buf[k++] = v[i++];
    }
  }
  while (i < mid) buf[k++] = v[i++];
  while (j < hi) buf[k++] = v[j++];
  std::copy(buf.begin() + static_cast<std::ptrdiff_t>(lo),
            buf.begin() + static_cast<std::ptrdiff_t>(hi),
            v.begin() + static_cast<std::ptrdiff_t>(lo));
  return swaps;
}

std::vector<std::int64_t> nontrivial(const std::vector<std::int64_t>& groups) {
  std::vector<std::int64_t> out;
  for (auto g : groups) {
    if (g > 1) out.push_back(g);
  }
  return out;
}

}  // namespace

PairCounts count_pairs(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) throw InvariantError("correlation inputs differ in length");
  if (x.size() < 2) throw InvariantError("correlation needs at least two observations");
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (std::isnan(x[i]) || std::isnan(y[i])) throw InvariantError("correlation input is NaN");
  }
  const std::size_t n = x.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return x[a] < x[b] || (x[a] == x[b] && y[a] < y[b]);
  });

  PairCounts pc;
  pc.n = static_cast<long>(n);
  const auto xg = run_lengths(n, [&](std::size_t i, std::size_t j) {
    return x[order[i]] == x[order[j]];
  });
  const auto xyg = run_lengths(n, [&](std::size_t i, std::size_t j) {
    return x[order[i]] == x[order[j]] && y[order[i]] == y[order[j]];
  });

  std::vector<double> ys(n), buf(n);
  for (std::size_t i = 0; i < n; ++i) ys[i] = y[order[i]];
  const std::int64_t swaps = merge_count(ys, buf, 0, n);
  const auto yg = run_lengths(n, [&](std::size_t i, std::size_t j) { return ys[i] == ys[j]; });

  for (auto g : xg) pc.tied_x += pairs_of(g);
  for (auto g : yg) pc.tied_y += pairs_of(g);
  for (auto g : xyg) pc.tied_xy += pairs_of(g);
  const std::int64_t total = pairs_of(static_cast<std::int64_t>(n));
  pc.discordant = swaps;
  pc.concordant = total - pc.tied_x - pc.tied_y + pc.tied_xy - swaps;
  pc.distinct_x = static_cast<long>(xg.size());
  pc.distinct_y = static_cast<long>(yg.size());
  pc.x_groups = nontrivial(xg);
  pc.y_groups = nontrivial(yg);
  return pc;
}

CorrelationResult kendall_tau_b(std::span<const double> x, std::span<const double> y) {
  const PairCounts pc = count_pairs(x, y);
  const std::int64_t total = pairs_of(pc.n);
  // One sqrt of the product keeps tau_b(x, x) exactly 1.
  const double denom = std::sqrt(static_cast<double>(total - pc.tied_x) *
                                 static_cast<double>(total - pc.tied_y));
  if (denom == 0.0) throw UndefinedStatisticError("tau_b undefined: an input is constant");
  CorrelationResult r;
  r.variant = TauVariant::kTauB;
  r.n = pc.n;
  r.coefficient =
      std::clamp(static_cast<double>(pc.concordant - pc.discordant) / denom, -1.0, 1.0);
  const auto sig = significance(r.variant, pc.concordant, pc.discordant, pc.n, pc.x_groups,
                                pc.y_groups);
  r.p_value = sig.p_value;
  r.method = sig.method;
  return r;
}

CorrelationResult kendall_tau_c(std::span<const double> x, std::span<const double> y) {
  const PairCounts pc = count_pairs(x, y);
  const long m = std::min(pc.distinct_x, pc.distinct_y);
  if (m < 2) throw UndefinedStatisticError("tau_c undefined: fewer than two distinct values");
  CorrelationResult r;
  r.variant = TauVariant::kTauC;
  r.n = pc.n;
  const double nn = static_cast<double>(pc.n);
  r.coefficient = std::clamp(2.0 * static_cast<double>(m) *
                                 static_cast<double>(pc.concordant - pc.discordant) /
                                 (nn * nn * static_cast<double>(m - 1)),
                             -1.0, 1.0);
  const auto sig = significance(r.variant, pc.concordant, pc.discordant, pc.n, pc.x_groups,
                                pc.y_groups);
  r.p_value = sig.p_value;
  r.method = sig.method;
  return r;
}

double inversion_cdf(long n, std::int64_t k) {
  if (k < 0) return 0.0;
  const std::int64_t max_inv = pairs_of(n);
  if (k >= max_inv) return 1.0;
  // Probability mass of the inversion count, built one element at a time.
  std::vector<double> p(static_cast<std::size_t>(max_inv) + 1, 0.0);
  p[0] = 1.0;
  std::int64_t top = 0;
  for (long i = 2; i <= n; ++i) {
    std::vector<double> next(p.size(), 0.0);
    const double w = 1.0 / static_cast<double>(i);
    for (std::int64_t a = 0; a <= top; ++a) {
      if (p[static_cast<std::size_t>(a)] == 0.0) continue;
      for (long j = 0; j < i; ++j) next[static_cast<std::size_t>(a + j)] += p[static_cast<std::size_t>(a)] * w;
    }
    top += i - 1;
    p.swap(next);
  }
  double cdf = 0.0;
  for (std::int64_t a = 0; a <= k; ++a) cdf += p[static_cast<std::size_t>(a)];
  return std::min(cdf, 1.0);
}

Significance significance(TauVariant, std::int64_t concordant, std::int64_t discordant, long n,
                          std::span<const std::int64_t> x_ties,
                          std::span<const std::int64_t> y_ties) {
  if (n < 2) throw InvariantError("significance needs n >= 2");
  const std::int64_t s = concordant - discordant;
  Significance out;
  if (n <= kExactSignificanceMaxN && x_ties.empty() && y_ties.empty()) {
    out.method = SignificanceMethod::kExact;
    const std::int64_t total = pairs_of(n);
    const std::int64_t abs_s = s < 0 ? -s : s;
    // S = total - 2 * inversions; the distribution is symmetric.
    const std::int64_t k = (total - abs_s) / 2;
    out.p_value = abs_s == 0 ? 1.0 : std::min(1.0, 2.0 * inversion_cdf(n, k));
    return out;
  }
  out.method = SignificanceMethod::kNormal;
  const double nd = static_cast<double>(n);
  double v0 = nd * (nd - 1) * (2 * nd + 5);
  double t2 = 0, t3 = 0, u2 = 0, u3 = 0;
  for (auto t : x_ties) {
    const double td = static_cast<double>(t);
    v0 -= td * (td - 1) * (2 * td + 5);
    t2 += td * (td - 1);
    t3 += td * (td - 1) * (td - 2);
  }
  for (auto u : y_ties) {
    const double ud = static_cast<double>(u);
    v0 -= ud * (ud - 1) * (2 * ud + 5);
    u2 += ud * (ud - 1);
    u3 += ud * (ud - 1) * (ud - 2);
  }
  double var = v0 / 18.0 + t2 * u2 / (2.0 * nd * (nd - 1));
  if (n > 2) var += t3 * u3 / (9.0 * nd * (nd - 1) * (nd - 2));
  if (var <= 0.0) {
    out.p_value = 1.0;
    return out;
  }
  const double z = static_cast<double>(s) / std::sqrt(var);
  out.p_value = std::min(1.0, std::erfc(std::abs(z) / std::sqrt(2.0)));
  return out;
}

double pascal_accuracy(std::span<const double> scores_b, std::span<const double> scores_c,
                       std::span<const TripletRecord> triplets, TiePolicy ties) {
  if (scores_b.size() != triplets.size() || scores_c.size() != triplets.size()) {
    throw InvariantError("PASCAL accuracy inputs are not aligned");
  }
  if (triplets.empty()) throw InvariantError("PASCAL accuracy needs at least one triplet");
  double matches = 0.0;
  for (std::size_t i = 0; i < triplets.size(); ++i) {
    if (scores_b[i] == scores_c[i]) {
      if (ties == TiePolicy::kHalfCredit) matches += 0.5;
      continue;
    }
    const Choice metric = scores_b[i] > scores_c[i] ? Choice::B : Choice::C;
    if (metric == triplets[i].human_choice) matches += 1.0;
  }
  return matches / static_cast<double>(triplets.size());
}

RatingsMatrix RatingsMatrix::missing(Eigen::Index raters, Eigen::Index items) {
  return {Eigen::MatrixXd::Constant(raters, items, std::nan(""))};
}

RatingsMatrix RatingsMatrix::from_judgments(std::span<const JudgmentRecord> records) {
  std::size_t raters = 0;
  for (const auto& r : records) raters = std::max(raters, r.raw_scores.size());
  auto m = missing(static_cast<Eigen::Index>(raters), static_cast<Eigen::Index>(records.size()));
  for (std::size_t i = 0; i < records.size(); ++i) {
    for (std::size_t k = 0; k < records[i].raw_scores.size(); ++k) {
      m.values(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(i)) =
          records[i].raw_scores[k];
    }
  }
  return m;
}

void RatingsMatrix::validate() const {
  if (values.rows() < 2) throw InvariantError("ratings need at least two raters");
  for (Eigen::Index c = 0; c < values.cols(); ++c) {
    if ((values.col(c).array() == values.col(c).array()).count() >= 2) return;
  }
  throw InvariantError("ratings need at least one item rated twice");
}

double krippendorff_alpha(const RatingsMatrix& ratings) {
  ratings.validate();
  std::map<double, std::size_t> index;
  for (Eigen::Index i = 0; i < ratings.values.size(); ++i) {
    const double v = ratings.values.data()[i];
    if (!std::isnan(v)) index.emplace(v, 0);
  }
  std::vector<double> value_of;
  for (auto& [v, idx] : index) {
    idx = value_of.size();
    value_of.push_back(v);
  }
  const std::size_t k = value_of.size();
  Eigen::MatrixXd coincidence = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(k),
                                                      static_cast<Eigen::Index>(k));
  for (Eigen::Index c = 0; c < ratings.values.cols(); ++c) {
    std::vector<std::size_t> unit;
    for (Eigen::Index r = 0; r < ratings.values.rows(); ++r) {
      const double v = ratings.values(r, c);
      if (!std::isnan(v)) unit.push_back(index.at(v));
    }
    if (unit.size() < 2) continue;
    const double w = 1.0 / static_cast<double>(unit.size() - 1);
    for (std::size_t a = 0; a < unit.size(); ++a) {
      for (std::size_t b = 0; b < unit.size(); ++b) {
        if (a != b) {
          coincidence(static_cast<Eigen::Index>(unit[a]), static_cast<Eigen::Index>(unit[b])) += w;
        }
      }
    }
  }
  const Eigen::VectorXd marginals = coincidence.rowwise().sum();
  const double total = marginals.sum();
  double observed = 0.0, expected = 0.0;
  for (std::size_t a = 0; a < k; ++a) {
    for (std::size_t b = 0; b < k; ++b) {
      const double d = value_of[a] - value_of[b];
      const auto ia = static_cast<Eigen::Index>(a), ib = static_cast<Eigen::Index>(b);
      observed += coincidence(ia, ib) * d * d;
      expected += marginals(ia) * marginals(ib) * d * d;
    }
  }
  observed /= total;
  expected /= total * (total - 1.0);
  if (expected == 0.0) throw UndefinedStatisticError("alpha undefined: all ratings identical");
  return 1.0 - observed / expected;
}

std::vector<long> score_histogram(std::span<const double> scores, int bins) {
  if (bins < 1) throw InvariantError("histogram needs at least one bin");
  std::vector<long> counts(static_cast<std::size_t>(bins), 0);
  const double nb = static_cast<double>(bins);
  for (const double s : scores) {
    if (!(s >= 0.0 && s <= 1.0)) {
      throw RangeError("score " + std::to_string(s) + " outside [0, 1]");
    }
    long b = std::max(0L, static_cast<long>(std::ceil(s * nb)) - 1);
    b = std::min(b, static_cast<long>(bins - 1));
    // s * bins can round across an edge; re-check against the edges.
    while (b + 1 < bins && s > static_cast<double>(b + 1) / nb) ++b;
    while (b > 0 && s <= static_cast<double>(b) / nb) --b;
    ++counts[static_cast<std::size_t>(b)];
  }
  return counts;
}

std::string histogram_csv(std::span<const long> counts) {
  std::ostringstream os;
  os << std::setprecision(6) << "bin,lower,upper,count\n";
  const double nb = static_cast<double>(counts.size());
  for (std::size_t i = 0; i < counts.size(); ++i) {
    os << i << ',' << static_cast<double>(i) / nb << ',' << static_cast<double>(i + 1) / nb
       << ',' << counts[i] << '\n';
  }
  return os.str();
}

nlohmann::json MetricReport::to_json() const {
  nlohmann::json j{{"dataset", dataset}, {"metric", metric}, {"n", n}};
  if (variant) {
    j["variant"] = std::string(to_string(*variant));
    j["coefficient"] = value;
  } else {
    j["variant"] = nullptr;
    j["accuracy"] = value;
  }
  j["p_value"] = p_value ? nlohmann::json(*p_value) : nlohmann::json(nullptr);
  if (method) j["method"] = std::string(to_string(*method));
  return j;
}

MetricReport MetricReport::from_json(const nlohmann::json& j) {
  MetricReport r;
  r.dataset = j.at("dataset").get<std::string>();
  r.metric = j.at("metric").get<std::string>();
  r.n = j.at("n").get<long>();
  if (j.contains("coefficient")) {
    r.variant = tau_variant_from_string(j.at("variant").get<std::string>());
    r.value = j.at("coefficient").get<double>();
  } else {
    r.value = j.at("accuracy").get<double>();
  }
  if (j.contains("p_value") && !j["p_value"].is_null()) r.p_value = j["p_value"].get<double>();
  if (j.contains("method")) {
    r.method = j["method"] == "exact" ? SignificanceMethod::kExact : SignificanceMethod::kNormal;
  }
  return r;
}

MetricReport correlation_report(std::string dataset, std::string metric,
                                const CorrelationResult& r) {
  MetricReport out;
  out.dataset = std::move(dataset);
  out.metric = std::move(metric);
  out.variant = r.variant;
  out.method = r.method;
  out.value = r.coefficient;
  out.p_value = r.p_value;
  out.n = r.n;
  return out;
}

std::string markdown_table(std::span<const MetricReport> reports) {
  std::vector<std::string> datasets;
  std::map<std::string, std::map<std::string, const MetricReport*>> rows;
  for (const auto& r : reports) {
    if (std::find(datasets.begin(), datasets.end(), r.dataset) == datasets.end()) {
      datasets.push_back(r.dataset);
    }
    rows[r.metric][r.dataset] = &r;
  }
  std::ostringstream os;
  os << "| metric |";
  for (const auto& d : datasets) os << ' ' << d << " |";
  os << "\n|---|";
  for (std::size_t i = 0; i < datasets.size(); ++i) os << "---|";
  os << '\n';
  for (const auto& [metric, cells] : rows) {
    os << "| " << metric << " |";
    for (const auto& d : datasets) {
      const auto it = cells.find(d);
      if (it == cells.end()) {
        os << " - |";
        continue;
      }
      const MetricReport& r = *it->second;
      os << ' ' << std::fixed;
      if (r.is_accuracy()) {
        os << std::setprecision(1) << 100.0 * r.value;
      } else {
        os << std::setprecision(3) << r.value;
      }
      os << " |";
    }
    os << '\n';
  }
  return os.str();
}

}  // namespace umiclab
