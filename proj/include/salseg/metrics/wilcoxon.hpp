#pragma once

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "salseg/core/errors.hpp"

namespace salseg {

struct WilcoxonOutcome {
  double p_value = 1.0;
  double w_plus = 0.0;  // rank sum of positive differences
  int n_pairs = 0;      // nonzero differences entering the test
  bool exact = false;
};

struct ComparisonResult {
  std::string metric;
  std::string model_a;
  std::string model_b;
  double p_value = 1.0;
  bool significant = false;  // p < 0.05
  int n_pairs = 0;
};

namespace detail {

inline double normal_sf(double z) { return 0.5 * std::erfc(z / std::sqrt(2.0)); }

}  // namespace detail

// Two-sided Wilcoxon signed-rank test on paired samples. Zero differences are
// discarded; tied absolute differences receive average ranks. For up to 25
// usable pairs the p-value is exact (full sign-assignment distribution via
// subset-sum counting over doubled ranks); larger samples use the normal
// approximation with tie correction and continuity correction.
inline WilcoxonOutcome wilcoxon_signed_rank(const std::vector<double>& a,
                                            const std::vector<double>& b) {
  if (a.size() != b.size()) throw ValidationError("wilcoxon: paired samples differ in length");
  std::vector<double> diffs;
  diffs.reserve(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = a[i] - b[i];
    if (d != 0.0) diffs.push_back(d);
  }
  if (diffs.empty()) {
    throw ValidationError("wilcoxon: all paired differences are zero; test undefined");
  }

  const int n = static_cast<int>(diffs.size());
  std::vector<int> idx(n);
  for (int i = 0; i < n; ++i) idx[i] = i;
  std::sort(idx.begin(), idx.end(),
            [&](int x, int y) { return std::abs(diffs[x]) < std::abs(diffs[y]); });

  // Average ranks over tie groups; doubled so they stay integral.
  std::vector<long long> rank2(n);
  std::vector<long long> tie_sizes;
  int i = 0;
  while (i < n) {
    int j = i;
    while (j < n && std::abs(diffs[idx[j]]) == std::abs(diffs[idx[i]])) ++j;
    const long long sum2 = static_cast<long long>(i + 1) + static_cast<long long>(j);  // 2*avg rank
    for (int k = i; k < j; ++k) rank2[idx[k]] = sum2;
    tie_sizes.push_back(j - i);
    i = j;
  }

  long long w2_plus = 0;
  for (int k = 0; k < n; ++k) {
    if (diffs[k] > 0.0) w2_plus += rank2[k];
  }

  WilcoxonOutcome out;
  out.n_pairs = n;
  out.w_plus = static_cast<double>(w2_plus) / 2.0;

  if (n <= 25) {
    out.exact = true;
    const long long total2 = static_cast<long long>(n) * (n + 1);  // sum of doubled ranks
    std::vector<double> counts(total2 + 1, 0.0);
    counts[0] = 1.0;
    for (int k = 0; k < n; ++k) {
      for (long long s = total2 - rank2[k]; s >= 0; --s) {
        if (counts[s] != 0.0) counts[s + rank2[k]] += counts[s];
      }
    }
    const double mu2 = static_cast<double>(total2) / 2.0;
    const double dev = std::abs(static_cast<double>(w2_plus) - mu2);
    double tail = 0.0;
    for (long long s = 0; s <= total2; ++s) {
      if (std::abs(static_cast<double>(s) - mu2) >= dev) tail += counts[s];
    }
    out.p_value = tail / std::pow(2.0, n);
  } else {
    const double nn = static_cast<double>(n);
    const double mu = nn * (nn + 1.0) / 4.0;
    double tie_term = 0.0;
    for (const long long t : tie_sizes) {
      tie_term += static_cast<double>(t) * t * t - static_cast<double>(t);
    }
    const double var = nn * (nn + 1.0) * (2.0 * nn + 1.0) / 24.0 - tie_term / 48.0;
    if (var <= 0.0) throw ValidationError("wilcoxon: degenerate variance (all ranks tied)");
    const double w = out.w_plus;
    double z = 0.0;
    if (w > mu) {
      z = (w - mu - 0.5) / std::sqrt(var);
    } else if (w < mu) {
      z = (w - mu + 0.5) / std::sqrt(var);
    }
    out.p_value = std::min(1.0, 2.0 * detail::normal_sf(std::abs(z)));
  }
  return out;
}

inline ComparisonResult compare_models(const std::string& metric, const std::string& model_a,
                                       const std::string& model_b, const std::vector<double>& a,
                                       const std::vector<double>& b, double alpha = 0.05) {
  const WilcoxonOutcome w = wilcoxon_signed_rank(a, b);
  ComparisonResult r;
  r.metric = metric;
  r.model_a = model_a;
  r.model_b = model_b;
  r.p_value = w.p_value;
  r.significant = w.p_value < alpha;
  r.n_pairs = w.n_pairs;
  return r;
}

}  // namespace salseg
