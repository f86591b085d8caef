#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numbers>
#include <span>
#include <vector>

#include "tca/error.hpp"

namespace tca::stats {

// One-sample Kolmogorov-Smirnov statistic sup|F_n - F| against a CDF.
template <class Cdf>
double ks_statistic(std::span<const double> samples, Cdf&& cdf) {
  if (samples.empty()) throw invalid_argument("ks_statistic: empty sample");
  std::vector<double> sorted(samples.begin(), samples.end());
  std::sort(sorted.begin(), sorted.end());
  const double n = static_cast<double>(sorted.size());
  double d = 0.0;
  for (std::size_t i = 0; i < sorted.size(); ++i) {
    const double f = cdf(sorted[i]);
    d = std::max({d, (static_cast<double>(i) + 1.0) / n - f, f - static_cast<double>(i) / n});
  }
  return d;
}

inline double uniform01_cdf(double v) { return std::clamp(v, 0.0, 1.0); }

inline double std_normal_cdf(double v) { return 0.5 * std::erfc(-v / std::numbers::sqrt2); }

inline double std_normal_pdf(double v) { return std::exp(-0.5 * v * v) / std::sqrt(2.0 * std::numbers::pi); }

// Asymptotic critical value of the one-sample KS statistic at level alpha.
inline double ks_critical_value(std::size_t n, double alpha) {
  return std::sqrt(-0.5 * std::log(alpha / 2.0)) / std::sqrt(static_cast<double>(n));
}

// Equal-width histogram over [lo, hi]; values outside are dropped.
inline std::vector<std::size_t> histogram(std::span<const double> v, std::size_t bins, double lo, double hi) {
  if (bins == 0 || !(hi > lo)) throw invalid_argument("histogram: bad range or bin count");
  std::vector<std::size_t> counts(bins, 0);
  const double w = (hi - lo) / static_cast<double>(bins);
  for (double x : v) {
    if (x < lo || x > hi) continue;
    auto k = static_cast<std::size_t>((x - lo) / w);
    counts[std::min(k, bins - 1)]++;
  }
  return counts;
}

struct MeanSd {
  double mean;
  double sd;
};

inline MeanSd mean_sd(std::span<const double> v) {
  if (v.empty()) throw invalid_argument("mean_sd: empty sample");
  double m = 0.0;
  for (double x : v) m += x;
  m /= static_cast<double>(v.size());
  double ss = 0.0;
  for (double x : v) ss += (x - m) * (x - m);
  const double denom = v.size() > 1 ? static_cast<double>(v.size() - 1) : 1.0;
  return {m, std::sqrt(ss / denom)};
}

}  // namespace tca::stats
