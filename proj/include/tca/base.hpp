#pragma once

// Base generating distributions (GDs) of a stochastic unit and their
// activation functions. Each kind is an exponential family in its natural
// parameter u:
//
//   sigmoid_bernoulli  h in {0,1},  p(h;u) ~ e^{u h}
//   ted                h in [0,1],  p(h;u) ~ e^{u h}   (truncated exponential)
//   linear_gaussian    h in R,      p(h;u) = N(u, 1)
//
// eval() is the mean f0(u), logpartition() its antiderivative L0(u).

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>
#include <string>
#include <string_view>

#include "tca/error.hpp"

namespace tca {

enum class BaseKind { sigmoid_bernoulli, ted, linear_gaussian };

using rng_t = std::mt19937_64;

inline std::string_view to_string(BaseKind k) {
  switch (k) {
    case BaseKind::sigmoid_bernoulli: return "sigmoid";
    case BaseKind::ted: return "ted";
    case BaseKind::linear_gaussian: return "linear";
  }
  return "?";
}

inline BaseKind parse_base_kind(std::string_view s) {
  if (s == "sigmoid" || s == "sigmoid_bernoulli" || s == "bernoulli") return BaseKind::sigmoid_bernoulli;
  if (s == "ted") return BaseKind::ted;
  if (s == "linear" || s == "linear_gaussian" || s == "gaussian") return BaseKind::linear_gaussian;
  throw invalid_argument("unknown base kind '" + std::string(s) + "'");
}

// True when the mean lies in (0,1) for every u.
inline bool bounded_range(BaseKind k) { return k != BaseKind::linear_gaussian; }

namespace detail {

// Below this |u| the TED quantities use their Taylor series.
inline constexpr double ted_series_cutoff = 1e-3;

inline double softplus(double u) {
  return u > 0 ? u + std::log1p(std::exp(-u)) : std::log1p(std::exp(u));
}

inline double sigmoid(double u) {
  if (u >= 0) return 1.0 / (1.0 + std::exp(-u));
  const double e = std::exp(u);
  return e / (1.0 + e);
}

inline double ted_mean(double u) {
  if (std::abs(u) < ted_series_cutoff) {
    const double u2 = u * u;
    return 0.5 + u / 12.0 - u * u2 / 720.0;
  }
  // 1/(1-e^{-u}) - 1/u, stable for both signs
  return -1.0 / std::expm1(-u) - 1.0 / u;
}

inline double ted_mean_deriv(double u) {
  // even function: 1/u^2 - 1/(4 sinh^2(u/2))
  const double au = std::abs(u);
  if (au < 5e-2) {
    const double u2 = u * u;
    return 1.0 / 12.0 + u2 * (-1.0 / 240.0 + u2 * (1.0 / 6048.0 - u2 / 172800.0));
  }
  const double s = std::sinh(0.5 * au);
  return 1.0 / (u * u) - 0.25 / (s * s);
}

inline double ted_mean_deriv2(double u) {
  // odd function: -2/u^3 + cosh(u/2) / (4 sinh^3(u/2))
  if (std::abs(u) < 0.1) {
    const double u2 = u * u;
    return u * (-1.0 / 120.0 + u2 * (1.0 / 1512.0 + u2 * (-1.0 / 28800.0 + u2 / 665280.0)));
  }
  const double au = std::abs(u);
  const double s = std::sinh(0.5 * au);
  const double v = -2.0 / (au * au * au) + (0.25 / (s * s)) / std::tanh(0.5 * au);
  return u < 0 ? -v : v;
}

inline double ted_logpartition(double u) {
  if (std::abs(u) < ted_series_cutoff) {
    const double u2 = u * u;
    return u / 2.0 + u2 / 24.0 - u2 * u2 / 2880.0;
  }
  // log((e^u - 1)/u)
  if (u > 0) return u + std::log(-std::expm1(-u) / u);
  return std::log(std::expm1(u) / u);
}

inline double ted_cdf(double h, double u) {
  if (h <= 0.0) return 0.0;
  if (h >= 1.0) return 1.0;
  if (std::abs(u) < ted_series_cutoff) {
    const double h2 = h * h, h3 = h2 * h;
    return h + u * (h2 / 2 - h / 2) + u * u * (h3 / 6 - h2 / 4 + h / 12) +
           u * u * u * (h2 * h2 / 24 - h3 / 12 + h2 / 24) +
           u * u * u * u * (h3 * h2 / 120 - h2 * h2 / 48 + h3 / 72 - h / 720);
  }
  if (u > 0) {
    // e^{u(h-1)} (1 - e^{-uh}) / (1 - e^{-u})
    return std::exp(u * (h - 1.0)) * std::expm1(-u * h) / std::expm1(-u);
  }
  return std::expm1(u * h) / std::expm1(u);
}

inline double ted_quantile(double p, double u) {
  if (u == 0.0) return p;
  double h;
  if (u > 1.0) {
    // 1 + log(p + (1-p) e^{-u}) / u
    h = 1.0 + std::log(p + (1.0 - p) * std::exp(-u)) / u;
  } else {
    h = std::log1p(p * std::expm1(u)) / u;
  }
  return std::clamp(h, 0.0, 1.0);
}

}  // namespace detail

inline double base_eval(BaseKind k, double u) {
  detail::require_finite(u, "base_eval");
  switch (k) {
    case BaseKind::sigmoid_bernoulli: return detail::sigmoid(u);
    case BaseKind::ted: return detail::ted_mean(u);
    case BaseKind::linear_gaussian: return u;
  }
  return 0.0;
}

inline double base_deriv(BaseKind k, double u) {
  detail::require_finite(u, "base_deriv");
  switch (k) {
    case BaseKind::sigmoid_bernoulli: {
      const double s = detail::sigmoid(u);
      return s * (1.0 - s);
    }
    case BaseKind::ted: return detail::ted_mean_deriv(u);
    case BaseKind::linear_gaussian: return 1.0;
  }
  return 0.0;
}

inline double base_deriv2(BaseKind k, double u) {
  detail::require_finite(u, "base_deriv2");
  switch (k) {
    case BaseKind::sigmoid_bernoulli: {
      const double s = detail::sigmoid(u);
      return s * (1.0 - s) * (1.0 - 2.0 * s);
    }
    case BaseKind::ted: return detail::ted_mean_deriv2(u);
    case BaseKind::linear_gaussian: return 0.0;
  }
  return 0.0;
}

inline double base_logpartition(BaseKind k, double u) {
  detail::require_finite(u, "base_logpartition");
  switch (k) {
    case BaseKind::sigmoid_bernoulli: return detail::softplus(u);
    case BaseKind::ted: return detail::ted_logpartition(u);
    case BaseKind::linear_gaussian: return 0.5 * u * u;
  }
  return 0.0;
}

// CDF of p0(.;u) at h. Values of h outside the support clamp to 0 or 1.
inline double base_cdf(BaseKind k, double h, double u) {
  detail::require_finite(u, "base_cdf");
  if (std::isnan(h)) throw invalid_argument("base_cdf: NaN h");
  switch (k) {
    case BaseKind::sigmoid_bernoulli:
      if (h < 0.0) return 0.0;
      if (h < 1.0) return detail::sigmoid(-u);
      return 1.0;
    case BaseKind::ted: return detail::ted_cdf(h, u);
    case BaseKind::linear_gaussian: return 0.5 * std::erfc(-(h - u) / std::numbers::sqrt2);
  }
  return 0.0;
}

template <class URBG>
double base_sample(BaseKind k, double u, URBG& rng) {
  detail::require_finite(u, "base_sample");
  switch (k) {
    case BaseKind::sigmoid_bernoulli: {
      std::uniform_real_distribution<double> unif(0.0, 1.0);
      return unif(rng) < detail::sigmoid(u) ? 1.0 : 0.0;
    }
    case BaseKind::ted: {
      std::uniform_real_distribution<double> unif(0.0, 1.0);
      return detail::ted_quantile(unif(rng), u);
    }
    case BaseKind::linear_gaussian: {
      std::normal_distribution<double> normal(u, 1.0);
      return normal(rng);
    }
  }
  return 0.0;
}

// Inverse of base_eval, used to initialise visible biases from data means.
// Arguments at or beyond the range ends are clipped to [-clip, clip].
inline double base_inverse(BaseKind k, double mean, double clip = 4.0) {
  switch (k) {
    case BaseKind::sigmoid_bernoulli: {
      if (mean <= 0.0) return -clip;
      if (mean >= 1.0) return clip;
      return std::clamp(std::log(mean / (1.0 - mean)), -clip, clip);
    }
    case BaseKind::ted: {
      if (mean <= detail::ted_mean(-clip)) return -clip;
      if (mean >= detail::ted_mean(clip)) return clip;
      double lo = -clip, hi = clip;
      for (int it = 0; it < 200 && hi - lo > 1e-13; ++it) {
        const double mid = 0.5 * (lo + hi);
        (detail::ted_mean(mid) < mean ? lo : hi) = mid;
      }
      return 0.5 * (lo + hi);
    }
    case BaseKind::linear_gaussian: return std::clamp(mean, -clip, clip);
  }
  return 0.0;
}

// Whether x lies in the support used by the conditional likelihood.
// Bernoulli units accept fractional x in [0,1] (expected-value targets).
inline bool in_support(BaseKind k, double x) {
  if (k == BaseKind::linear_gaussian) return std::isfinite(x);
  return x >= 0.0 && x <= 1.0;
}

}  // namespace tca
