#pragma once

// Element-wise PDF estimation with a monotone TCA f.
//
// If y = f(x) follows a target law p_y, then p_x(x) = f'(x) p_y(f(x)).
// Fitting f by maximum likelihood pushes the distribution of f(x) towards
// the target, flattening the modes of x (demodalization).

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <fstream>
#include <limits>
#include <numbers>
#include <random>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "tca/config.hpp"
#include "tca/error.hpp"
#include "tca/stats.hpp"
#include "tca/tca.hpp"

namespace tca::pdf {

enum class TargetLaw { uniform01, standard_gaussian };

inline TargetLaw parse_target(std::string_view s) {
  if (s == "uniform" || s == "uniform01") return TargetLaw::uniform01;
  if (s == "gaussian" || s == "normal" || s == "standard_gaussian") return TargetLaw::standard_gaussian;
  throw invalid_argument("unknown target law '" + std::string(s) + "'");
}

inline std::string_view to_string(TargetLaw t) {
  return t == TargetLaw::uniform01 ? "uniform" : "gaussian";
}

// The density is proper only when the TCA range matches the target support:
// a bounded base for the uniform law, the linear base for the Gaussian law.
inline void check_compatible(BaseKind base, TargetLaw target) {
  if (target == TargetLaw::uniform01 && !bounded_range(base))
    throw invalid_argument("uniform target requires a base with range in [0,1]");
  if (target == TargetLaw::standard_gaussian && bounded_range(base))
    throw invalid_argument("gaussian target requires the linear base (unbounded range)");
}

inline double target_logpdf(TargetLaw t, double y) {
  if (t == TargetLaw::uniform01) return (y >= 0.0 && y <= 1.0) ? 0.0 : -std::numeric_limits<double>::infinity();
  return -0.5 * y * y - 0.5 * std::log(2.0 * std::numbers::pi);
}

inline double target_cdf(TargetLaw t, double y) {
  return t == TargetLaw::uniform01 ? stats::uniform01_cdf(y) : stats::std_normal_cdf(y);
}

namespace detail {

inline void check_univariate(const TcaParams& p) {
  if (p.units() != 1) throw shape_error("univariate TCA must have exactly one row");
}

struct Terms {
  double f;   // f(x)
  double fp;  // f'(x)
};

inline Terms terms(const TcaParams& p, double x) {
  return {tca::detail::tca_elem(p, 0, x), tca::detail::tca_deriv_elem(p, 0, x)};
}

// Mean log-likelihood without input validation; non-finite on overflow.
inline double loglik_unchecked(const TcaParams& p, TargetLaw t, std::span<const double> x) {
  double acc = 0.0;
  try {
    for (double v : x) {
      const auto [f, fp] = terms(p, v);
      acc += std::log(fp) + target_logpdf(t, f);
    }
  } catch (const tca::invalid_argument&) {
    return std::numeric_limits<double>::quiet_NaN();
  }
  return acc / static_cast<double>(x.size());
}

// Gradient of the mean log-likelihood in (A, B).
inline void loglik_grad(const TcaParams& p, TargetLaw t, std::span<const double> x, Matrix& gA, Matrix& gB) {
  const Eigen::Index m = p.mixtures();
  const double inv_m = 1.0 / static_cast<double>(m);
  gA.setZero(1, m);
  gB.setZero(1, m);
  for (double v : x) {
    const auto [f, fp] = terms(p, v);
    const double gauss = t == TargetLaw::standard_gaussian ? -f : 0.0;
    for (Eigen::Index j = 0; j < m; ++j) {
      const double s = std::exp(p.A(0, j));
      const double u = s * v + p.B(0, j);
      const double d1 = base_deriv(p.base, u);
      const double d2 = base_deriv2(p.base, u);
      // d f'/d b_j and d f'/d a_j
      const double dfp_db = inv_m * s * d2;
      const double dfp_da = inv_m * (s * d1 + s * s * v * d2);
      const double df_db = inv_m * d1;
      const double df_da = inv_m * d1 * s * v;
      gB(0, j) += dfp_db / fp + gauss * df_db;
      gA(0, j) += dfp_da / fp + gauss * df_da;
    }
  }
  gA /= static_cast<double>(x.size());
  gB /= static_cast<double>(x.size());
}

inline void check_samples(std::span<const double> x) {
  if (x.empty()) throw invalid_argument("empty sample set");
  for (double v : x) tca::detail::require_finite(v, "sample");
}

}  // namespace detail

// Mean over samples of log f'(x_k) + log p_target(f(x_k)).
inline double loglik(const TcaParams& p, TargetLaw target, std::span<const double> x) {
  detail::check_univariate(p);
  detail::check_samples(x);
  return detail::loglik_unchecked(p, target, x);
}

inline double density(const TcaParams& p, TargetLaw target, double x) {
  detail::check_univariate(p);
  const auto [f, fp] = detail::terms(p, x);
  return fp * std::exp(target_logpdf(target, f));
}

inline std::vector<double> demodalize(const TcaParams& p, std::span<const double> x) {
  detail::check_univariate(p);
  std::vector<double> y;
  y.reserve(x.size());
  for (double v : x) y.push_back(tca::detail::tca_elem(p, 0, v));
  return y;
}

// KS statistic of the transformed samples f(x) against the target law.
inline double transformed_ks(const TcaParams& p, TargetLaw target, std::span<const double> x) {
  const auto y = demodalize(p, x);
  return stats::ks_statistic(y, [target](double v) { return target_cdf(target, v); });
}

struct FitResult {
  TcaParams params;
  std::vector<double> trace;  // loglik after each epoch, starting with the initial value
};

// Unit scales with component j centred on the (j+1/2)/M sample quantile.
inline TcaParams quantile_init(std::span<const double> x, BaseKind base, int mixtures) {
  std::vector<double> sorted(x.begin(), x.end());
  std::sort(sorted.begin(), sorted.end());
  auto p = TcaParams::reduced(base, 1, mixtures);
  for (int j = 0; j < mixtures; ++j) {
    const auto k = static_cast<std::size_t>((j + 0.5) / mixtures * static_cast<double>(sorted.size()));
    p.B(0, j) = -sorted[std::min(k, sorted.size() - 1)];
  }
  return p;
}

// Full-batch gradient ascent on the mean log-likelihood. A step that lowers
// the objective is halved until it does not, so the trace is non-decreasing.
// Accepted steps grow by half for the next epoch. Starts from quantile_init;
// cfg.lr is the initial step and cfg.epochs the epoch cap.
inline FitResult fit_univariate(std::span<const double> x, BaseKind base, int mixtures, TargetLaw target,
                                const TrainConfig& cfg) {
  if (mixtures < 1) throw invalid_argument("fit_univariate: M must be >= 1");
  detail::check_samples(x);
  check_compatible(base, target);

  FitResult res{quantile_init(x, base, mixtures), {}};
  double ll = detail::loglik_unchecked(res.params, target, x);
  if (!std::isfinite(ll)) throw training_failure("fit_univariate: non-finite log-likelihood at epoch 0");
  res.trace.push_back(ll);

  // Ascent runs in (log-scale, centre) coordinates, centre = -B / e^A, which
  // decouples the location of each component from its steepness.
  double step = cfg.lr;
  Matrix gA, gB;
  for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
    detail::loglik_grad(res.params, target, x, gA, gB);
    // Degenerate samples (e.g. one repeated value) drive a component towards
    // a spike; once the gradient overflows, keep the last finite iterate.
    if (!gA.allFinite() || !gB.allFinite()) break;
    const Matrix scale = res.params.A.array().exp().matrix();
    const Matrix centre = (-res.params.B.array() / scale.array()).matrix();
    const Matrix g_centre = (-gB.array() * scale.array()).matrix();
    const Matrix g_logscale = (gA.array() + gB.array() * res.params.B.array()).matrix();
    bool accepted = false;
    for (int halvings = 0; halvings < 40; ++halvings, step *= 0.5) {
      TcaParams trial = res.params;
      trial.A += step * g_logscale;
      trial.B = (-(centre + step * g_centre).array() * trial.A.array().exp()).matrix();
      const double trial_ll = detail::loglik_unchecked(trial, target, x);
      if (std::isfinite(trial_ll) && trial_ll >= ll) {
        res.params = std::move(trial);
        ll = trial_ll;
        accepted = true;
        break;
      }
    }
    res.trace.push_back(ll);
    if (!accepted) break;  // no ascent step left at machine precision
    step *= 1.5;
  }
  return res;
}

// Two Gaussian clusters at +-2 with sd 0.3, equal weights.
template <class URBG>
std::vector<double> bimodal_benchmark(std::size_t n, URBG& rng) {
  std::normal_distribution<double> left(-2.0, 0.3), right(2.0, 0.3);
  std::vector<double> x;
  x.reserve(n);
  for (std::size_t k = 0; k < n; ++k) x.push_back(k % 2 == 0 ? left(rng) : right(rng));
  return x;
}

inline std::vector<double> read_samples(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw io_error("cannot open sample file '" + path + "'");
  std::vector<double> x;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto first = line.find_first_not_of(" \t\r");
    if (first == std::string::npos || line[first] == '#') continue;
    try {
      std::size_t used = 0;
      x.push_back(std::stod(line.substr(first), &used));
    } catch (const std::exception&) {
      throw io_error(path + ":" + std::to_string(lineno) + ": not a number");
    }
  }
  return x;
}

inline void write_samples(const std::string& path, std::span<const double> x) {
  std::ofstream out(path);
  if (!out) throw io_error("cannot write '" + path + "'");
  out.precision(17);
  for (double v : x) out << v << '\n';
}

// CSV x,f,fprime,density over an even grid, for plotting the fitted map.
inline void write_fit_csv(const std::string& path, const TcaParams& p, TargetLaw target, double lo, double hi,
                          std::size_t points) {
  if (points < 2) throw invalid_argument("write_fit_csv: need at least two grid points");
  std::ofstream out(path);
  if (!out) throw io_error("cannot write '" + path + "'");
  out.precision(10);
  out << "x,f,fprime,density\n";
  for (std::size_t k = 0; k < points; ++k) {
    const double x = lo + (hi - lo) * static_cast<double>(k) / static_cast<double>(points - 1);
    const auto [f, fp] = detail::terms(p, x);
    out << x << ',' << f << ',' << fp << ',' << density(p, target, x) << '\n';
  }
}

}  // namespace tca::pdf
