#pragma once

// Trainable compound activation (TCA).
//
//   y_i = (1/M) sum_j f0(e^{A(i,j)} x_i + B(i,j))
//
// Element i of a layer is an average of M scaled and shifted copies of the
// base activation f0. Used as a stochastic unit it is the uniform mixture of
// the M base distributions p0(.; e^{A(i,j)} alpha_i + B(i,j)), whose mean is
// the TCA itself.
//
// Batch overloads take one sample per row (S x N).

#include <Eigen/Core>

#include <cmath>
#include <random>
#include <vector>

#include "tca/base.hpp"
#include "tca/error.hpp"

namespace tca {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using RowVector = Eigen::RowVectorXd;

struct TcaParams {
  BaseKind base = BaseKind::ted;
  Matrix A;  // log-scales, N x M
  Matrix B;  // biases, N x M

  Eigen::Index units() const { return A.rows(); }
  Eigen::Index mixtures() const { return A.cols(); }

  // A = 0, B = 0: exactly the base activation.
  static TcaParams reduced(BaseKind base, Eigen::Index n, Eigen::Index m) {
    if (n < 1 || m < 1) throw invalid_argument("TcaParams: N and M must be >= 1");
    return {base, Matrix::Zero(n, m), Matrix::Zero(n, m)};
  }

  // A = 0, B ~ U[-spread, spread]: close to the base activation, with
  // components that separate once trained.
  template <class URBG>
  static TcaParams base_equivalent(BaseKind base, Eigen::Index n, Eigen::Index m, URBG& rng,
                                   double spread = 0.1) {
    auto p = reduced(base, n, m);
    std::uniform_real_distribution<double> unif(-spread, spread);
    for (Eigen::Index i = 0; i < n; ++i)
      for (Eigen::Index j = 0; j < m; ++j) p.B(i, j) = unif(rng);
    return p;
  }

  void validate() const {
    if (A.rows() < 1 || A.cols() < 1) throw invalid_argument("TcaParams: empty parameter matrix");
    detail::require_shape(A.rows() == B.rows() && A.cols() == B.cols(), "TcaParams: A and B differ in shape");
    if (!A.allFinite() || !B.allFinite()) throw invalid_argument("TcaParams: non-finite parameter");
  }

  friend bool operator==(const TcaParams& l, const TcaParams& r) {
    return l.base == r.base && l.A.rows() == r.A.rows() && l.A.cols() == r.A.cols() && l.A == r.A &&
           l.B == r.B;
  }
};

struct TcaGrads {
  Vector dx;
  Matrix dA;
  Matrix dB;
};

struct TcaBatchGrads {
  Matrix dx;  // S x N
  Matrix dA;  // summed over the batch
  Matrix dB;
};

namespace detail {

inline void check_units(const TcaParams& p, Eigen::Index n, const char* what) {
  require_shape(p.A.rows() == n && p.B.rows() == n && p.A.cols() == p.B.cols(), what);
}

inline double tca_elem(const TcaParams& p, Eigen::Index i, double x) {
  const Eigen::Index m = p.mixtures();
  double acc = 0.0;
  for (Eigen::Index j = 0; j < m; ++j) acc += base_eval(p.base, std::exp(p.A(i, j)) * x + p.B(i, j));
  return acc / static_cast<double>(m);
}

inline double tca_deriv_elem(const TcaParams& p, Eigen::Index i, double x) {
  const Eigen::Index m = p.mixtures();
  double acc = 0.0;
  for (Eigen::Index j = 0; j < m; ++j) {
    const double s = std::exp(p.A(i, j));
    acc += s * base_deriv(p.base, s * x + p.B(i, j));
  }
  return acc / static_cast<double>(m);
}

inline double tca_logpartition_elem(const TcaParams& p, Eigen::Index i, double alpha) {
  const Eigen::Index m = p.mixtures();
  double acc = 0.0;
  for (Eigen::Index j = 0; j < m; ++j) {
    const double s = std::exp(p.A(i, j));
    acc += base_logpartition(p.base, s * alpha + p.B(i, j)) / s;
  }
  return acc / static_cast<double>(m);
}

}  // namespace detail

inline Vector tca_eval(const TcaParams& p, const Vector& x) {
  detail::check_units(p, x.size(), "tca_eval: length mismatch");
  Vector y(x.size());
  for (Eigen::Index i = 0; i < x.size(); ++i) y(i) = detail::tca_elem(p, i, x(i));
  return y;
}

inline Matrix tca_eval(const TcaParams& p, const Matrix& x) {
  detail::check_units(p, x.cols(), "tca_eval: column count mismatch");
  Matrix y(x.rows(), x.cols());
  for (Eigen::Index i = 0; i < x.cols(); ++i)
    for (Eigen::Index s = 0; s < x.rows(); ++s) y(s, i) = detail::tca_elem(p, i, x(s, i));
  return y;
}

inline Vector tca_deriv(const TcaParams& p, const Vector& x) {
  detail::check_units(p, x.size(), "tca_deriv: length mismatch");
  Vector d(x.size());
  for (Eigen::Index i = 0; i < x.size(); ++i) d(i) = detail::tca_deriv_elem(p, i, x(i));
  return d;
}

// Gradients of sum_i upstream_i * y_i with respect to x, A and B.
inline TcaGrads tca_grads(const TcaParams& p, const Vector& x, const Vector& upstream) {
  detail::check_units(p, x.size(), "tca_grads: length mismatch");
  detail::require_shape(upstream.size() == x.size(), "tca_grads: upstream length mismatch");
  const Eigen::Index n = x.size(), m = p.mixtures();
  const double inv_m = 1.0 / static_cast<double>(m);
  TcaGrads g{Vector::Zero(n), Matrix::Zero(n, m), Matrix::Zero(n, m)};
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < m; ++j) {
      const double s = std::exp(p.A(i, j));
      const double d = base_deriv(p.base, s * x(i) + p.B(i, j)) * inv_m * upstream(i);
      g.dB(i, j) = d;
      g.dA(i, j) = d * s * x(i);
      g.dx(i) += d * s;
    }
  }
  return g;
}

inline TcaBatchGrads tca_grads(const TcaParams& p, const Matrix& x, const Matrix& upstream) {
  detail::check_units(p, x.cols(), "tca_grads: column count mismatch");
  detail::require_shape(upstream.rows() == x.rows() && upstream.cols() == x.cols(),
                        "tca_grads: upstream shape mismatch");
  const Eigen::Index n = x.cols(), m = p.mixtures();
  const double inv_m = 1.0 / static_cast<double>(m);
  TcaBatchGrads g{Matrix::Zero(x.rows(), n), Matrix::Zero(n, m), Matrix::Zero(n, m)};
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < m; ++j) {
      const double s = std::exp(p.A(i, j));
      const double b = p.B(i, j);
      double sum_a = 0.0, sum_b = 0.0;
      for (Eigen::Index r = 0; r < x.rows(); ++r) {
        const double d = base_deriv(p.base, s * x(r, i) + b) * inv_m * upstream(r, i);
        sum_b += d;
        sum_a += d * s * x(r, i);
        g.dx(r, i) += d * s;
      }
      g.dA(i, j) = sum_a;
      g.dB(i, j) = sum_b;
    }
  }
  return g;
}

// LZ_i = (1/M) sum_j e^{-A(i,j)} L0(e^{A(i,j)} alpha_i + B(i,j)); dLZ_i/dalpha_i = y_i.
inline Vector tca_logpartition(const TcaParams& p, const Vector& alpha) {
  detail::check_units(p, alpha.size(), "tca_logpartition: length mismatch");
  Vector lz(alpha.size());
  for (Eigen::Index i = 0; i < alpha.size(); ++i) lz(i) = detail::tca_logpartition_elem(p, i, alpha(i));
  return lz;
}

// Row sums of the log-partition over a batch: one value per sample.
inline Vector tca_logpartition_rowsum(const TcaParams& p, const Matrix& alpha) {
  detail::check_units(p, alpha.cols(), "tca_logpartition: column count mismatch");
  Vector out = Vector::Zero(alpha.rows());
  for (Eigen::Index i = 0; i < alpha.cols(); ++i)
    for (Eigen::Index s = 0; s < alpha.rows(); ++s) out(s) += detail::tca_logpartition_elem(p, i, alpha(s, i));
  return out;
}

// Adds sum_s coeff_s * d(sum_i LZ_i(alpha_si))/d{A,B} into dA, dB.
inline void accumulate_logpartition_grads(const TcaParams& p, const Matrix& alpha, const Vector& coeff,
                                          Matrix& dA, Matrix& dB) {
  detail::check_units(p, alpha.cols(), "logpartition grads: column count mismatch");
  detail::require_shape(coeff.size() == alpha.rows(), "logpartition grads: coefficient length mismatch");
  detail::require_shape(dA.rows() == p.A.rows() && dA.cols() == p.A.cols() && dB.rows() == p.B.rows() &&
                            dB.cols() == p.B.cols(),
                        "logpartition grads: accumulator shape mismatch");
  const Eigen::Index m = p.mixtures();
  const double inv_m = 1.0 / static_cast<double>(m);
  for (Eigen::Index i = 0; i < alpha.cols(); ++i) {
    for (Eigen::Index j = 0; j < m; ++j) {
      const double s = std::exp(p.A(i, j));
      const double b = p.B(i, j);
      double ga = 0.0, gb = 0.0;
      for (Eigen::Index r = 0; r < alpha.rows(); ++r) {
        const double c = coeff(r);
        if (c == 0.0) continue;
        const double u = s * alpha(r, i) + b;
        const double f = base_eval(p.base, u);
        // d/dB: e^{-a} f0(u);  d/dA: alpha f0(u) - e^{-a} L0(u)
        gb += c * f / s;
        ga += c * (alpha(r, i) * f - base_logpartition(p.base, u) / s);
      }
      dA(i, j) += ga * inv_m;
      dB(i, j) += gb * inv_m;
    }
  }
}

// CDF of the mixture unit i at h given field alpha_i.
inline double tca_mixture_cdf(const TcaParams& p, double h, double alpha, Eigen::Index row) {
  if (row < 0 || row >= p.units()) throw shape_error("tca_mixture_cdf: row out of range");
  detail::require_finite(alpha, "tca_mixture_cdf");
  const Eigen::Index m = p.mixtures();
  double acc = 0.0;
  for (Eigen::Index j = 0; j < m; ++j) acc += base_cdf(p.base, h, std::exp(p.A(row, j)) * alpha + p.B(row, j));
  return acc / static_cast<double>(m);
}

// Draw h_i: component j ~ U{1..M}, then h_i ~ p0(.; e^{A(i,j)} alpha_i + B(i,j)).
template <class URBG>
Vector tca_sample(const TcaParams& p, const Vector& alpha, URBG& rng) {
  detail::check_units(p, alpha.size(), "tca_sample: length mismatch");
  std::uniform_int_distribution<Eigen::Index> pick(0, p.mixtures() - 1);
  Vector h(alpha.size());
  for (Eigen::Index i = 0; i < alpha.size(); ++i) {
    const Eigen::Index j = pick(rng);
    h(i) = base_sample(p.base, std::exp(p.A(i, j)) * alpha(i) + p.B(i, j), rng);
  }
  return h;
}

template <class URBG>
Matrix tca_sample(const TcaParams& p, const Matrix& alpha, URBG& rng) {
  detail::check_units(p, alpha.cols(), "tca_sample: column count mismatch");
  std::uniform_int_distribution<Eigen::Index> pick(0, p.mixtures() - 1);
  Matrix h(alpha.rows(), alpha.cols());
  for (Eigen::Index s = 0; s < alpha.rows(); ++s) {
    for (Eigen::Index i = 0; i < alpha.cols(); ++i) {
      const Eigen::Index j = pick(rng);
      h(s, i) = base_sample(p.base, std::exp(p.A(i, j)) * alpha(s, i) + p.B(i, j), rng);
    }
  }
  return h;
}

// Element-wise base activation of a batch.
inline Matrix base_eval(BaseKind k, const Matrix& u) {
  return u.unaryExpr([k](double v) { return base_eval(k, v); });
}

template <class URBG>
Matrix base_sample(BaseKind k, const Matrix& u, URBG& rng) {
  Matrix out(u.rows(), u.cols());
  for (Eigen::Index s = 0; s < u.rows(); ++s)
    for (Eigen::Index i = 0; i < u.cols(); ++i) out(s, i) = base_sample(k, u(s, i), rng);
  return out;
}

}  // namespace tca
