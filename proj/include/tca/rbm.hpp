#pragma once

// Restricted Boltzmann machine with TCA-mixture hidden units and base-GD
// visible units.
//
// Energy E(x,h) = -x'Wh - a'x - b'h over the base measures of the units.
// Fields: alpha = W'x + b (hidden), beta = W h + a (visible). The free energy
//
//   F(x) = -a'x - sum_i LZ_i(alpha_i)
//
// uses the TCA log-partition, whose alpha-derivative is the TCA, so
// dF/dW = -x T(alpha)'. Contrastive divergence descends
// F(x_data) - F(x_recon), which covers W, a, b and the TCA parameters alike.
//
// Batch overloads take one sample per row.

#include <cmath>
#include <cstddef>
#include <limits>
#include <numbers>
#include <random>
#include <vector>

#include "tca/config.hpp"
#include "tca/data.hpp"
#include "tca/error.hpp"
#include "tca/parallel.hpp"
#include "tca/tca.hpp"

namespace tca::rbm {

enum class Mode { stochastic, deterministic };

struct RbmModel {
  Matrix W;  // N x H
  Vector a;  // visible bias
  Vector b;  // hidden bias
  BaseKind vis = BaseKind::ted;
  TcaParams hid;

  Eigen::Index visible() const { return W.rows(); }
  Eigen::Index hidden() const { return W.cols(); }

  void validate() const {
    detail::require_shape(a.size() == W.rows() && b.size() == W.cols(), "RbmModel: bias length mismatch");
    detail::require_shape(hid.units() == W.cols(), "RbmModel: TCA rows != hidden units");
    hid.validate();
    if (!W.allFinite() || !a.allFinite() || !b.allFinite()) throw invalid_argument("RbmModel: non-finite parameter");
  }

  friend bool operator==(const RbmModel& l, const RbmModel& r) {
    return l.vis == r.vis && l.W.rows() == r.W.rows() && l.W.cols() == r.W.cols() && l.W == r.W && l.a == r.a &&
           l.b == r.b && l.hid == r.hid;
  }
};

// W ~ N(0, weight_sd^2); a from the data means through the inverse visible
// activation (clipped to [-4, 4]); b = 0; hidden TCA reduced to the base.
template <class URBG>
RbmModel init_rbm(const Matrix& data, Eigen::Index hidden, BaseKind vis, BaseKind hid_base, Eigen::Index mixtures,
                  double weight_sd, URBG& rng) {
  if (data.rows() == 0) throw invalid_argument("init_rbm: empty data");
  if (hidden < 1) throw invalid_argument("init_rbm: need at least one hidden unit");
  RbmModel m;
  m.vis = vis;
  m.W.resize(data.cols(), hidden);
  std::normal_distribution<double> normal(0.0, weight_sd);
  for (Eigen::Index i = 0; i < m.W.rows(); ++i)
    for (Eigen::Index j = 0; j < m.W.cols(); ++j) m.W(i, j) = normal(rng);
  const RowVector mean = data.colwise().mean();
  m.a.resize(data.cols());
  for (Eigen::Index i = 0; i < m.a.size(); ++i) m.a(i) = base_inverse(vis, mean(i), 4.0);
  m.b = Vector::Zero(hidden);
  m.hid = TcaParams::reduced(hid_base, hidden, mixtures);
  return m;
}

// Parameter-shaped gradient accumulator.
struct Grads {
  Matrix W;
  Vector a;
  Vector b;
  Matrix A;
  Matrix B;

  static Grads zeros_like(const RbmModel& m) {
    return {Matrix::Zero(m.W.rows(), m.W.cols()), Vector::Zero(m.a.size()), Vector::Zero(m.b.size()),
            Matrix::Zero(m.hid.A.rows(), m.hid.A.cols()), Matrix::Zero(m.hid.B.rows(), m.hid.B.cols())};
  }

  Grads& operator+=(const Grads& o) {
    W += o.W;
    a += o.a;
    b += o.b;
    A += o.A;
    B += o.B;
    return *this;
  }

  Grads& operator*=(double s) {
    W *= s;
    a *= s;
    b *= s;
    A *= s;
    B *= s;
    return *this;
  }
};

inline Matrix forward_field(const RbmModel& m, const Matrix& X) {
  detail::require_shape(X.cols() == m.W.rows(), "forward_field: input width != visible units");
  Matrix alpha = X * m.W;
  alpha.rowwise() += m.b.transpose();
  return alpha;
}

inline Vector forward_field(const RbmModel& m, const Vector& x) {
  detail::require_shape(x.size() == m.W.rows(), "forward_field: input length != visible units");
  return m.W.transpose() * x + m.b;
}

inline Matrix backward_field(const RbmModel& m, const Matrix& H) {
  detail::require_shape(H.cols() == m.W.cols(), "backward_field: input width != hidden units");
  Matrix beta = H * m.W.transpose();
  beta.rowwise() += m.a.transpose();
  return beta;
}

inline Vector backward_field(const RbmModel& m, const Vector& h) {
  detail::require_shape(h.size() == m.W.cols(), "backward_field: input length != hidden units");
  return m.W * h + m.a;
}

template <class URBG>
Matrix hidden_step(const RbmModel& m, const Matrix& X, Mode mode, URBG& rng) {
  const Matrix alpha = forward_field(m, X);
  return mode == Mode::deterministic ? tca_eval(m.hid, alpha) : tca_sample(m.hid, alpha, rng);
}

template <class URBG>
Vector hidden_step(const RbmModel& m, const Vector& x, Mode mode, URBG& rng) {
  const Vector alpha = forward_field(m, x);
  return mode == Mode::deterministic ? tca_eval(m.hid, alpha) : tca_sample(m.hid, alpha, rng);
}

inline Matrix hidden_mean(const RbmModel& m, const Matrix& X) { return tca_eval(m.hid, forward_field(m, X)); }

template <class URBG>
Matrix visible_step(const RbmModel& m, const Matrix& H, Mode mode, URBG& rng) {
  const Matrix beta = backward_field(m, H);
  return mode == Mode::deterministic ? base_eval(m.vis, beta) : base_sample(m.vis, beta, rng);
}

template <class URBG>
Vector visible_step(const RbmModel& m, const Vector& h, Mode mode, URBG& rng) {
  const Matrix beta = backward_field(m, Matrix(h.transpose()));
  const Matrix x = mode == Mode::deterministic ? base_eval(m.vis, beta) : base_sample(m.vis, beta, rng);
  return x.row(0).transpose();
}

struct Chain {
  Matrix x;       // reconstruction after k alternations
  Matrix alpha0;  // hidden field of the starting point
  Matrix beta;    // visible field of the last alternation
};

// k alternations h <- x, x <- h starting from X0.
template <class URBG>
Chain gibbs_chain(const RbmModel& m, const Matrix& X0, int k, Mode mode, URBG& rng) {
  if (k < 1) throw invalid_argument("gibbs_chain: k must be >= 1");
  Chain c;
  Matrix x = X0;
  for (int step = 0; step < k; ++step) {
    Matrix alpha = forward_field(m, x);
    const Matrix h = mode == Mode::deterministic ? tca_eval(m.hid, alpha) : tca_sample(m.hid, alpha, rng);
    if (step == 0) c.alpha0 = std::move(alpha);
    c.beta = backward_field(m, h);
    x = mode == Mode::deterministic ? base_eval(m.vis, c.beta) : base_sample(m.vis, c.beta, rng);
  }
  c.x = std::move(x);
  return c;
}

// One value per row.
inline Vector free_energy(const RbmModel& m, const Matrix& X) {
  const Matrix alpha = forward_field(m, X);
  return -(X * m.a) - tca_logpartition_rowsum(m.hid, alpha);
}

inline double free_energy(const RbmModel& m, const Vector& x) {
  detail::require_shape(x.size() == m.W.rows(), "free_energy: input length != visible units");
  return free_energy(m, Matrix(x.transpose()))(0);
}

// g += sum_s coeff_s dF(x_s)/dtheta. TCA blocks are skipped when with_tca is false.
inline void accumulate_free_energy_grads(const RbmModel& m, const Matrix& X, const Vector& coeff, Grads& g,
                                         bool with_tca = true) {
  detail::require_shape(coeff.size() == X.rows(), "free-energy grads: coefficient length mismatch");
  const Matrix alpha = forward_field(m, X);
  const Matrix t = tca_eval(m.hid, alpha);
  const Matrix ct = coeff.asDiagonal() * t;  // S x H
  g.W.noalias() -= X.transpose() * ct;
  g.a.noalias() -= X.transpose() * coeff;
  g.b -= ct.colwise().sum().transpose();
  if (with_tca) {
    Matrix dA = Matrix::Zero(g.A.rows(), g.A.cols()), dB = Matrix::Zero(g.B.rows(), g.B.cols());
    accumulate_logpartition_grads(m.hid, alpha, coeff, dA, dB);
    g.A -= dA;
    g.B -= dB;
  }
}

// log p(x | beta) = sum_j beta_j x_j - L0(beta_j) under the visible base GD.
inline double conditional_loglik(const RbmModel& m, const Vector& x, const Vector& beta) {
  detail::require_shape(x.size() == beta.size() && x.size() == m.W.rows(), "conditional_loglik: length mismatch");
  double acc = 0.0;
  for (Eigen::Index j = 0; j < x.size(); ++j) {
    if (!in_support(m.vis, x(j))) throw invalid_argument("conditional_loglik: x outside visible support");
    acc += beta(j) * x(j) - base_logpartition(m.vis, beta(j));
  }
  if (m.vis == BaseKind::linear_gaussian) {
    // unit-variance Gaussian base measure
    acc += -0.5 * x.squaredNorm() - 0.5 * static_cast<double>(x.size()) * std::log(2.0 * std::numbers::pi);
  }
  return acc;
}

// Per-row conditional log-likelihood.
inline Vector conditional_loglik(const RbmModel& m, const Matrix& X, const Matrix& beta) {
  detail::require_shape(X.rows() == beta.rows() && X.cols() == beta.cols() && X.cols() == m.W.rows(),
                        "conditional_loglik: shape mismatch");
  Vector out = Vector::Zero(X.rows());
  for (Eigen::Index j = 0; j < X.cols(); ++j) {
    for (Eigen::Index s = 0; s < X.rows(); ++s) {
      const double x = X(s, j);
      if (!in_support(m.vis, x)) throw invalid_argument("conditional_loglik: x outside visible support");
      out(s) += beta(s, j) * x - base_logpartition(m.vis, beta(s, j));
    }
  }
  if (m.vis == BaseKind::linear_gaussian)
    out.array() -= 0.5 * X.rowwise().squaredNorm().array() +
                   0.5 * static_cast<double>(X.cols()) * std::log(2.0 * std::numbers::pi);
  return out;
}

struct CdOptions {
  int k = 1;
  double lr = 0.05;
  double tca_lr = 0.01;
  bool freeze_tca = false;
  Mode mode = Mode::deterministic;
  bool batch_loglik = true;  // fill BatchMetrics::cond_ll
};

struct BatchMetrics {
  double mse = 0.0;      // mean over pixels and samples
  double cond_ll = 0.0;  // mean over samples of the per-sample sum
};

struct CdGradient {
  Grads grads;  // batch-mean of dF(data)/dtheta - dF(recon)/dtheta
  BatchMetrics metrics;
};

template <class URBG>
CdGradient cd_gradient(const RbmModel& m, const Matrix& batch, const CdOptions& opt, URBG& rng) {
  if (batch.rows() == 0) throw invalid_argument("cd_step: empty batch");
  const Chain chain = gibbs_chain(m, batch, opt.k, opt.mode, rng);
  const double inv = 1.0 / static_cast<double>(batch.rows());
  CdGradient out{Grads::zeros_like(m), {}};
  const Vector pos = Vector::Constant(batch.rows(), inv);
  accumulate_free_energy_grads(m, batch, pos, out.grads, !opt.freeze_tca);
  accumulate_free_energy_grads(m, chain.x, -pos, out.grads, !opt.freeze_tca);
  out.metrics.mse = (batch - chain.x).squaredNorm() / static_cast<double>(batch.size());
  if (opt.batch_loglik) out.metrics.cond_ll = conditional_loglik(m, batch, chain.beta).mean();
  return out;
}

// theta <- theta - rate * g; the TCA blocks use tca_lr and are untouched when frozen.
inline void apply_update(RbmModel& m, const Grads& g, double lr, double tca_lr, bool freeze_tca) {
  if (!g.W.allFinite() || !g.a.allFinite() || !g.b.allFinite() || (!freeze_tca && (!g.A.allFinite() || !g.B.allFinite())))
    throw training_failure("RBM update: non-finite gradient");
  m.W -= lr * g.W;
  m.a -= lr * g.a;
  m.b -= lr * g.b;
  if (!freeze_tca) {
    m.hid.A -= tca_lr * g.A;
    m.hid.B -= tca_lr * g.B;
  }
}

struct CdResult {
  RbmModel model;
  BatchMetrics metrics;
};

template <class URBG>
CdResult cd_step(const RbmModel& m, const Matrix& batch, const CdOptions& opt, URBG& rng) {
  auto g = cd_gradient(m, batch, opt, rng);
  CdResult res{m, g.metrics};
  apply_update(res.model, g.grads, opt.lr, opt.tca_lr, opt.freeze_tca);
  return res;
}

// Reconstruction quality after k deterministic alternations over a whole
// dataset: per-pixel MSE and mean per-sample conditional log-likelihood.
inline BatchMetrics reconstruction_metrics(const RbmModel& m, const Matrix& X, int k = 1) {
  if (X.rows() == 0) throw invalid_argument("reconstruction_metrics: empty dataset");
  for (Eigen::Index s = 0; s < X.rows(); ++s)
    for (Eigen::Index j = 0; j < X.cols(); ++j)
      if (!in_support(m.vis, X(s, j))) throw invalid_argument("reconstruction_metrics: x outside visible support");
  const auto n = static_cast<std::size_t>(X.rows());
  Vector sq(X.rows()), ll(X.rows());
  parallel_chunks(n, [&](std::size_t begin, std::size_t end) {
    const auto rows = static_cast<Eigen::Index>(end - begin);
    const Matrix part = X.middleRows(static_cast<Eigen::Index>(begin), rows);
    rng_t unused(0);
    const Chain c = gibbs_chain(m, part, k, Mode::deterministic, unused);
    sq.segment(static_cast<Eigen::Index>(begin), rows) = (part - c.x).rowwise().squaredNorm();
    ll.segment(static_cast<Eigen::Index>(begin), rows) = conditional_loglik(m, part, c.beta);
  });
  return {sq.sum() / static_cast<double>(X.size()), ll.mean()};
}

// One pass over X in seeded random batches; returns the batch-averaged metrics.
template <class URBG>
BatchMetrics train_epoch(RbmModel& m, const Matrix& X, const CdOptions& opt, std::size_t batch_size, URBG& rng) {
  BatchMetrics acc;
  const auto blocks = data::batches(static_cast<std::size_t>(X.rows()), batch_size, rng());
  for (const auto& idx : blocks) {
    const Matrix batch = data::gather_rows(X, idx);
    auto res = cd_step(m, batch, opt, rng);
    m = std::move(res.model);
    acc.mse += res.metrics.mse / static_cast<double>(blocks.size());
    acc.cond_ll += res.metrics.cond_ll / static_cast<double>(blocks.size());
  }
  return acc;
}

struct EpochRecord {
  int epoch = 0;  // epochs completed so far, across phases
  char phase = 'a';
  double mse = 0.0;
  double cond_ll = 0.0;
};

// Stops a phase once the best MSE has not improved by rel_tol within `window` epochs.
class PlateauDetector {
 public:
  PlateauDetector(int window, double rel_tol) : window_(window), rel_tol_(rel_tol) {}

  bool update(double mse) {
    if (mse < best_ * (1.0 - rel_tol_)) {
      best_ = mse;
      since_ = 0;
      return false;
    }
    return ++since_ >= window_;
  }

 private:
  int window_;
  double rel_tol_;
  double best_ = std::numeric_limits<double>::infinity();
  int since_ = 0;
};

struct PhaseOptions {
  int mixtures = 3;
  Mode mode = Mode::deterministic;
  bool plateau_stop = false;  // end phases (a) and (b) early on a plateau
  int plateau_window = 25;
  double plateau_tol = 1e-3;
};

// Three-phase layer training: (a) base activation (TCA reduced to M=1 and
// frozen), (b) M-component TCA initialised near the base and frozen,
// (c) TCA trainable unless cfg.freeze_tca. on_epoch receives a record at the
// start of every phase and after every epoch (metrics on the full X).
template <class URBG, class OnEpoch>
RbmModel train_phases(RbmModel m, const Matrix& X, const TrainConfig& cfg, const PhaseOptions& popt, URBG& rng,
                      OnEpoch&& on_epoch) {
  const BaseKind hid_base = m.hid.base;
  int epoch = 0;
  auto run = [&](char phase, int epochs, bool freeze) {
    auto start = reconstruction_metrics(m, X);
    on_epoch(EpochRecord{epoch, phase, start.mse, start.cond_ll}, m);
    CdOptions opt{cfg.cd_k, cfg.lr, cfg.tca_lr, freeze, popt.mode, false};
    PlateauDetector plateau(popt.plateau_window, popt.plateau_tol);
    for (int e = 0; e < epochs; ++e) {
      train_epoch(m, X, opt, cfg.batch, rng);
      ++epoch;
      const auto met = reconstruction_metrics(m, X);
      on_epoch(EpochRecord{epoch, phase, met.mse, met.cond_ll}, m);
      if (popt.plateau_stop && phase != 'c' && plateau.update(met.mse)) break;
    }
  };
  m.hid = TcaParams::reduced(hid_base, m.hidden(), 1);
  run('a', cfg.epochs_a, true);
  m.hid = TcaParams::base_equivalent(hid_base, m.hidden(), popt.mixtures, rng, cfg.init_spread);
  run('b', cfg.epochs_b, true);
  run('c', cfg.epochs_c, cfg.freeze_tca);
  return m;
}

}  // namespace tca::rbm
