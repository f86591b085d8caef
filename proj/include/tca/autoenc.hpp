#pragma once

// Dense feed-forward auto-encoder. Encoder layers carry TCAs, decoder
// layers use the base activation. Trained by SGD or Adam on the per-pixel MSE.

#include <cmath>
#include <cstddef>
#include <limits>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "tca/config.hpp"
#include "tca/data.hpp"
#include "tca/error.hpp"
#include "tca/parallel.hpp"
#include "tca/tca.hpp"

namespace tca::ae {

struct DenseLayer {
  Matrix W;  // in x out
  Vector b;  // out
  BaseKind base = BaseKind::ted;
  std::optional<TcaParams> tca;  // absent: plain base activation

  Eigen::Index in() const { return W.rows(); }
  Eigen::Index out() const { return W.cols(); }

  friend bool operator==(const DenseLayer& l, const DenseLayer& r) {
    return l.W.rows() == r.W.rows() && l.W.cols() == r.W.cols() && l.W == r.W && l.b == r.b && l.base == r.base &&
           l.tca == r.tca;
  }
};

struct AeModel {
  std::vector<DenseLayer> layers;

  Eigen::Index input_dim() const { return layers.empty() ? 0 : layers.front().in(); }

  void validate() const {
    if (layers.empty()) throw invalid_argument("AeModel: no layers");
    for (std::size_t l = 0; l < layers.size(); ++l) {
      const auto& L = layers[l];
      detail::require_shape(L.b.size() == L.out(), "AeModel: bias length != layer width");
      if (l + 1 < layers.size()) detail::require_shape(L.out() == layers[l + 1].in(), "AeModel: widths do not chain");
      if (L.tca) {
        L.tca->validate();
        detail::require_shape(L.tca->units() == L.out(), "AeModel: TCA units != layer width");
      }
    }
    detail::require_shape(layers.back().out() == layers.front().in(), "AeModel: output width != input width");
  }

  friend bool operator==(const AeModel& l, const AeModel& r) { return l.layers == r.layers; }
};

// Encoder dims[0] -> dims[1] -> ... -> dims.back() with TCAs on every
// encoder layer, then the mirrored decoder with base activations. Weights
// ~ U[-r, r], r = gain * sqrt(6 / (in + out)); biases zero; TCAs start at
// the base-equivalent M-component form.
template <class URBG>
AeModel make_autoencoder(const std::vector<Eigen::Index>& dims, BaseKind base, Eigen::Index mixtures, URBG& rng,
                         double gain = 1.0, double init_spread = 0.1) {
  if (dims.size() < 2) throw invalid_argument("make_autoencoder: need at least input and code width");
  for (auto d : dims)
    if (d < 1) throw invalid_argument("make_autoencoder: widths must be positive");
  if (mixtures < 1) throw invalid_argument("make_autoencoder: mixtures must be >= 1");
  AeModel m;
  auto dense = [&](Eigen::Index in, Eigen::Index out) {
    const double r = gain * std::sqrt(6.0 / static_cast<double>(in + out));
    std::uniform_real_distribution<double> U(-r, r);
    DenseLayer L;
    L.W = Matrix::NullaryExpr(in, out, [&] { return U(rng); });
    L.b = Vector::Zero(out);
    L.base = base;
    return L;
  };
  for (std::size_t l = 0; l + 1 < dims.size(); ++l) {
    auto L = dense(dims[l], dims[l + 1]);
    L.tca = TcaParams::base_equivalent(base, dims[l + 1], mixtures, rng, init_spread);
    m.layers.push_back(std::move(L));
  }
  for (std::size_t l = dims.size() - 1; l > 0; --l) m.layers.push_back(dense(dims[l], dims[l - 1]));
  return m;
}

struct Forward {
  std::vector<Matrix> z;    // pre-activations, one per layer
  std::vector<Matrix> act;  // act[0] = input, act[l+1] = output of layer l

  const Matrix& output() const { return act.back(); }
};

inline Matrix activate(const DenseLayer& L, const Matrix& z) { return L.tca ? tca_eval(*L.tca, z) : base_eval(L.base, z); }

inline Forward ae_forward(const AeModel& m, const Matrix& X) {
  detail::require_shape(X.cols() == m.input_dim(), "ae_forward: input width mismatch");
  Forward f;
  f.act.push_back(X);
  for (const auto& L : m.layers) {
    Matrix z = f.act.back() * L.W;
    z.rowwise() += L.b.transpose();
    f.act.push_back(activate(L, z));
    f.z.push_back(std::move(z));
  }
  return f;
}

inline double ae_loss(const Matrix& x_hat, const Matrix& x) {
  detail::require_shape(x_hat.rows() == x.rows() && x_hat.cols() == x.cols(), "ae_loss: shape mismatch");
  if (x.size() == 0) throw invalid_argument("ae_loss: empty batch");
  return (x_hat - x).squaredNorm() / static_cast<double>(x.size());
}

struct LayerGrads {
  Matrix W;
  Vector b;
  Matrix A, B;  // empty for base layers
};

// Gradient of ae_loss(ae_forward(X), X) for every parameter.
inline std::vector<LayerGrads> ae_gradients(const AeModel& m, const Matrix& X, double* loss = nullptr) {
  const Forward f = ae_forward(m, X);
  if (loss) *loss = ae_loss(f.output(), X);
  std::vector<LayerGrads> g(m.layers.size());
  Matrix up = (f.output() - X) * (2.0 / static_cast<double>(X.size()));
  for (std::size_t l = m.layers.size(); l-- > 0;) {
    const auto& L = m.layers[l];
    Matrix dz;
    if (L.tca) {
      auto tg = tca_grads(*L.tca, f.z[l], up);
      dz = std::move(tg.dx);
      g[l].A = std::move(tg.dA);
      g[l].B = std::move(tg.dB);
    } else {
      dz = up.cwiseProduct(f.z[l].unaryExpr([k = L.base](double u) { return base_deriv(k, u); }));
    }
    g[l].W = f.act[l].transpose() * dz;
    g[l].b = dz.colwise().sum().transpose();
    if (l > 0) up = dz * L.W.transpose();
  }
  return g;
}

namespace detail {

inline void require_finite_model(const AeModel& m, const char* what) {
  for (const auto& L : m.layers)
    if (!L.W.allFinite() || !L.b.allFinite() || (L.tca && (!L.tca->A.allFinite() || !L.tca->B.allFinite())))
      throw training_failure(std::string(what) + ": update produced a non-finite parameter");
}

}  // namespace detail

// One SGD step on `batch`; returns the pre-step batch loss.
inline double ae_train_step(AeModel& m, const Matrix& batch, double lr, bool freeze_tca) {
  double loss = 0.0;
  const auto g = ae_gradients(m, batch, &loss);
  auto finite = [](const auto& x) { return x.size() == 0 || x.allFinite(); };
  for (const auto& lg : g)
    if (!std::isfinite(loss) || !finite(lg.W) || !finite(lg.b) || !finite(lg.A) || !finite(lg.B))
      throw training_failure("ae_train_step: non-finite gradient");
  for (std::size_t l = 0; l < m.layers.size(); ++l) {
    auto& L = m.layers[l];
    L.W -= lr * g[l].W;
    L.b -= lr * g[l].b;
    if (L.tca && !freeze_tca) {
      L.tca->A -= lr * g[l].A;
      L.tca->B -= lr * g[l].B;
    }
  }
  detail::require_finite_model(m, "ae_train_step");
  return loss;
}

// Adam moment estimates, one slot per parameter block.
struct AdamState {
  double beta1 = 0.9, beta2 = 0.999, eps = 1e-8;
  long step = 0;
  std::vector<LayerGrads> m, v;
};

// One Adam step on `batch`; returns the pre-step batch loss.
inline double ae_adam_step(AeModel& model, const Matrix& batch, double lr, bool freeze_tca, AdamState& st) {
  double loss = 0.0;
  const auto g = ae_gradients(model, batch, &loss);
  auto finite = [](const auto& x) { return x.size() == 0 || x.allFinite(); };
  for (const auto& lg : g)
    if (!std::isfinite(loss) || !finite(lg.W) || !finite(lg.b) || !finite(lg.A) || !finite(lg.B))
      throw training_failure("ae_adam_step: non-finite gradient");
  if (st.m.size() != g.size()) {
    st.m.clear();
    for (const auto& lg : g)
      st.m.push_back({Matrix::Zero(lg.W.rows(), lg.W.cols()), Vector::Zero(lg.b.size()),
                      Matrix::Zero(lg.A.rows(), lg.A.cols()), Matrix::Zero(lg.B.rows(), lg.B.cols())});
    st.v = st.m;
    st.step = 0;
  }
  ++st.step;
  const double c1 = 1.0 - std::pow(st.beta1, static_cast<double>(st.step));
  const double c2 = 1.0 - std::pow(st.beta2, static_cast<double>(st.step));
  auto update = [&](auto& param, const auto& grad, auto& m1, auto& m2) {
    m1 = st.beta1 * m1 + (1.0 - st.beta1) * grad;
    m2 = st.beta2 * m2 + (1.0 - st.beta2) * grad.cwiseProduct(grad);
    param.array() -= lr * (m1.array() / c1) / ((m2.array() / c2).sqrt() + st.eps);
  };
  for (std::size_t l = 0; l < model.layers.size(); ++l) {
    auto& L = model.layers[l];
    update(L.W, g[l].W, st.m[l].W, st.v[l].W);
    update(L.b, g[l].b, st.m[l].b, st.v[l].b);
    if (L.tca && !freeze_tca) {
      update(L.tca->A, g[l].A, st.m[l].A, st.v[l].A);
      update(L.tca->B, g[l].B, st.m[l].B, st.v[l].B);
    }
  }
  detail::require_finite_model(model, "ae_adam_step");
  return loss;
}

// Mean per-pixel squared error over all rows.
inline double ae_evaluate(const AeModel& m, const Matrix& X) {
  if (X.rows() == 0) throw invalid_argument("ae_evaluate: empty dataset");
  const std::size_t n = static_cast<std::size_t>(X.rows());
  std::vector<double> sums(n);
  parallel_chunks(n, [&](std::size_t begin, std::size_t end) {
    const auto rows = static_cast<Eigen::Index>(end - begin);
    const Matrix part = X.middleRows(static_cast<Eigen::Index>(begin), rows);
    const Matrix err = ae_forward(m, part).output() - part;
    for (Eigen::Index s = 0; s < rows; ++s) sums[begin + static_cast<std::size_t>(s)] = err.row(s).squaredNorm();
  });
  double total = 0.0;
  for (double s : sums) total += s;
  return total / static_cast<double>(X.size());
}

struct AeEpochRecord {
  int epoch = 0;
  char phase = 'b';  // 'b': TCA frozen, 'c': TCA trainable
  double train_mse = 0.0;
};

struct AePhaseOptions {
  int max_epochs = 500;
  bool freeze_tca = true;
  int window = 25;       // convergence: no >= rel_tol improvement within window epochs
  double rel_tol = 1e-3;
  bool adam = false;     // Adam instead of plain SGD
};

// Trains one phase until convergence or max_epochs; returns epochs run.
template <class URBG, class OnEpoch>
int train_phase(AeModel& m, const Matrix& X, std::size_t batch, double lr, AdamState& adam,
                const AePhaseOptions& opt, char phase, int first_epoch, URBG& rng, OnEpoch&& on_epoch) {
  double best = std::numeric_limits<double>::infinity();
  int since = 0, e = 0;
  while (e < opt.max_epochs) {
    for (const auto& idx : data::batches(static_cast<std::size_t>(X.rows()), batch, rng())) {
      const Matrix rows = data::gather_rows(X, idx);
      if (opt.adam)
        ae_adam_step(m, rows, lr, opt.freeze_tca, adam);
      else
        ae_train_step(m, rows, lr, opt.freeze_tca);
    }
    ++e;
    const double mse = ae_evaluate(m, X);
    on_epoch(AeEpochRecord{first_epoch + e, phase, mse});
    if (mse < best * (1.0 - opt.rel_tol)) {
      best = mse;
      since = 0;
    } else if (++since >= opt.window) {
      break;
    }
  }
  return e;
}

}  // namespace tca::ae
