#pragma once

// Deep belief network: stacked RBMs plus a top classifier RBM whose visible
// layer is [features | one-hot label]. Classification compares the free
// energy of the top RBM across label hypotheses.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <limits>
#include <vector>

#include "tca/config.hpp"
#include "tca/data.hpp"
#include "tca/error.hpp"
#include "tca/parallel.hpp"
#include "tca/rbm.hpp"

namespace tca::dbn {

struct DbnModel {
  std::vector<rbm::RbmModel> stack;
  rbm::RbmModel top;  // visible = feature dim + class count, label block last
  std::vector<int> classes;

  Eigen::Index class_count() const { return static_cast<Eigen::Index>(classes.size()); }
  Eigen::Index feature_dim() const { return top.visible() - class_count(); }
  Eigen::Index input_dim() const { return stack.empty() ? feature_dim() : stack.front().visible(); }

  void validate() const {
    if (classes.empty()) throw invalid_argument("DbnModel: empty class list");
    for (std::size_t l = 0; l < stack.size(); ++l) {
      stack[l].validate();
      if (l + 1 < stack.size())
        detail::require_shape(stack[l].hidden() == stack[l + 1].visible(), "DbnModel: stack dimensions do not chain");
    }
    top.validate();
    if (!stack.empty())
      detail::require_shape(stack.back().hidden() + class_count() == top.visible(),
                            "DbnModel: top visible != features + classes");
  }

  friend bool operator==(const DbnModel& l, const DbnModel& r) {
    return l.stack == r.stack && l.top == r.top && l.classes == r.classes;
  }
};

// Sequential hidden_step through the stack; identity for an empty stack.
template <class URBG>
Matrix stack_forward(const DbnModel& d, const Matrix& X, rbm::Mode mode, URBG& rng) {
  Matrix v = X;
  for (const auto& layer : d.stack) v = rbm::hidden_step(layer, v, mode, rng);
  return v;
}

inline Matrix stack_forward(const DbnModel& d, const Matrix& X) {
  rng_t unused(0);
  return stack_forward(d, X, rbm::Mode::deterministic, unused);
}

inline Matrix join_labels(const Matrix& features, const Matrix& onehot) {
  detail::require_shape(features.rows() == onehot.rows(), "join_labels: row count mismatch");
  Matrix out(features.rows(), features.cols() + onehot.cols());
  out << features, onehot;
  return out;
}

// scores(s, y) = -F_top([features_s | e_y]).
inline Matrix class_scores(const DbnModel& d, const Matrix& features) {
  detail::require_shape(features.cols() == d.feature_dim(), "class_scores: feature width mismatch");
  const Eigen::Index C = d.class_count();
  Matrix scores(features.rows(), C);
  Matrix joined(features.rows(), features.cols() + C);
  joined.leftCols(features.cols()) = features;
  for (Eigen::Index y = 0; y < C; ++y) {
    joined.rightCols(C).setZero();
    joined.col(features.cols() + y).setOnes();
    scores.col(y) = -rbm::free_energy(d.top, joined);
  }
  return scores;
}

struct Classification {
  int label;
  Vector scores;  // one per class, in class-list order
};

inline std::size_t argmax_lowest(const Eigen::Ref<const RowVector>& v) {
  std::size_t best = 0;
  for (Eigen::Index k = 1; k < v.size(); ++k)
    if (v(k) > v(static_cast<Eigen::Index>(best))) best = static_cast<std::size_t>(k);
  return best;
}

inline Classification classify_free_energy(const DbnModel& d, const Vector& x) {
  const Matrix features = stack_forward(d, Matrix(x.transpose()));
  const Matrix scores = class_scores(d, features);
  return {d.classes[argmax_lowest(scores.row(0))], scores.row(0).transpose()};
}

// Labels for every row, evaluated in parallel chunks.
inline std::vector<int> classify(const DbnModel& d, const Matrix& X) {
  std::vector<int> labels(static_cast<std::size_t>(X.rows()));
  parallel_chunks(labels.size(), [&](std::size_t begin, std::size_t end) {
    const auto rows = static_cast<Eigen::Index>(end - begin);
    const Matrix scores = class_scores(d, stack_forward(d, X.middleRows(static_cast<Eigen::Index>(begin), rows)));
    for (Eigen::Index s = 0; s < rows; ++s)
      labels[begin + static_cast<std::size_t>(s)] = d.classes[argmax_lowest(scores.row(s))];
  });
  return labels;
}

inline double classification_error(const DbnModel& d, const data::Dataset& ds) {
  if (ds.size() == 0) throw invalid_argument("classification_error: empty dataset");
  const auto labels = classify(d, ds.X);
  std::size_t wrong = 0;
  for (std::size_t s = 0; s < labels.size(); ++s) wrong += labels[s] != ds.y[s];
  return static_cast<double>(wrong) / static_cast<double>(labels.size());
}

// Mean cross-entropy of softmax(-F) over the label hypotheses.
inline double fe_cross_entropy(const DbnModel& d, const Matrix& features, const std::vector<int>& labels) {
  detail::require_shape(static_cast<std::size_t>(features.rows()) == labels.size(), "fe_cross_entropy: label count");
  const Matrix scores = class_scores(d, features);
  double loss = 0.0;
  for (Eigen::Index s = 0; s < scores.rows(); ++s) {
    const double mx = scores.row(s).maxCoeff();
    const double lse = mx + std::log((scores.row(s).array() - mx).exp().sum());
    loss += lse - scores(s, static_cast<Eigen::Index>(data::class_index(d.classes, labels[static_cast<std::size_t>(s)])));
  }
  return loss / static_cast<double>(scores.rows());
}

// g += d fe_cross_entropy / d(top parameters).
inline void accumulate_fe_cross_entropy_grads(const DbnModel& d, const Matrix& features,
                                              const std::vector<int>& labels, rbm::Grads& g, bool with_tca = true) {
  const Matrix scores = class_scores(d, features);
  const Eigen::Index C = d.class_count();
  const double inv = 1.0 / static_cast<double>(features.rows());
  Matrix prob(scores.rows(), C);
  for (Eigen::Index s = 0; s < scores.rows(); ++s) {
    const double mx = scores.row(s).maxCoeff();
    prob.row(s) = (scores.row(s).array() - mx).exp().matrix();
    prob.row(s) /= prob.row(s).sum();
  }
  Matrix joined(features.rows(), features.cols() + C);
  joined.leftCols(features.cols()) = features;
  for (Eigen::Index y = 0; y < C; ++y) {
    Vector coeff(features.rows());
    for (Eigen::Index s = 0; s < features.rows(); ++s) {
      const bool is_true =
          static_cast<Eigen::Index>(data::class_index(d.classes, labels[static_cast<std::size_t>(s)])) == y;
      // d loss / d score_y = p_y - delta; score = -F
      coeff(s) = -(prob(s, y) - (is_true ? 1.0 : 0.0)) * inv;
    }
    joined.rightCols(C).setZero();
    joined.col(features.cols() + y).setOnes();
    rbm::accumulate_free_energy_grads(d.top, joined, coeff, g, with_tca);
  }
}

struct TopOptions {
  int cd_k = 3;
  rbm::Mode mode = rbm::Mode::stochastic;
  double lambda_fe = 1.0;
};

// One top-layer update: CD on [features | one-hot] plus lambda times the
// free-energy cross-entropy gradient, applied as a single step.
template <class URBG>
rbm::BatchMetrics top_step(DbnModel& d, const Matrix& features, const std::vector<int>& labels, const TopOptions& topt,
                           double lr, double tca_lr, bool freeze_tca, URBG& rng) {
  const Matrix joined = join_labels(features, data::one_hot(labels, d.classes));
  rbm::CdOptions opt{topt.cd_k, lr, tca_lr, freeze_tca, topt.mode, false};
  auto cd = rbm::cd_gradient(d.top, joined, opt, rng);
  if (topt.lambda_fe != 0.0) {
    auto fe = rbm::Grads::zeros_like(d.top);
    accumulate_fe_cross_entropy_grads(d, features, labels, fe, !freeze_tca);
    fe *= topt.lambda_fe;
    cd.grads += fe;
  }
  rbm::apply_update(d.top, cd.grads, lr, tca_lr, freeze_tca);
  return cd.metrics;
}

// Builds a DBN: one RBM per entry of `hidden` and a top RBM with
// `top_hidden` units. Stack TCAs start reduced to the base; the top TCA is
// base-equivalent with M components.
template <class URBG>
DbnModel make_dbn(const data::Dataset& ds, const std::vector<Eigen::Index>& hidden, Eigen::Index top_hidden,
                  BaseKind vis, BaseKind hid, Eigen::Index mixtures, double weight_sd, URBG& rng,
                  double init_spread = 0.1) {
  DbnModel d;
  d.classes = ds.classes;
  Matrix v = ds.X;
  for (Eigen::Index h : hidden) {
    d.stack.push_back(rbm::init_rbm(v, h, vis, hid, 1, weight_sd, rng));
    v = rbm::hidden_mean(d.stack.back(), v);
  }
  d.top = rbm::init_rbm(join_labels(v, data::one_hot(ds.y, d.classes)), top_hidden, vis, hid, 1, weight_sd, rng);
  d.top.hid = TcaParams::base_equivalent(hid, top_hidden, mixtures, rng, init_spread);
  return d;
}

// Trains stack[0] on the data, stack[1] on its deterministic outputs, and
// so on, each with the three-phase schedule. on_epoch(layer, record, model).
template <class URBG, class OnEpoch>
DbnModel train_layerwise(DbnModel d, const Matrix& X, const TrainConfig& cfg, const rbm::PhaseOptions& popt,
                         URBG& rng, OnEpoch&& on_epoch) {
  Matrix v = X;
  for (std::size_t l = 0; l < d.stack.size(); ++l) {
    if (cfg.epochs_a + cfg.epochs_b + cfg.epochs_c > 0) {
      d.stack[l] = rbm::train_phases(d.stack[l], v, cfg, popt, rng,
                                     [&](const rbm::EpochRecord& r, const rbm::RbmModel& m) { on_epoch(l, r, m); });
    }
    v = rbm::hidden_mean(d.stack[l], v);
  }
  return d;
}

struct DbnEpochRecord {
  int epoch = 0;
  bool tca_enabled = false;
  double mse = 0.0;      // layer-1 one-step reconstruction error on the training data
  double cond_ll = 0.0;
  double val_err = 0.0;  // NaN without a validation set
};

inline DbnEpochRecord dbn_metrics(const DbnModel& d, const Matrix& X, const data::Dataset* val, int epoch,
                                  bool tca_enabled) {
  DbnEpochRecord r{epoch, tca_enabled, 0.0, 0.0, std::numeric_limits<double>::quiet_NaN()};
  if (!d.stack.empty()) {
    const auto met = rbm::reconstruction_metrics(d.stack.front(), X);
    r.mse = met.mse;
    r.cond_ll = met.cond_ll;
  }
  if (val != nullptr && val->size() > 0) r.val_err = classification_error(d, *val);
  return r;
}

// Top-layer training on the stack outputs for cfg.epochs epochs.
template <class URBG, class OnEpoch>
DbnModel top_train(DbnModel d, const data::Dataset& ds, const TrainConfig& cfg, const TopOptions& topt,
                   const data::Dataset* val, URBG& rng, OnEpoch&& on_epoch) {
  for (int label : ds.y) data::class_index(d.classes, label);
  const Matrix features = stack_forward(d, ds.X);
  for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
    for (const auto& idx : data::batches(ds.size(), cfg.batch, rng())) {
      std::vector<int> labels;
      labels.reserve(idx.size());
      for (auto s : idx) labels.push_back(ds.y[s]);
      top_step(d, data::gather_rows(features, idx), labels, topt, cfg.lr, cfg.tca_lr, cfg.freeze_tca, rng);
    }
    on_epoch(dbn_metrics(d, ds.X, val, epoch, !cfg.freeze_tca));
  }
  return d;
}

struct UpDownOptions {
  TopOptions top;
  int tca_enable_epoch = -1;  // first epoch with trainable TCAs; -1 keeps them frozen
};

// Simplified tied-weight up-down fine-tuning. Per batch: deterministic up
// pass, top update (CD + free-energy term) with labels injected, then a
// deterministic down pass from the top reconstruction; every stack layer
// takes a free-energy CD step with its up-pass input as the data term and
// the down-pass reconstruction as the model term.
template <class URBG, class OnEpoch>
DbnModel updown_finetune(DbnModel d, const data::Dataset& ds, const TrainConfig& cfg, const UpDownOptions& uopt,
                         const data::Dataset* val, URBG& rng, OnEpoch&& on_epoch) {
  for (int label : ds.y) data::class_index(d.classes, label);
  const std::size_t L = d.stack.size();
  for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
    const bool tca_on = uopt.tca_enable_epoch >= 0 && epoch >= uopt.tca_enable_epoch;
    for (const auto& idx : data::batches(ds.size(), cfg.batch, rng())) {
      std::vector<int> labels;
      labels.reserve(idx.size());
      for (auto s : idx) labels.push_back(ds.y[s]);

      std::vector<Matrix> up{data::gather_rows(ds.X, idx)};
      for (const auto& layer : d.stack) up.push_back(rbm::hidden_mean(layer, up.back()));

      top_step(d, up[L], labels, uopt.top, cfg.lr, cfg.tca_lr, !tca_on, rng);

      // down pass from the top's one-step mean reconstruction of the features
      const Matrix joined = join_labels(up[L], data::one_hot(labels, d.classes));
      const Matrix top_beta = rbm::backward_field(d.top, rbm::hidden_mean(d.top, joined));
      Matrix down = base_eval(d.top.vis, Matrix(top_beta.leftCols(d.feature_dim())));
      const Vector coeff = Vector::Constant(static_cast<Eigen::Index>(idx.size()), 1.0 / static_cast<double>(idx.size()));
      for (std::size_t l = L; l-- > 0;) {
        auto& layer = d.stack[l];
        Matrix recon = base_eval(layer.vis, rbm::backward_field(layer, down));
        auto g = rbm::Grads::zeros_like(layer);
        rbm::accumulate_free_energy_grads(layer, up[l], coeff, g, tca_on);
        rbm::accumulate_free_energy_grads(layer, recon, -coeff, g, tca_on);
        rbm::apply_update(layer, g, cfg.lr, cfg.tca_lr, !tca_on);
        down = std::move(recon);
      }
    }
    on_epoch(dbn_metrics(d, ds.X, val, epoch, tca_on));
  }
  return d;
}

}  // namespace tca::dbn
