#pragma once

#include <cstddef>
#include <cstdint>

namespace tca {

// Hyperparameters shared by the trainers. Each trainer reads the fields it
// needs; defaults follow the MNIST {3,8,9} experiments.
struct TrainConfig {
  double lr = 0.05;       // weights and biases
  double tca_lr = 0.01;   // TCA log-scales and biases
  int cd_k = 1;
  std::size_t batch = 100;

  // Three-phase protocol: (a) base activation, (b) TCA present but frozen,
  // (c) TCA trainable. Used per layer by the RBM trainers.
  int epochs_a = 100;
  int epochs_b = 20;
  int epochs_c = 100;

  // Generic epoch budget (PDF fit, top layer, up-down, auto-encoder phases).
  int epochs = 500;

  bool freeze_tca = false;
  std::uint64_t seed = 1;

  double lambda_fe = 1.0;    // weight of the free-energy cross-entropy term
  double init_spread = 0.1;  // TCA bias init range, U[-spread, spread]
  double weight_sd = 0.01;   // RBM weight init
};

}  // namespace tca
