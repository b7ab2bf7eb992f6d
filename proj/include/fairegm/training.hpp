#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "fairegm/graph.hpp"
#include "fairegm/model.hpp"

namespace fairegm {

// Adam moments for a single parameter tensor. beta1/beta2/eps are the
// standard defaults and fixed.
struct AdamState {
  DenseMatrix m, v;
  long long t = 0;
  static constexpr double beta1 = 0.9;
  static constexpr double beta2 = 0.999;
  static constexpr double eps = 1e-8;

  explicit AdamState(int rows = 0, int cols = 0) : m(rows, cols), v(rows, cols) {}
};

// One bias-corrected Adam update, in place.
void adam_step(AdamState& state, DenseMatrix& param, const DenseMatrix& grad, double lr);

struct TrainConfig {
  Variant variant = Variant::Base;
  int cfo_c = 0;          // required iff variant == CFO
  double learning_rate = 1e-4;
  int epochs = 300;
  double lambda_f = 1.0;  // fairness gradient scale; also the AUG lambda
  std::uint64_t seed = 1;
  int hidden_dim = 32;
  int embed_dim = 16;
  Activation act_hidden = Activation::Relu;
  Activation act_out = Activation::Identity;
  int threads = 0;  // 0 = use the process-wide kernel thread setting
};

struct TrainHistory {
  std::vector<double> l_r;  // per epoch
  std::vector<double> l_d;  // per epoch (sum form)
};

struct TrainResult {
  ModelParams params;
  Embeddings embeddings;
  TrainHistory history;
};

// Update provenance event, for tests that assert the weight-separation
// contract. phase 0 = utility step, phase 1 = fairness step.
struct TrainStep {
  int epoch;
  int phase;
  std::vector<std::string> updated_params;
};
using TrainObserver = std::function<void(const TrainStep&)>;

// Joint two-gradient loop: per epoch the utility loss updates {W0, W1} only
// and the fairness loss, scaled by lambda_f, updates the fairness tensors
// only, each with its own Adam state, in that order. Base skips the fairness
// step; AUG runs a single optimizer on L_R + lambda * L_D over {W0, W1}.
// Throws DivergenceError naming the epoch if a loss becomes non-finite.
TrainResult joint_train(const Graph& g, const TrainConfig& cfg,
                        const TrainObserver& observer = nullptr);

}  // namespace fairegm
