#include "fairegm/training.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

#include "fairegm/autodiff.hpp"
#include "fairegm/errors.hpp"
#include "fairegm/losses.hpp"
#include "fairegm/parallel.hpp"

namespace fairegm {

void adam_step(AdamState& state, DenseMatrix& param, const DenseMatrix& grad, double lr) {
  if (!param.same_shape(grad) || !param.same_shape(state.m))
    throw std::invalid_argument("adam_step: shape mismatch");
  ++state.t;
  const double bc1 = 1.0 - std::pow(AdamState::beta1, double(state.t));
  const double bc2 = 1.0 - std::pow(AdamState::beta2, double(state.t));
  double* m = state.m.data();
  double* v = state.v.data();
  double* p = param.data();
  const double* g = grad.data();
  for (std::int64_t i = 0; i < param.size(); ++i) {
    m[i] = AdamState::beta1 * m[i] + (1.0 - AdamState::beta1) * g[i];
    v[i] = AdamState::beta2 * v[i] + (1.0 - AdamState::beta2) * g[i] * g[i];
    const double mhat = m[i] / bc1;
    const double vhat = v[i] / bc2;
    p[i] -= lr * mhat / (std::sqrt(vhat) + AdamState::eps);
  }
}

namespace {

struct NamedParam {
  const char* name;
  DenseMatrix* matrix;
  NodeId node = -1;
};

// Builds the variant's model expression on `tape` and returns the embedding
// node. Registers every entry of `params` as a tape leaf.
NodeId build_model_expr(Tape& tape, std::vector<NamedParam>& params, const ModelParams& mp,
                        const SparseMatrix& a_hat, const DenseMatrix& features,
                        const DenseMatrix& af) {
  for (auto& p : params) p.node = tape.parameter(p.matrix);
  auto find = [&](const char* name) -> NodeId {
    for (const auto& p : params)
      if (std::string(p.name) == name) return p.node;
    return -1;
  };

  NodeId message;
  switch (mp.variant) {
    case Variant::Base:
    case Variant::AUG:
      message = tape.constant(af);
      break;
    case Variant::GFO:
      message = tape.add(tape.constant(af), find("w_f"));
      break;
    case Variant::CFO:
      message = tape.add(tape.constant(af), tape.matmul(find("a_star"), find("f_star")));
      break;
    case Variant::FEW:
      message = tape.edge_weighted_spmm(a_hat, find("w_f"), features);
      break;
    default:
      throw std::invalid_argument("build_model_expr: unknown variant");
  }

  auto activate = [&](Activation act, NodeId x) {
    switch (act) {
      case Activation::Identity:
        return x;
      case Activation::Relu:
        return tape.relu(x);
      case Activation::Sigmoid:
        return tape.sigmoid(x);
    }
    return x;
  };

  const NodeId hidden = activate(mp.act_hidden, tape.matmul(message, find("w0")));
  const NodeId out = tape.matmul(tape.spmm(a_hat, hidden), find("w1"));
  return activate(mp.act_out, out);
}

void check_finite(double value, const char* which, int epoch) {
  if (!std::isfinite(value))
    throw DivergenceError(std::string(which) + " became non-finite", epoch);
}

}  // namespace

TrainResult joint_train(const Graph& g, const TrainConfig& cfg, const TrainObserver& observer) {
  if (cfg.learning_rate <= 0.0) throw std::invalid_argument("joint_train: learning rate must be > 0");
  if (cfg.epochs < 1) throw std::invalid_argument("joint_train: epochs must be >= 1");
  if (cfg.lambda_f < 0.0) throw std::invalid_argument("joint_train: lambda_f must be >= 0");
  if ((cfg.variant == Variant::CFO) != (cfg.cfo_c > 0))
    throw std::invalid_argument("joint_train: c must be given iff the variant is CFO");
  if (cfg.threads > 0) set_num_threads(cfg.threads);

  const SparseMatrix a_hat = normalize_adjacency(g);
  const PosWeight pw = pos_weight(g);
  Rng rng(cfg.seed);

  TrainResult result;
  result.params =
      init_params(g, a_hat, cfg.variant, cfg.cfo_c, cfg.hidden_dim, cfg.embed_dim, rng);
  ModelParams& mp = result.params;
  mp.act_hidden = cfg.act_hidden;
  mp.act_out = cfg.act_out;

  const DenseMatrix af = spmm(a_hat, g.features);

  std::vector<NamedParam> utility_params = {{"w0", &mp.w0}, {"w1", &mp.w1}};
  std::vector<NamedParam> fairness_params;
  switch (cfg.variant) {
    case Variant::GFO:
      fairness_params = {{"w_f", &mp.fair_gfo}};
      break;
    case Variant::CFO:
      fairness_params = {{"a_star", &mp.fair_cfo_a}, {"f_star", &mp.fair_cfo_f}};
      break;
    case Variant::FEW:
      fairness_params = {{"w_f", &mp.fair_few}};
      break;
    default:
      break;
  }

  const bool joint_fairness = !fairness_params.empty();
  const bool augmented = cfg.variant == Variant::AUG;

  // utility tape: model expression ending in the reconstruction loss
  Tape tape_r;
  std::vector<NamedParam> all_params = utility_params;
  all_params.insert(all_params.end(), fairness_params.begin(), fairness_params.end());
  std::vector<NamedParam> tape_r_params = all_params;
  NodeId phi_r = build_model_expr(tape_r, tape_r_params, mp, a_hat, g.features, af);
  const NodeId bce_node = tape_r.weighted_bce_mean(phi_r, BceTarget::from_graph(g, pw.pos_w));
  NodeId kl_node_aug = -1;
  if (augmented) {
    kl_node_aug = tape_r.kl_normalized_rows(phi_r, GroupTarget::from_graph(g));
    tape_r.set_output(tape_r.add(bce_node, tape_r.scale(kl_node_aug, cfg.lambda_f)));
  } else {
    tape_r.set_output(bce_node);
  }
  std::vector<NodeId> wrt_utility = {tape_r_params[0].node, tape_r_params[1].node};

  // fairness tape: same expression ending in the link divergence
  Tape tape_d;
  std::vector<NamedParam> tape_d_params = all_params;
  std::vector<NodeId> wrt_fairness;
  if (joint_fairness) {
    NodeId phi_d = build_model_expr(tape_d, tape_d_params, mp, a_hat, g.features, af);
    tape_d.set_output(tape_d.kl_normalized_rows(phi_d, GroupTarget::from_graph(g)));
    for (std::size_t i = utility_params.size(); i < tape_d_params.size(); ++i)
      wrt_fairness.push_back(tape_d_params[i].node);
  }

  AdamState adam_w0(mp.w0.rows(), mp.w0.cols());
  AdamState adam_w1(mp.w1.rows(), mp.w1.cols());
  std::vector<AdamState> adam_fair;
  for (const auto& p : fairness_params) adam_fair.emplace_back(p.matrix->rows(), p.matrix->cols());

  result.history.l_r.reserve(cfg.epochs);
  result.history.l_d.reserve(cfg.epochs);

  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    // (i) utility step over {W0, W1}
    const double loss_r = tape_r.forward();
    const double epoch_l_r = augmented ? tape_r.value(bce_node)(0, 0) : loss_r;
    check_finite(epoch_l_r, "reconstruction loss", epoch);
    GradientSet grads = tape_r.backward(wrt_utility);
    adam_step(adam_w0, mp.w0, grads.at(wrt_utility[0]), cfg.learning_rate);
    adam_step(adam_w1, mp.w1, grads.at(wrt_utility[1]), cfg.learning_rate);
    if (observer) observer({epoch, 0, {"w0", "w1"}});

    // (ii) fairness step over the variant's fairness tensors
    double epoch_l_d;
    if (joint_fairness) {
      epoch_l_d = tape_d.forward();
      check_finite(epoch_l_d, "link divergence", epoch);
      GradientSet fair_grads = tape_d.backward(wrt_fairness);
      std::vector<std::string> updated;
      for (std::size_t i = 0; i < wrt_fairness.size(); ++i) {
        const DenseMatrix scaled = scale(fair_grads.at(wrt_fairness[i]), cfg.lambda_f);
        adam_step(adam_fair[i], *fairness_params[i].matrix, scaled, cfg.learning_rate);
        updated.push_back(fairness_params[i].name);
      }
      if (observer) observer({epoch, 1, std::move(updated)});
    } else if (augmented) {
      epoch_l_d = tape_r.value(kl_node_aug)(0, 0);
      check_finite(epoch_l_d, "link divergence", epoch);
    } else {
      // Base: evaluated for the history only, after the utility update
      const Embeddings emb = forward(mp, a_hat, g.features);
      epoch_l_d = link_divergence(emb.phi, g).sum;
      check_finite(epoch_l_d, "link divergence", epoch);
    }

    result.history.l_r.push_back(epoch_l_r);
    result.history.l_d.push_back(epoch_l_d);
  }

  result.embeddings = forward(mp, a_hat, g.features);
  return result;
}

}  // namespace fairegm
