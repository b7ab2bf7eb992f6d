#pragma once

#include <cstdint>
#include <map>
#include <vector>

#include "fairegm/graph.hpp"
#include "fairegm/linalg.hpp"
#include "fairegm/model.hpp"
#include "fairegm/rng.hpp"

namespace fairegm {

// Logistic-regression edge classifier over edge feature vectors.
struct EdgeClassifier {
  std::vector<double> weights;
  double bias = 0.0;

  double score(const double* features) const;
};

// One row per edge: the Hadamard product of the endpoint embeddings.
DenseMatrix edge_features(const Embeddings& emb, const std::vector<Edge>& edges);

// Full-batch gradient descent on mean log-loss. Features are standardized
// internally for conditioning and the affine transform is folded back into
// the returned weights, so scores are a function of the raw features.
// Deterministic given rng and input order.
EdgeClassifier fit_classifier(const DenseMatrix& features, const std::vector<int>& labels,
                              Rng& rng, int iters, double lr);

// Exact Mann-Whitney statistic: P(score+ > score-) + 0.5 P(tie).
double auroc(const std::vector<double>& scores, const std::vector<int>& labels);

// Harmonic mean of precision and recall with positives predicted at
// score > threshold; 0 when nothing is predicted positive.
double f1(const std::vector<double>& scores, const std::vector<int>& labels,
          double threshold = 0.5);

// Mean over nodes of KL(P_S || pi(kNN(u))) where the k nearest neighbors are
// taken by sigma(Phi_u . Phi_v) descending (ties by ascending node index)
// and pi is the epsilon-smoothed group distribution of those neighbors
// (counts + 1e-4, renormalized).
double dp_at_k(const Embeddings& emb, const Graph& g, int k);

inline constexpr double kDpSmoothing = 1e-4;

struct MetricsRecord {
  std::uint64_t seed = 0;
  double l_r = 0.0;
  double l_d_sum = 0.0;
  double l_d_mean = 0.0;
  double auroc = 0.0;
  double f1 = 0.0;
  std::map<int, double> dp;  // k -> DP@k
};

struct MeanStd {
  double mean = 0.0;
  double std = 0.0;  // sample standard deviation (n-1)
};

struct SummaryRecord {
  MeanStd l_r, l_d_sum, l_d_mean, auroc, f1;
  std::map<int, MeanStd> dp;
};

// Per-metric mean and sample std over >= 2 records.
SummaryRecord summarize(const std::vector<MetricsRecord>& records);

struct EvalOptions {
  std::vector<int> k_list = {10, 20, 40};
  int classifier_iters = 500;
  double classifier_lr = 0.5;
};

// Post-training evaluation of one run: losses on the training graph, the
// logistic-regression AUROC/F1 protocol over the held-out edges, and DP@k.
MetricsRecord evaluate_run(const Graph& train, const std::vector<Edge>& test_pos,
                           const Embeddings& emb, std::uint64_t seed, const EvalOptions& opts);

}  // namespace fairegm
