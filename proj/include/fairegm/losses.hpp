#pragma once

#include <vector>

#include "fairegm/graph.hpp"
#include "fairegm/linalg.hpp"

namespace fairegm {

// Scalar weight applied to positive adjacency entries so that total positive
// and negative loss weight balance: (n^2 - 2|E|) / (2|E|).
struct PosWeight {
  double pos_w = 1.0;
};

PosWeight pos_weight(const Graph& g);

// Mean weighted binary cross entropy between the loop-free adjacency and
// sigma(Phi Phi^T), reduced over all n^2 entries. Evaluated in row blocks;
// the n x n probability matrix is never materialized. Probabilities are
// clamped to [1e-12, 1 - 1e-12].
double reconstruction_loss(const DenseMatrix& phi, const Graph& g, PosWeight pw);

// Normalized similarity-weighted sensitive-group distribution seen from
// node v: raw_j = mean over u != v of sigma(Phi_v . Phi_u) * S_uj, then
// normalized to sum to 1.
std::vector<double> group_similarity(const DenseMatrix& phi, const Graph& g, int v);

struct LinkDivergence {
  double sum = 0.0;   // sum over nodes of KL(P_S || f(v)), natural log
  double mean = 0.0;  // sum / n, reported alongside
};

LinkDivergence link_divergence(const DenseMatrix& phi, const Graph& g);

// reconstruction_loss + lambda * link_divergence (sum form).
double augmented_loss(const DenseMatrix& phi, const Graph& g, PosWeight pw, double lambda);

// Clamp floor shared by the BCE and KL evaluations.
inline constexpr double kProbClamp = 1e-12;

}  // namespace fairegm
