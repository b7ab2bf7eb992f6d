#pragma once

#include "fairegm/graph.hpp"
#include "fairegm/linalg.hpp"
#include "fairegm/rng.hpp"

namespace fairegm {

enum class Variant { Base, GFO, CFO, FEW, AUG };
enum class Activation { Identity, Relu, Sigmoid };

const char* variant_name(Variant v);

// Trainable state of the two-layer autoencoder plus the variant-specific
// fairness tensors. Exactly the fields matching `variant` are non-empty:
//   GFO  -> fair_gfo   (n x m additive first-layer bias)
//   CFO  -> fair_cfo_a (n x c) and fair_cfo_f (c x m), rank-bounded product
//   FEW  -> fair_few   (nnz x 1 weights over the stored A-hat entries,
//           directional, initialized to 1 so training starts at Base)
struct ModelParams {
  Variant variant = Variant::Base;
  int cfo_c = 0;
  Activation act_hidden = Activation::Relu;
  Activation act_out = Activation::Identity;
  DenseMatrix w0;  // m x h
  DenseMatrix w1;  // h x d
  DenseMatrix fair_gfo;
  DenseMatrix fair_cfo_a;
  DenseMatrix fair_cfo_f;
  DenseMatrix fair_few;
};

// Glorot-normal W(0), W(1) and fairness tensors (FEW weights start at 1).
// Draw order: w0, w1, then the fairness tensors, row-major each.
ModelParams init_params(const Graph& g, const SparseMatrix& a_hat, Variant variant, int cfo_c,
                        int hidden_dim, int embed_dim, Rng& rng);

struct Embeddings {
  DenseMatrix phi;  // n x d
};

// First-layer pre-activation message per variant:
//   Base/AUG: A F      GFO: A F + W_f      CFO: A F + A* F*      FEW: (A o W_f) F
// (A denotes the normalized adjacency a_hat.)
DenseMatrix first_layer_message(const ModelParams& p, const SparseMatrix& a_hat,
                                const DenseMatrix& features);

// Two-layer forward pass; the second layer is identical across variants:
// phi = act_out(A * act_hidden(M W0) * W1).
Embeddings forward(const ModelParams& p, const SparseMatrix& a_hat, const DenseMatrix& features);

// Rows [row_begin, row_end) of sigma(Phi Phi^T); the full n x n matrix is
// never required in memory.
DenseMatrix decode_block(const Embeddings& emb, int row_begin, int row_end);

// Numerical rank of A* F* (singular values above 1e-10 * sigma_max).
// Always <= min(n, c, m).
int cfo_rank_witness(const ModelParams& p);

// Singular values of a general matrix by one-sided Jacobi, descending.
// Exposed for the rank tests.
std::vector<double> singular_values(const DenseMatrix& a);

}  // namespace fairegm
