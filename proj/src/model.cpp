#include "fairegm/model.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "fairegm/parallel.hpp"

namespace fairegm {

const char* variant_name(Variant v) {
  switch (v) {
    case Variant::Base:
      return "base";
    case Variant::GFO:
      return "gfo";
    case Variant::CFO:
      return "cfo";
    case Variant::FEW:
      return "few";
    case Variant::AUG:
      return "aug";
  }
  return "?";
}

namespace {

DenseMatrix apply_activation(Activation act, const DenseMatrix& x) {
  switch (act) {
    case Activation::Identity:
      return x;
    case Activation::Relu:
      return relu(x);
    case Activation::Sigmoid:
      return sigmoid(x);
  }
  return x;
}

}  // namespace

ModelParams init_params(const Graph& g, const SparseMatrix& a_hat, Variant variant, int cfo_c,
                        int hidden_dim, int embed_dim, Rng& rng) {
  if (hidden_dim < 1 || embed_dim < 1)
    throw std::invalid_argument("init_params: layer sizes must be >= 1");
  ModelParams p;
  p.variant = variant;
  p.w0 = glorot_normal_init(g.feature_dim(), hidden_dim, rng);
  p.w1 = glorot_normal_init(hidden_dim, embed_dim, rng);
  switch (variant) {
    case Variant::Base:
    case Variant::AUG:
      break;
    case Variant::GFO:
      p.fair_gfo = glorot_normal_init(g.n, g.feature_dim(), rng);
      break;
    case Variant::CFO:
      if (cfo_c < 1) throw std::invalid_argument("init_params: CFO requires c >= 1");
      p.cfo_c = cfo_c;
      p.fair_cfo_a = glorot_normal_init(g.n, cfo_c, rng);
      p.fair_cfo_f = glorot_normal_init(cfo_c, g.feature_dim(), rng);
      break;
    case Variant::FEW:
      p.fair_few = DenseMatrix::constant(a_hat.nnz(), 1, 1.0);
      break;
  }
  return p;
}

DenseMatrix first_layer_message(const ModelParams& p, const SparseMatrix& a_hat,
                                const DenseMatrix& features) {
  switch (p.variant) {
    case Variant::Base:
    case Variant::AUG:
      return spmm(a_hat, features);
    case Variant::GFO: {
      if (p.fair_gfo.rows() != a_hat.rows() || p.fair_gfo.cols() != features.cols())
        throw std::invalid_argument("forward: GFO fairness weights have wrong shape");
      return add(spmm(a_hat, features), p.fair_gfo);
    }
    case Variant::CFO: {
      if (p.fair_cfo_a.cols() != p.fair_cfo_f.rows())
        throw std::invalid_argument("forward: CFO factor shapes disagree");
      return add(spmm(a_hat, features), matmul(p.fair_cfo_a, p.fair_cfo_f));
    }
    case Variant::FEW:
      return edge_weighted_spmm(a_hat, p.fair_few, features);
  }
  throw std::invalid_argument("forward: unknown variant");
}

Embeddings forward(const ModelParams& p, const SparseMatrix& a_hat, const DenseMatrix& features) {
  if (a_hat.rows() != a_hat.cols() || a_hat.rows() != features.rows())
    throw std::invalid_argument("forward: adjacency/features shape mismatch");
  if (p.w0.rows() != features.cols())
    throw std::invalid_argument("forward: W0 rows must equal feature dim");
  if (p.w1.rows() != p.w0.cols())
    throw std::invalid_argument("forward: W1 rows must equal hidden dim");
  const DenseMatrix m = first_layer_message(p, a_hat, features);
  const DenseMatrix h = apply_activation(p.act_hidden, matmul(m, p.w0));
  const DenseMatrix out = matmul(spmm(a_hat, h), p.w1);
  return Embeddings{apply_activation(p.act_out, out)};
}

DenseMatrix decode_block(const Embeddings& emb, int row_begin, int row_end) {
  const DenseMatrix& phi = emb.phi;
  if (row_begin < 0 || row_end > phi.rows() || row_begin > row_end)
    throw std::invalid_argument("decode_block: row range out of bounds");
  DenseMatrix block(row_end - row_begin, phi.rows());
  const int n = phi.rows(), d = phi.cols();
  parallel_for(row_begin, row_end, [&](int u) {
    double* out = block.row(u - row_begin);
    const double* pu = phi.row(u);
    for (int v = 0; v < n; ++v) {
      const double* pv = phi.row(v);
      double z = 0.0;
      for (int j = 0; j < d; ++j) z += pu[j] * pv[j];
      out[v] = stable_sigmoid(z);
    }
  });
  return block;
}

std::vector<double> singular_values(const DenseMatrix& a) {
  // one-sided Jacobi on the matrix with fewer columns
  DenseMatrix w = a.cols() <= a.rows() ? a : transpose(a);
  const int n = w.rows(), m = w.cols();
  const double eps = 1e-15;
  for (int sweep = 0; sweep < 60; ++sweep) {
    bool rotated = false;
    for (int i = 0; i < m - 1; ++i) {
      for (int j = i + 1; j < m; ++j) {
        double aii = 0.0, ajj = 0.0, aij = 0.0;
        for (int r = 0; r < n; ++r) {
          const double x = w(r, i), y = w(r, j);
          aii += x * x;
          ajj += y * y;
          aij += x * y;
        }
        if (std::fabs(aij) <= eps * std::sqrt(aii * ajj)) continue;
        rotated = true;
        const double tau = (ajj - aii) / (2.0 * aij);
        const double t = (tau >= 0 ? 1.0 : -1.0) / (std::fabs(tau) + std::sqrt(1.0 + tau * tau));
        const double c = 1.0 / std::sqrt(1.0 + t * t);
        const double s = c * t;
        for (int r = 0; r < n; ++r) {
          const double x = w(r, i), y = w(r, j);
          w(r, i) = c * x - s * y;
          w(r, j) = s * x + c * y;
        }
      }
    }
    if (!rotated) break;
  }
  std::vector<double> sv(m);
  for (int i = 0; i < m; ++i) {
    double s = 0.0;
    for (int r = 0; r < n; ++r) s += w(r, i) * w(r, i);
    sv[i] = std::sqrt(s);
  }
  std::sort(sv.begin(), sv.end(), std::greater<double>());
  return sv;
}

int cfo_rank_witness(const ModelParams& p) {
  if (p.variant != Variant::CFO)
    throw std::invalid_argument("cfo_rank_witness: only defined for the CFO variant");
  const DenseMatrix product = matmul(p.fair_cfo_a, p.fair_cfo_f);
  const std::vector<double> sv = singular_values(product);
  if (sv.empty() || sv[0] == 0.0) return 0;
  int rank = 0;
  for (double s : sv)
    if (s > 1e-10 * sv[0]) ++rank;
  return rank;
}

}  // namespace fairegm
