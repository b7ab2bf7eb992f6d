#include "fairegm/losses.hpp"

#include <cmath>
#include <stdexcept>

#include "fairegm/parallel.hpp"

namespace fairegm {

namespace {

// -ln of the clamp floor; caps per-entry BCE terms exactly where clamping
// the probability would.
const double kMaxBceTerm = -std::log(kProbClamp);

double softplus_from_exp(double z, double e) {
  // softplus(z) = log(1 + exp(z)) given e = exp(-|z|)
  return z > 0 ? z + std::log1p(e) : std::log1p(e);
}

}  // namespace

PosWeight pos_weight(const Graph& g) {
  if (g.edges.empty()) throw std::invalid_argument("pos_weight: graph has no edges");
  const double n2 = double(g.n) * double(g.n);
  const double two_e = 2.0 * double(g.edges.size());
  return PosWeight{(n2 - two_e) / two_e};
}

double reconstruction_loss(const DenseMatrix& phi, const Graph& g, PosWeight pw) {
  if (phi.rows() != g.n) throw std::invalid_argument("reconstruction_loss: phi rows != n");
  const int n = g.n, d = phi.cols();
  auto adj = [&] {
    std::vector<std::vector<int>> a(n);
    for (const auto& e : g.edges) {
      a[e.u].push_back(e.v);
      a[e.v].push_back(e.u);
    }
    for (auto& x : a) std::sort(x.begin(), x.end());
    return a;
  }();

  std::vector<double> row_loss(n, 0.0);
  parallel_for(0, n, [&](int u) {
    const double* pu = phi.row(u);
    std::vector<double> z(n), e(n);
    for (int v = 0; v < n; ++v) {
      const double* pv = phi.row(v);
      double s = 0.0;
      for (int j = 0; j < d; ++j) s += pu[j] * pv[j];
      z[v] = s;
    }
    exp_neg_abs_row(z.data(), e.data(), n);
    const auto& nbrs = adj[u];
    std::size_t k = 0;
    double acc = 0.0;
    for (int v = 0; v < n; ++v) {
      const bool pos = k < nbrs.size() && nbrs[k] == v;
      if (pos) ++k;
      // BCE(t, sigma(z)) = softplus(-z) for t=1, softplus(z) for t=0
      double term = softplus_from_exp(pos ? -z[v] : z[v], e[v]);
      if (term > kMaxBceTerm) term = kMaxBceTerm;
      acc += pos ? pw.pos_w * term : term;
    }
    row_loss[u] = acc;
  });

  double total = 0.0;
  for (int u = 0; u < n; ++u) total += row_loss[u];
  return total / (double(n) * double(n));
}

std::vector<double> group_similarity(const DenseMatrix& phi, const Graph& g, int v) {
  if (g.n < 2) throw std::invalid_argument("group_similarity: graph needs >= 2 nodes");
  if (v < 0 || v >= g.n) throw std::invalid_argument("group_similarity: node out of range");
  const int n = g.n, d = phi.cols(), k = g.num_groups();
  std::vector<double> raw(k, 0.0);
  const double* pv = phi.row(v);
  for (int u = 0; u < n; ++u) {
    if (u == v) continue;
    const double* pu = phi.row(u);
    double z = 0.0;
    for (int j = 0; j < d; ++j) z += pv[j] * pu[j];
    const double p = stable_sigmoid(z);
    for (int j = 0; j < k; ++j) raw[j] += p * g.sensitive(u, j);
  }
  double total = 0.0;
  for (int j = 0; j < k; ++j) {
    raw[j] /= double(n - 1);
    total += raw[j];
  }
  for (int j = 0; j < k; ++j) raw[j] /= total;
  return raw;
}

LinkDivergence link_divergence(const DenseMatrix& phi, const Graph& g) {
  if (g.n < 2) throw std::invalid_argument("link_divergence: graph needs >= 2 nodes");
  if (phi.rows() != g.n) throw std::invalid_argument("link_divergence: phi rows != n");
  const int n = g.n, d = phi.cols(), k = g.num_groups();
  const std::vector<double> ps = sensitive_distribution(g);
  const std::vector<int> group = g.group_ids();

  std::vector<double> node_kl(n, 0.0);
  parallel_for(0, n, [&](int v) {
    const double* pv = phi.row(v);
    std::vector<double> z(n), e(n), p(n);
    for (int u = 0; u < n; ++u) {
      const double* pu = phi.row(u);
      double s = 0.0;
      for (int j = 0; j < d; ++j) s += pv[j] * pu[j];
      z[u] = s;
    }
    sigmoid_row(z.data(), p.data(), n);
    std::vector<double> raw(k, 0.0);
    for (int u = 0; u < n; ++u) {
      if (u == v) continue;
      raw[group[u]] += p[u];
    }
    double total = 0.0;
    for (int j = 0; j < k; ++j) total += raw[j];
    double kl = 0.0;
    for (int j = 0; j < k; ++j) {
      if (ps[j] <= 0.0) continue;
      double f = raw[j] / total;  // 1/(n-1) cancels in the normalization
      if (f < kProbClamp) f = kProbClamp;
      kl += ps[j] * std::log(ps[j] / f);
    }
    node_kl[v] = kl;
  });

  LinkDivergence out;
  for (int v = 0; v < n; ++v) out.sum += node_kl[v];
  out.mean = out.sum / double(n);
  return out;
}

double augmented_loss(const DenseMatrix& phi, const Graph& g, PosWeight pw, double lambda) {
  if (lambda < 0.0) throw std::invalid_argument("augmented_loss: lambda must be >= 0");
  return reconstruction_loss(phi, g, pw) + lambda * link_divergence(phi, g).sum;
}

}  // namespace fairegm
