#include "fairegm/graph.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <queue>
#include <stdexcept>
#include <unordered_set>

#include "fairegm/errors.hpp"

namespace fairegm {

namespace {

std::uint64_t pair_key(int u, int v) {
  return (std::uint64_t(std::uint32_t(u)) << 32) | std::uint32_t(v);
}

std::vector<std::vector<int>> adjacency_lists(int n, const std::vector<Edge>& edges) {
  std::vector<std::vector<int>> adj(n);
  for (const auto& e : edges) {
    adj[e.u].push_back(e.v);
    adj[e.v].push_back(e.u);
  }
  for (auto& a : adj) std::sort(a.begin(), a.end());
  return adj;
}

}  // namespace

bool Graph::has_edge(int u, int v) const {
  if (u == v) return false;
  Edge e{std::min(u, v), std::max(u, v)};
  return std::binary_search(edges.begin(), edges.end(), e);
}

std::vector<int> Graph::group_ids() const {
  std::vector<int> g(n);
  for (int i = 0; i < n; ++i) {
    int best = 0;
    for (int j = 1; j < sensitive.cols(); ++j)
      if (sensitive(i, j) > sensitive(i, best)) best = j;
    g[i] = best;
  }
  return g;
}

Graph make_graph(int n, std::vector<Edge> edges, DenseMatrix features, DenseMatrix sensitive) {
  if (n <= 0) throw std::invalid_argument("make_graph: node count must be positive");
  if (features.rows() != n) throw std::invalid_argument("make_graph: feature row count != n");
  if (sensitive.rows() != n) throw std::invalid_argument("make_graph: sensitive row count != n");
  if (sensitive.cols() < 1) throw std::invalid_argument("make_graph: sensitive needs >= 1 column");
  if (!features.all_finite()) throw std::invalid_argument("make_graph: features contain NaN/Inf");
  for (int i = 0; i < n; ++i) {
    double sum = 0.0;
    for (int j = 0; j < sensitive.cols(); ++j) {
      const double s = sensitive(i, j);
      if (s != 0.0 && s != 1.0)
        throw std::invalid_argument("make_graph: sensitive entries must be 0 or 1");
      sum += s;
    }
    if (sum != 1.0)
      throw std::invalid_argument("make_graph: sensitive rows must sum to exactly 1");
  }
  for (auto& e : edges) {
    if (e.u == e.v) throw std::invalid_argument("make_graph: self-loop edge");
    if (e.u < 0 || e.v < 0 || e.u >= n || e.v >= n)
      throw std::invalid_argument("make_graph: edge endpoint out of range");
    if (e.u > e.v) std::swap(e.u, e.v);
  }
  std::sort(edges.begin(), edges.end());
  edges.erase(std::unique(edges.begin(), edges.end()), edges.end());
  Graph g;
  g.n = n;
  g.edges = std::move(edges);
  g.features = std::move(features);
  g.sensitive = std::move(sensitive);
  return g;
}

SparseMatrix normalize_adjacency(const Graph& g) {
  std::vector<int> deg(g.n, 0);
  for (const auto& e : g.edges) {
    ++deg[e.u];
    ++deg[e.v];
  }
  std::vector<double> inv_sqrt(g.n);
  for (int v = 0; v < g.n; ++v) inv_sqrt[v] = 1.0 / std::sqrt(1.0 + deg[v]);
  std::vector<SparseEntry> entries;
  entries.reserve(2 * g.edges.size() + g.n);
  for (int v = 0; v < g.n; ++v) entries.push_back({v, v, inv_sqrt[v] * inv_sqrt[v]});
  for (const auto& e : g.edges) {
    const double w = inv_sqrt[e.u] * inv_sqrt[e.v];
    entries.push_back({e.u, e.v, w});
    entries.push_back({e.v, e.u, w});
  }
  return SparseMatrix(g.n, g.n, std::move(entries));
}

SplitResult train_test_split(const Graph& g, double test_fraction, Rng& rng) {
  if (g.edges.empty()) throw std::invalid_argument("train_test_split: graph has no edges");
  if (!(test_fraction >= 0.0 && test_fraction < 1.0))
    throw std::invalid_argument("train_test_split: test_fraction must be in [0, 1)");

  const int total = int(g.edges.size());
  const int take = int(std::ceil(test_fraction * total));

  // partial Fisher-Yates over edge indices: first `take` become candidates
  std::vector<int> order(total);
  for (int i = 0; i < total; ++i) order[i] = i;
  for (int i = 0; i < take; ++i) {
    const int j = i + int(rng.below(std::uint64_t(total - i)));
    std::swap(order[i], order[j]);
  }
  std::vector<bool> is_test(total, false);
  for (int i = 0; i < take; ++i) is_test[order[i]] = true;

  std::vector<Edge> remaining;
  remaining.reserve(total - take);
  for (int i = 0; i < total; ++i)
    if (!is_test[i]) remaining.push_back(g.edges[i]);

  // connected components of the remaining subgraph
  auto adj = adjacency_lists(g.n, remaining);
  std::vector<int> comp(g.n, -1);
  int ncomp = 0;
  for (int s = 0; s < g.n; ++s) {
    if (comp[s] != -1) continue;
    comp[s] = ncomp;
    std::queue<int> q;
    q.push(s);
    while (!q.empty()) {
      const int u = q.front();
      q.pop();
      for (int v : adj[u])
        if (comp[v] == -1) {
          comp[v] = ncomp;
          q.push(v);
        }
    }
    ++ncomp;
  }
  std::vector<int> comp_size(ncomp, 0);
  std::vector<int> comp_min(ncomp, g.n);
  for (int v = 0; v < g.n; ++v) {
    ++comp_size[comp[v]];
    comp_min[comp[v]] = std::min(comp_min[comp[v]], v);
  }
  int best = 0;
  for (int c = 1; c < ncomp; ++c) {
    if (comp_size[c] > comp_size[best] ||
        (comp_size[c] == comp_size[best] && comp_min[c] < comp_min[best]))
      best = c;
  }

  // re-index kept nodes in ascending original order
  SplitResult out;
  out.node_map.assign(g.n, -1);
  int next = 0;
  for (int v = 0; v < g.n; ++v)
    if (comp[v] == best) out.node_map[v] = next++;
  const int train_n = next;

  DenseMatrix feats(train_n, g.features.cols());
  DenseMatrix sens(train_n, g.sensitive.cols());
  for (int v = 0; v < g.n; ++v) {
    const int t = out.node_map[v];
    if (t < 0) continue;
    for (int j = 0; j < feats.cols(); ++j) feats(t, j) = g.features(v, j);
    for (int j = 0; j < sens.cols(); ++j) sens(t, j) = g.sensitive(v, j);
  }

  std::vector<Edge> train_edges;
  train_edges.reserve(remaining.size());
  for (const auto& e : remaining)
    if (out.node_map[e.u] >= 0 && out.node_map[e.v] >= 0)
      train_edges.push_back({out.node_map[e.u], out.node_map[e.v]});
  out.train = make_graph(train_n, std::move(train_edges), std::move(feats), std::move(sens));

  for (int i = 0; i < take; ++i) {
    const Edge& e = g.edges[order[i]];
    const int tu = out.node_map[e.u], tv = out.node_map[e.v];
    if (tu >= 0 && tv >= 0) out.test_pos.push_back({std::min(tu, tv), std::max(tu, tv)});
  }
  std::sort(out.test_pos.begin(), out.test_pos.end());
  return out;
}

std::vector<double> sensitive_distribution(const Graph& g) {
  std::vector<double> p(g.num_groups(), 0.0);
  for (int v = 0; v < g.n; ++v)
    for (int j = 0; j < g.num_groups(); ++j) p[j] += g.sensitive(v, j);
  for (auto& x : p) x /= double(g.n);
  return p;
}

std::vector<Edge> sample_negative_edges(const Graph& g, int count, Rng& rng,
                                        const std::vector<Edge>& exclude) {
  if (count < 0) throw std::invalid_argument("sample_negative_edges: negative count");
  std::vector<Edge> blocked(exclude);
  for (auto& e : blocked)
    if (e.u > e.v) std::swap(e.u, e.v);
  std::sort(blocked.begin(), blocked.end());
  blocked.erase(std::unique(blocked.begin(), blocked.end()), blocked.end());

  // |edges ∪ blocked| by merge-count
  std::size_t union_size = g.edges.size() + blocked.size();
  {
    std::size_t i = 0, j = 0;
    while (i < g.edges.size() && j < blocked.size()) {
      if (g.edges[i] == blocked[j]) {
        --union_size;
        ++i;
        ++j;
      } else if (g.edges[i] < blocked[j]) {
        ++i;
      } else {
        ++j;
      }
    }
  }
  const std::uint64_t total_pairs = std::uint64_t(g.n) * (g.n - 1) / 2;
  if (std::uint64_t(count) > total_pairs - union_size)
    throw CapacityError("sample_negative_edges: requested " + std::to_string(count) +
                        " non-edges but only " + std::to_string(total_pairs - union_size) +
                        " are available");

  auto is_blocked = [&](int u, int v) {
    Edge e{u, v};
    return std::binary_search(g.edges.begin(), g.edges.end(), e) ||
           std::binary_search(blocked.begin(), blocked.end(), e);
  };

  std::vector<Edge> out;
  out.reserve(count);
  const std::uint64_t available = total_pairs - union_size;
  if (available < 2 * std::uint64_t(count) || total_pairs <= 4096) {
    // dense regime: enumerate all non-edges, then partial Fisher-Yates
    std::vector<Edge> pool;
    pool.reserve(std::size_t(available));
    for (int u = 0; u < g.n; ++u)
      for (int v = u + 1; v < g.n; ++v)
        if (!is_blocked(u, v)) pool.push_back({u, v});
    for (int i = 0; i < count; ++i) {
      const std::size_t j = i + std::size_t(rng.below(pool.size() - i));
      std::swap(pool[i], pool[j]);
      out.push_back(pool[i]);
    }
  } else {
    std::unordered_set<std::uint64_t> chosen;
    chosen.reserve(std::size_t(count) * 2);
    while (int(out.size()) < count) {
      int u = int(rng.below(g.n));
      int v = int(rng.below(g.n));
      if (u == v) continue;
      if (u > v) std::swap(u, v);
      if (is_blocked(u, v)) continue;
      if (!chosen.insert(pair_key(u, v)).second) continue;
      out.push_back({u, v});
    }
  }
  return out;
}

}  // namespace fairegm
