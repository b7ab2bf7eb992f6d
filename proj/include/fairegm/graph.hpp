#pragma once

#include <vector>

#include "fairegm/linalg.hpp"
#include "fairegm/rng.hpp"

namespace fairegm {

struct Edge {
  int u, v;  // stored with u < v
  friend bool operator==(const Edge& a, const Edge& b) { return a.u == b.u && a.v == b.v; }
  friend bool operator<(const Edge& a, const Edge& b) {
    return a.u != b.u ? a.u < b.u : a.v < b.v;
  }
};

// Undirected attributed graph. Edges are stored once (u < v), sorted and
// deduplicated; self-loops are rejected here and exist only inside
// normalize_adjacency. `sensitive` is one-hot, one row per node.
struct Graph {
  int n = 0;
  std::vector<Edge> edges;
  DenseMatrix features;   // n x m
  DenseMatrix sensitive;  // n x k

  int feature_dim() const { return features.cols(); }
  int num_groups() const { return sensitive.cols(); }
  bool has_edge(int u, int v) const;
  // argmax of each one-hot row
  std::vector<int> group_ids() const;
};

// Validates invariants, normalizes edge order and deduplicates.
Graph make_graph(int n, std::vector<Edge> edges, DenseMatrix features, DenseMatrix sensitive);

struct SplitResult {
  Graph train;
  std::vector<Edge> test_pos;  // in train-graph ids
  std::vector<int> node_map;   // original id -> train id, -1 if dropped
};

// A-hat = D^-1/2 (A + I) D^-1/2 with d_v = 1 + deg(v).
SparseMatrix normalize_adjacency(const Graph& g);

// Samples ceil(test_fraction * |E|) edges into the test set, keeps the
// largest connected component of the remainder as the training graph
// (ties broken by smallest minimum original node id), re-indexes nodes in
// ascending original order, and drops test edges that lost an endpoint.
SplitResult train_test_split(const Graph& g, double test_fraction, Rng& rng);

// P_S: fraction of nodes per sensitive group.
std::vector<double> sensitive_distribution(const Graph& g);

// Uniform non-edges (no self-pairs, not in g.edges, not in `exclude`),
// sampled without replacement. Throws CapacityError when count exceeds the
// number of available pairs.
std::vector<Edge> sample_negative_edges(const Graph& g, int count, Rng& rng,
                                        const std::vector<Edge>& exclude = {});

}  // namespace fairegm
