#pragma once

#include <unordered_map>
#include <vector>

#include "fairegm/graph.hpp"
#include "fairegm/linalg.hpp"

namespace fairegm {

using NodeId = int;

// Loop-free adjacency target for the fused reconstruction-loss node:
// sorted neighbor lists plus the positive-entry weight.
struct BceTarget {
  int n = 0;
  std::vector<int> nbr_ptr;  // size n+1
  std::vector<int> nbr;      // sorted, both directions
  double pos_w = 1.0;

  static BceTarget from_graph(const Graph& g, double pos_w);
};

// Sensitive-group layout for the fused link-divergence node.
struct GroupTarget {
  std::vector<int> group;   // group id per node
  std::vector<double> p_s;  // population distribution, length k

  static GroupTarget from_graph(const Graph& g);
};

// Gradients keyed by parameter leaf id. Only leaves requested in backward()
// receive an entry.
struct GradientSet {
  std::unordered_map<NodeId, DenseMatrix> grads;

  const DenseMatrix& at(NodeId id) const;
  bool contains(NodeId id) const { return grads.count(id) != 0; }
};

// Reverse-mode tape over the fixed operation set used by the models and
// losses. Parameters are non-owning references: the caller keeps the
// matrices alive and may update them between forward() calls; the tape
// re-reads them on every evaluation. Single-writer: one thread drives a
// given tape, distinct tapes may run concurrently.
class Tape {
 public:
  NodeId parameter(DenseMatrix* value);
  NodeId constant(DenseMatrix value);
  NodeId spmm(const SparseMatrix& a, NodeId x);
  // (pattern o weights) * features with learnable per-entry weights (nnz x 1)
  // and constant features.
  NodeId edge_weighted_spmm(const SparseMatrix& pattern, NodeId weights, DenseMatrix features);
  NodeId matmul(NodeId a, NodeId b);
  NodeId transpose(NodeId a);
  NodeId add(NodeId a, NodeId b);
  NodeId hadamard(NodeId a, NodeId b);
  NodeId scale(NodeId a, double s);
  NodeId sigmoid(NodeId a);
  NodeId relu(NodeId a);
  // Dispatch mirror of linalg::elementwise restricted to the tape op set;
  // anything else (e.g. Sub) raises UnsupportedOperationError.
  NodeId elementwise(ElemOp op, NodeId a, NodeId b = -1);
  NodeId sum(NodeId a);
  NodeId weighted_bce_mean(NodeId phi, BceTarget target);
  NodeId kl_normalized_rows(NodeId phi, GroupTarget target);

  void set_output(NodeId id);
  // Re-evaluates every node from the current leaf values; returns the scalar
  // output. The fused loss nodes also cache dLoss/dPhi during this pass.
  double forward();
  // Adjoints from the cached forward values, restricted to `wrt`. Leaves not
  // listed receive no entry and their subtrees are skipped entirely.
  GradientSet backward(const std::vector<NodeId>& wrt);

  const DenseMatrix& value(NodeId id) const;
  int rows(NodeId id) const;
  int cols(NodeId id) const;

 private:
  enum class Kind {
    Constant,
    Parameter,
    SpmmConst,
    EdgeSpmm,
    Matmul,
    Transpose,
    Add,
    Hadamard,
    Scale,
    Sigmoid,
    Relu,
    Sum,
    WeightedBceMean,
    KlNormalizedRows
  };

  struct Node {
    Kind kind;
    int a = -1, b = -1;
    int rows = 0, cols = 0;
    double scalar = 0.0;
    DenseMatrix value;
    DenseMatrix* param = nullptr;
    DenseMatrix grad_phi;  // fused nodes: cached dLoss/dPhi
    DenseMatrix feat;      // EdgeSpmm: constant dense factor
    int sparse_id = -1;
    int target_id = -1;
  };

  NodeId add_node(Node n);
  const DenseMatrix& val(NodeId id) const;
  void eval_node(int id);
  void check_id(NodeId id, const char* what) const;

  std::vector<Node> nodes_;
  std::vector<SparseMatrix> sparse_;
  std::vector<SparseMatrix> sparse_t_;
  std::vector<BceTarget> bce_targets_;
  std::vector<GroupTarget> kl_targets_;
  NodeId output_ = -1;
  bool forward_done_ = false;
};

}  // namespace fairegm
