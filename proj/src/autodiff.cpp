#include "fairegm/autodiff.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "fairegm/errors.hpp"
#include "fairegm/losses.hpp"
#include "fairegm/parallel.hpp"

namespace fairegm {

namespace {
const double kMaxBceTerm = -std::log(kProbClamp);

double softplus_from_exp(double z, double e) {
  return z > 0 ? z + std::log1p(e) : std::log1p(e);
}
}  // namespace

BceTarget BceTarget::from_graph(const Graph& g, double pos_w) {
  BceTarget t;
  t.n = g.n;
  t.pos_w = pos_w;
  std::vector<std::vector<int>> adj(g.n);
  for (const auto& e : g.edges) {
    adj[e.u].push_back(e.v);
    adj[e.v].push_back(e.u);
  }
  t.nbr_ptr.assign(g.n + 1, 0);
  for (int v = 0; v < g.n; ++v) {
    std::sort(adj[v].begin(), adj[v].end());
    t.nbr_ptr[v + 1] = t.nbr_ptr[v] + int(adj[v].size());
  }
  t.nbr.reserve(t.nbr_ptr[g.n]);
  for (int v = 0; v < g.n; ++v) t.nbr.insert(t.nbr.end(), adj[v].begin(), adj[v].end());
  return t;
}

GroupTarget GroupTarget::from_graph(const Graph& g) {
  GroupTarget t;
  t.group = g.group_ids();
  t.p_s = sensitive_distribution(g);
  return t;
}

const DenseMatrix& GradientSet::at(NodeId id) const {
  auto it = grads.find(id);
  if (it == grads.end())
    throw UnknownParameterError("GradientSet: no gradient for node " + std::to_string(id));
  return it->second;
}

// --- node construction ------------------------------------------------------

void Tape::check_id(NodeId id, const char* what) const {
  if (id < 0 || id >= NodeId(nodes_.size()))
    throw std::invalid_argument(std::string(what) + ": operand id out of range");
}

NodeId Tape::add_node(Node n) {
  nodes_.push_back(std::move(n));
  forward_done_ = false;
  return NodeId(nodes_.size()) - 1;
}

NodeId Tape::parameter(DenseMatrix* value) {
  if (value == nullptr || value->empty())
    throw std::invalid_argument("Tape::parameter: null or empty matrix");
  Node n;
  n.kind = Kind::Parameter;
  n.param = value;
  n.rows = value->rows();
  n.cols = value->cols();
  return add_node(std::move(n));
}

NodeId Tape::constant(DenseMatrix value) {
  Node n;
  n.kind = Kind::Constant;
  n.rows = value.rows();
  n.cols = value.cols();
  n.value = std::move(value);
  return add_node(std::move(n));
}

NodeId Tape::spmm(const SparseMatrix& a, NodeId x) {
  check_id(x, "Tape::spmm");
  if (a.cols() != rows(x)) throw std::invalid_argument("Tape::spmm: dimension mismatch");
  Node n;
  n.kind = Kind::SpmmConst;
  n.a = x;
  n.rows = a.rows();
  n.cols = cols(x);
  n.sparse_id = int(sparse_.size());
  sparse_.push_back(a);
  sparse_t_.push_back(a.transposed());
  return add_node(std::move(n));
}

NodeId Tape::edge_weighted_spmm(const SparseMatrix& pattern, NodeId weights,
                                DenseMatrix features) {
  check_id(weights, "Tape::edge_weighted_spmm");
  if (pattern.cols() != features.rows())
    throw std::invalid_argument("Tape::edge_weighted_spmm: dimension mismatch");
  if (rows(weights) != pattern.nnz() || cols(weights) != 1)
    throw std::invalid_argument("Tape::edge_weighted_spmm: weights must be nnz x 1");
  Node n;
  n.kind = Kind::EdgeSpmm;
  n.a = weights;
  n.rows = pattern.rows();
  n.cols = features.cols();
  n.sparse_id = int(sparse_.size());
  sparse_.push_back(pattern);
  sparse_t_.push_back(SparseMatrix());  // transpose not needed for this op
  n.feat = std::move(features);
  return add_node(std::move(n));
}

NodeId Tape::matmul(NodeId a, NodeId b) {
  check_id(a, "Tape::matmul");
  check_id(b, "Tape::matmul");
  if (cols(a) != rows(b)) throw std::invalid_argument("Tape::matmul: dimension mismatch");
  Node n;
  n.kind = Kind::Matmul;
  n.a = a;
  n.b = b;
  n.rows = rows(a);
  n.cols = cols(b);
  return add_node(std::move(n));
}

NodeId Tape::transpose(NodeId a) {
  check_id(a, "Tape::transpose");
  Node n;
  n.kind = Kind::Transpose;
  n.a = a;
  n.rows = cols(a);
  n.cols = rows(a);
  return add_node(std::move(n));
}

NodeId Tape::add(NodeId a, NodeId b) {
  check_id(a, "Tape::add");
  check_id(b, "Tape::add");
  if (rows(a) != rows(b) || cols(a) != cols(b))
    throw std::invalid_argument("Tape::add: shape mismatch");
  Node n;
  n.kind = Kind::Add;
  n.a = a;
  n.b = b;
  n.rows = rows(a);
  n.cols = cols(a);
  return add_node(std::move(n));
}

NodeId Tape::hadamard(NodeId a, NodeId b) {
  check_id(a, "Tape::hadamard");
  check_id(b, "Tape::hadamard");
  if (rows(a) != rows(b) || cols(a) != cols(b))
    throw std::invalid_argument("Tape::hadamard: shape mismatch");
  Node n;
  n.kind = Kind::Hadamard;
  n.a = a;
  n.b = b;
  n.rows = rows(a);
  n.cols = cols(a);
  return add_node(std::move(n));
}

NodeId Tape::scale(NodeId a, double s) {
  check_id(a, "Tape::scale");
  Node n;
  n.kind = Kind::Scale;
  n.a = a;
  n.scalar = s;
  n.rows = rows(a);
  n.cols = cols(a);
  return add_node(std::move(n));
}

NodeId Tape::sigmoid(NodeId a) {
  check_id(a, "Tape::sigmoid");
  Node n;
  n.kind = Kind::Sigmoid;
  n.a = a;
  n.rows = rows(a);
  n.cols = cols(a);
  return add_node(std::move(n));
}

NodeId Tape::relu(NodeId a) {
  check_id(a, "Tape::relu");
  Node n;
  n.kind = Kind::Relu;
  n.a = a;
  n.rows = rows(a);
  n.cols = cols(a);
  return add_node(std::move(n));
}

NodeId Tape::elementwise(ElemOp op, NodeId a, NodeId b) {
  switch (op) {
    case ElemOp::Sigmoid:
      return sigmoid(a);
    case ElemOp::Relu:
      return relu(a);
    case ElemOp::Add:
      return add(a, b);
    case ElemOp::Hadamard:
      return hadamard(a, b);
    default:
      throw UnsupportedOperationError("Tape::elementwise: operation not supported on tape");
  }
}

NodeId Tape::sum(NodeId a) {
  check_id(a, "Tape::sum");
  Node n;
  n.kind = Kind::Sum;
  n.a = a;
  n.rows = 1;
  n.cols = 1;
  return add_node(std::move(n));
}

NodeId Tape::weighted_bce_mean(NodeId phi, BceTarget target) {
  check_id(phi, "Tape::weighted_bce_mean");
  if (rows(phi) != target.n)
    throw std::invalid_argument("Tape::weighted_bce_mean: phi rows != target n");
  Node n;
  n.kind = Kind::WeightedBceMean;
  n.a = phi;
  n.rows = 1;
  n.cols = 1;
  n.target_id = int(bce_targets_.size());
  bce_targets_.push_back(std::move(target));
  return add_node(std::move(n));
}

NodeId Tape::kl_normalized_rows(NodeId phi, GroupTarget target) {
  check_id(phi, "Tape::kl_normalized_rows");
  if (rows(phi) != int(target.group.size()))
    throw std::invalid_argument("Tape::kl_normalized_rows: phi rows != group count");
  Node n;
  n.kind = Kind::KlNormalizedRows;
  n.a = phi;
  n.rows = 1;
  n.cols = 1;
  n.target_id = int(kl_targets_.size());
  kl_targets_.push_back(std::move(target));
  return add_node(std::move(n));
}

void Tape::set_output(NodeId id) {
  check_id(id, "Tape::set_output");
  if (rows(id) != 1 || cols(id) != 1)
    throw std::invalid_argument("Tape::set_output: output must be scalar (1x1)");
  output_ = id;
}

const DenseMatrix& Tape::val(NodeId id) const {
  const Node& n = nodes_[id];
  return n.kind == Kind::Parameter ? *n.param : n.value;
}

const DenseMatrix& Tape::value(NodeId id) const {
  check_id(id, "Tape::value");
  return val(id);
}

int Tape::rows(NodeId id) const { return nodes_[id].rows; }
int Tape::cols(NodeId id) const { return nodes_[id].cols; }

// --- forward ----------------------------------------------------------------

void Tape::eval_node(int id) {
  Node& n = nodes_[id];
  switch (n.kind) {
    case Kind::Constant:
    case Kind::Parameter:
      break;
    case Kind::SpmmConst:
      n.value = fairegm::spmm(sparse_[n.sparse_id], val(n.a));
      break;
    case Kind::EdgeSpmm:
      n.value = fairegm::edge_weighted_spmm(sparse_[n.sparse_id], val(n.a), n.feat);
      break;
    case Kind::Matmul:
      n.value = fairegm::matmul(val(n.a), val(n.b));
      break;
    case Kind::Transpose:
      n.value = fairegm::transpose(val(n.a));
      break;
    case Kind::Add:
      n.value = fairegm::add(val(n.a), val(n.b));
      break;
    case Kind::Hadamard:
      n.value = fairegm::hadamard(val(n.a), val(n.b));
      break;
    case Kind::Scale:
      n.value = fairegm::scale(val(n.a), n.scalar);
      break;
    case Kind::Sigmoid:
      n.value = fairegm::sigmoid(val(n.a));
      break;
    case Kind::Relu:
      n.value = fairegm::relu(val(n.a));
      break;
    case Kind::Sum: {
      const DenseMatrix& x = val(n.a);
      double s = 0.0;
      for (std::int64_t i = 0; i < x.size(); ++i) s += x.data()[i];
      n.value = DenseMatrix(1, 1, {s});
      break;
    }
    case Kind::WeightedBceMean: {
      const DenseMatrix& phi = val(n.a);
      const BceTarget& t = bce_targets_[n.target_id];
      const int nn = t.n, d = phi.cols();
      if (n.grad_phi.rows() != nn || n.grad_phi.cols() != d) n.grad_phi = DenseMatrix(nn, d);
      DenseMatrix& dphi = n.grad_phi;
      std::vector<double> row_loss(nn, 0.0);
      const double inv_n2 = 1.0 / (double(nn) * double(nn));
      parallel_for(0, nn, [&](int u) {
        const double* pu = phi.row(u);
        std::vector<double> z(nn), e(nn);
        for (int v = 0; v < nn; ++v) {
          const double* pv = phi.row(v);
          double s = 0.0;
          for (int j = 0; j < d; ++j) s += pu[j] * pv[j];
          z[v] = s;
        }
        exp_neg_abs_row(z.data(), e.data(), nn);
        double* gu = dphi.row(u);
        for (int j = 0; j < d; ++j) gu[j] = 0.0;
        int k = t.nbr_ptr[u];
        const int kend = t.nbr_ptr[u + 1];
        double acc = 0.0;
        for (int v = 0; v < nn; ++v) {
          const bool pos = k < kend && t.nbr[k] == v;
          if (pos) ++k;
          const double w = pos ? t.pos_w : 1.0;
          double term = softplus_from_exp(pos ? -z[v] : z[v], e[v]);
          if (term > kMaxBceTerm) term = kMaxBceTerm;
          acc += w * term;
          const double p = z[v] >= 0 ? 1.0 / (1.0 + e[v]) : e[v] / (1.0 + e[v]);
          // derivative of the clamped BCE through the sigmoid; zero in the
          // clamped (saturated) region
          double coeff = 0.0;
          if (p > kProbClamp && p < 1.0 - kProbClamp)
            coeff = 2.0 * inv_n2 * w * (p - (pos ? 1.0 : 0.0));
          if (coeff != 0.0) {
            const double* pv = phi.row(v);
            for (int j = 0; j < d; ++j) gu[j] += coeff * pv[j];
          }
        }
        row_loss[u] = acc;
      });
      double total = 0.0;
      for (int u = 0; u < nn; ++u) total += row_loss[u];
      n.value = DenseMatrix(1, 1, {total * inv_n2});
      break;
    }
    case Kind::KlNormalizedRows: {
      const DenseMatrix& phi = val(n.a);
      const GroupTarget& t = kl_targets_[n.target_id];
      const int nn = int(t.group.size()), d = phi.cols(), k = int(t.p_s.size());
      if (n.grad_phi.rows() != nn || n.grad_phi.cols() != d) n.grad_phi = DenseMatrix(nn, d);
      DenseMatrix& dphi = n.grad_phi;
      // pass 1: per-node loss and the per-group backward coefficient
      // coef_v[j] = (1 - P_j / f_vj) / S_v with S_v = sum over u != v of p_vu
      DenseMatrix coef(nn, k);
      std::vector<double> node_kl(nn, 0.0);
      parallel_for(0, nn, [&](int v) {
        const double* pv = phi.row(v);
        std::vector<double> z(nn), p(nn);
        for (int u = 0; u < nn; ++u) {
          const double* pu = phi.row(u);
          double s = 0.0;
          for (int j = 0; j < d; ++j) s += pv[j] * pu[j];
          z[u] = s;
        }
        sigmoid_row(z.data(), p.data(), nn);
        std::vector<double> raw(k, 0.0);
        for (int u = 0; u < nn; ++u)
          if (u != v) raw[t.group[u]] += p[u];
        double total = 0.0;
        for (int j = 0; j < k; ++j) total += raw[j];
        double kl = 0.0;
        double* cv = coef.row(v);
        for (int j = 0; j < k; ++j) {
          const double f = raw[j] / total;
          if (f <= kProbClamp) {
            // clamped region is locally constant
            cv[j] = 0.0;
            if (t.p_s[j] > 0.0) kl += t.p_s[j] * std::log(t.p_s[j] / kProbClamp);
            continue;
          }
          cv[j] = (1.0 - t.p_s[j] / f) / total;
          if (t.p_s[j] > 0.0) kl += t.p_s[j] * std::log(t.p_s[j] / f);
        }
        node_kl[v] = kl;
      });
      // pass 2: dPhi_a = sum over u != a of p'(z_au) (coef_a[g_u] + coef_u[g_a]) Phi_u
      parallel_for(0, nn, [&](int a) {
        const double* pa = phi.row(a);
        std::vector<double> z(nn), p(nn);
        for (int u = 0; u < nn; ++u) {
          const double* pu = phi.row(u);
          double s = 0.0;
          for (int j = 0; j < d; ++j) s += pa[j] * pu[j];
          z[u] = s;
        }
        sigmoid_row(z.data(), p.data(), nn);
        double* ga = dphi.row(a);
        for (int j = 0; j < d; ++j) ga[j] = 0.0;
        const double* ca = coef.row(a);
        const int g_a = t.group[a];
        for (int u = 0; u < nn; ++u) {
          if (u == a) continue;
          const double w = p[u] * (1.0 - p[u]) * (ca[t.group[u]] + coef(u, g_a));
          if (w != 0.0) {
            const double* pu = phi.row(u);
            for (int j = 0; j < d; ++j) ga[j] += w * pu[j];
          }
        }
      });
      double total = 0.0;
      for (int v = 0; v < nn; ++v) total += node_kl[v];
      n.value = DenseMatrix(1, 1, {total});
      break;
    }
  }
}

double Tape::forward() {
  if (output_ < 0) throw std::invalid_argument("Tape::forward: output not set");
  for (int i = 0; i < int(nodes_.size()); ++i) eval_node(i);
  forward_done_ = true;
  return val(output_)(0, 0);
}

// --- backward ---------------------------------------------------------------

GradientSet Tape::backward(const std::vector<NodeId>& wrt) {
  if (output_ < 0) throw std::invalid_argument("Tape::backward: output not set");
  if (!forward_done_) forward();

  std::vector<char> is_wrt(nodes_.size(), 0);
  for (NodeId id : wrt) {
    if (id < 0 || id >= NodeId(nodes_.size()) || nodes_[id].kind != Kind::Parameter)
      throw UnknownParameterError("Tape::backward: node " + std::to_string(id) +
                                  " is not a parameter on this tape");
    is_wrt[id] = 1;
  }

  // needed[i]: node i transitively consumes a requested leaf
  std::vector<char> needed(nodes_.size(), 0);
  for (int i = 0; i < int(nodes_.size()); ++i) {
    const Node& n = nodes_[i];
    if (n.kind == Kind::Parameter) {
      needed[i] = is_wrt[i];
    } else {
      needed[i] = (n.a >= 0 && needed[n.a]) || (n.b >= 0 && needed[n.b]);
    }
  }

  std::vector<DenseMatrix> adj(nodes_.size());
  auto accumulate = [&](NodeId id, DenseMatrix&& m) {
    if (adj[id].empty())
      adj[id] = std::move(m);
    else
      add_in_place(adj[id], m);
  };
  if (needed[output_]) adj[output_] = DenseMatrix(1, 1, {1.0});

  for (int i = output_; i >= 0; --i) {
    const Node& n = nodes_[i];
    if (adj[i].empty()) continue;
    const DenseMatrix& g = adj[i];
    switch (n.kind) {
      case Kind::Constant:
      case Kind::Parameter:
        break;
      case Kind::SpmmConst:
        if (needed[n.a]) accumulate(n.a, fairegm::spmm(sparse_t_[n.sparse_id], g));
        break;
      case Kind::EdgeSpmm:
        if (needed[n.a]) {
          const SparseMatrix& pat = sparse_[n.sparse_id];
          DenseMatrix gw(pat.nnz(), 1);
          parallel_for(0, pat.rows(), [&](int r) {
            const double* gr = g.row(r);
            for (int idx = pat.row_begin(r); idx < pat.row_end(r); ++idx) {
              const SparseEntry& e = pat.entry(idx);
              const double* f = n.feat.row(e.col);
              double s = 0.0;
              for (int j = 0; j < n.feat.cols(); ++j) s += gr[j] * f[j];
              gw(idx, 0) = e.value * s;
            }
          });
          accumulate(n.a, std::move(gw));
        }
        break;
      case Kind::Matmul:
        if (needed[n.a]) accumulate(n.a, matmul_nt(g, val(n.b)));
        if (needed[n.b]) accumulate(n.b, matmul_tn(val(n.a), g));
        break;
      case Kind::Transpose:
        if (needed[n.a]) accumulate(n.a, fairegm::transpose(g));
        break;
      case Kind::Add:
        if (needed[n.a]) accumulate(n.a, DenseMatrix(g));
        if (needed[n.b]) accumulate(n.b, DenseMatrix(g));
        break;
      case Kind::Hadamard:
        if (needed[n.a]) accumulate(n.a, fairegm::hadamard(g, val(n.b)));
        if (needed[n.b]) accumulate(n.b, fairegm::hadamard(g, val(n.a)));
        break;
      case Kind::Scale:
        if (needed[n.a]) accumulate(n.a, fairegm::scale(g, n.scalar));
        break;
      case Kind::Sigmoid:
        if (needed[n.a]) {
          DenseMatrix d(n.rows, n.cols);
          const double* s = n.value.data();
          const double* gd = g.data();
          for (std::int64_t t = 0; t < d.size(); ++t)
            d.data()[t] = gd[t] * s[t] * (1.0 - s[t]);
          accumulate(n.a, std::move(d));
        }
        break;
      case Kind::Relu:
        if (needed[n.a]) {
          DenseMatrix d(n.rows, n.cols);
          const double* s = n.value.data();
          const double* gd = g.data();
          // subgradient at 0 is 0
          for (std::int64_t t = 0; t < d.size(); ++t) d.data()[t] = s[t] > 0 ? gd[t] : 0.0;
          accumulate(n.a, std::move(d));
        }
        break;
      case Kind::Sum:
        if (needed[n.a])
          accumulate(n.a, DenseMatrix::constant(rows(n.a), cols(n.a), g(0, 0)));
        break;
      case Kind::WeightedBceMean:
      case Kind::KlNormalizedRows:
        if (needed[n.a]) accumulate(n.a, fairegm::scale(n.grad_phi, g(0, 0)));
        break;
    }
  }

  GradientSet out;
  for (NodeId id : wrt) {
    if (!adj[id].empty())
      out.grads.emplace(id, std::move(adj[id]));
    else
      out.grads.emplace(id, DenseMatrix(nodes_[id].rows, nodes_[id].cols));
  }
  return out;
}

}  // namespace fairegm
