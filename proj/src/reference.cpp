#include "fairegm/reference.hpp"

#include <stdexcept>

namespace fairegm::ref {

DenseMatrix matmul(const DenseMatrix& a, const DenseMatrix& b) {
  if (a.cols() != b.rows()) throw std::invalid_argument("ref::matmul: shape mismatch");
  DenseMatrix c(a.rows(), b.cols());
  for (int i = 0; i < a.rows(); ++i)
    for (int p = 0; p < a.cols(); ++p) {
      const double av = a(i, p);
      for (int j = 0; j < b.cols(); ++j) c(i, j) += av * b(p, j);
    }
  return c;
}

DenseMatrix matmul_tn(const DenseMatrix& a, const DenseMatrix& b) {
  if (a.rows() != b.rows()) throw std::invalid_argument("ref::matmul_tn: shape mismatch");
  DenseMatrix c(a.cols(), b.cols());
  for (int p = 0; p < a.rows(); ++p)
    for (int i = 0; i < a.cols(); ++i) {
      const double av = a(p, i);
      for (int j = 0; j < b.cols(); ++j) c(i, j) += av * b(p, j);
    }
  return c;
}

DenseMatrix matmul_nt(const DenseMatrix& a, const DenseMatrix& b) {
  if (a.cols() != b.cols()) throw std::invalid_argument("ref::matmul_nt: shape mismatch");
  DenseMatrix c(a.rows(), b.rows());
  for (int i = 0; i < a.rows(); ++i)
    for (int j = 0; j < b.rows(); ++j) {
      double s = 0.0;
      for (int p = 0; p < a.cols(); ++p) s += a(i, p) * b(j, p);
      c(i, j) = s;
    }
  return c;
}

DenseMatrix transpose(const DenseMatrix& a) {
  DenseMatrix t(a.cols(), a.rows());
  for (int i = 0; i < a.rows(); ++i)
    for (int j = 0; j < a.cols(); ++j) t(j, i) = a(i, j);
  return t;
}

DenseMatrix spmm(const SparseMatrix& a, const DenseMatrix& b) {
  if (a.cols() != b.rows()) throw std::invalid_argument("ref::spmm: shape mismatch");
  DenseMatrix c(a.rows(), b.cols());
  for (const auto& e : a.entries())
    for (int j = 0; j < b.cols(); ++j) c(e.row, j) += e.value * b(e.col, j);
  return c;
}

DenseMatrix edge_weighted_spmm(const SparseMatrix& pattern, const DenseMatrix& weights,
                               const DenseMatrix& b) {
  if (pattern.cols() != b.rows())
    throw std::invalid_argument("ref::edge_weighted_spmm: shape mismatch");
  if (weights.size() != pattern.nnz())
    throw std::invalid_argument("ref::edge_weighted_spmm: weights size mismatch");
  DenseMatrix c(pattern.rows(), b.cols());
  for (int idx = 0; idx < pattern.nnz(); ++idx) {
    const SparseEntry& e = pattern.entry(idx);
    const double coeff = e.value * weights.data()[idx];
    for (int j = 0; j < b.cols(); ++j) c(e.row, j) += coeff * b(e.col, j);
  }
  return c;
}

}  // namespace fairegm::ref
