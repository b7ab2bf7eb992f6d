#pragma once

#include "fairegm/linalg.hpp"

// Naive single-threaded kernels, kept as the reference implementation for
// correctness tests and for the serial side of the kernel benchmark. Each
// routine uses the same per-entry accumulation order as its parallel
// counterpart in linalg.cpp.

namespace fairegm::ref {

DenseMatrix matmul(const DenseMatrix& a, const DenseMatrix& b);
DenseMatrix matmul_tn(const DenseMatrix& a, const DenseMatrix& b);
DenseMatrix matmul_nt(const DenseMatrix& a, const DenseMatrix& b);
DenseMatrix transpose(const DenseMatrix& a);
DenseMatrix spmm(const SparseMatrix& a, const DenseMatrix& b);
DenseMatrix edge_weighted_spmm(const SparseMatrix& pattern, const DenseMatrix& weights,
                               const DenseMatrix& b);

}  // namespace fairegm::ref
