#pragma once

#include <atomic>
#include <cstdint>
#include <memory>
#include <vector>

#include "fairegm/rng.hpp"

namespace fairegm {

// High-water-mark accounting of matrix payloads. Lets tests verify that the
// blocked loss kernels never materialize an n x n intermediate.
struct AllocStats {
  static std::int64_t current_bytes();
  static std::int64_t peak_bytes();
  static void reset_peak();

  // internal
  static void add(std::int64_t bytes);
  static void sub(std::int64_t bytes);
};

// Row-major dense matrix of 64-bit reals.
class DenseMatrix {
 public:
  DenseMatrix() = default;
  DenseMatrix(int rows, int cols);  // zero-filled
  DenseMatrix(int rows, int cols, std::initializer_list<double> values);
  DenseMatrix(const DenseMatrix& other);
  DenseMatrix(DenseMatrix&& other) noexcept;
  DenseMatrix& operator=(const DenseMatrix& other);
  DenseMatrix& operator=(DenseMatrix&& other) noexcept;
  ~DenseMatrix();

  static DenseMatrix identity(int n);
  static DenseMatrix constant(int rows, int cols, double value);

  int rows() const { return rows_; }
  int cols() const { return cols_; }
  std::int64_t size() const { return std::int64_t(rows_) * cols_; }
  bool empty() const { return rows_ == 0; }

  double& operator()(int i, int j) { return data_[std::int64_t(i) * cols_ + j]; }
  double operator()(int i, int j) const { return data_[std::int64_t(i) * cols_ + j]; }
  double* row(int i) { return data_.get() + std::int64_t(i) * cols_; }
  const double* row(int i) const { return data_.get() + std::int64_t(i) * cols_; }
  double* data() { return data_.get(); }
  const double* data() const { return data_.get(); }

  bool same_shape(const DenseMatrix& other) const {
    return rows_ == other.rows_ && cols_ == other.cols_;
  }
  bool all_finite() const;
  void fill(double value);

 private:
  int rows_ = 0, cols_ = 0;
  std::unique_ptr<double[]> data_;
};

struct SparseEntry {
  int row;
  int col;
  double value;
};

// Coordinate-sorted sparse matrix with CSR row offsets. Entries are sorted
// by (row, col) and duplicates are combined by summation at construction;
// the structure is immutable afterwards.
class SparseMatrix {
 public:
  SparseMatrix() = default;
  SparseMatrix(int rows, int cols, std::vector<SparseEntry> entries);

  static SparseMatrix identity(int n);

  int rows() const { return rows_; }
  int cols() const { return cols_; }
  int nnz() const { return int(entries_.size()); }
  const std::vector<SparseEntry>& entries() const { return entries_; }
  // Entry range [row_begin(i), row_end(i)) of row i.
  int row_begin(int i) const { return row_ptr_[i]; }
  int row_end(int i) const { return row_ptr_[i + 1]; }
  const SparseEntry& entry(int idx) const { return entries_[idx]; }

  SparseMatrix transposed() const;
  DenseMatrix to_dense() const;

 private:
  int rows_ = 0, cols_ = 0;
  std::vector<SparseEntry> entries_;
  std::vector<int> row_ptr_;
};

enum class ElemOp { Sigmoid, Relu, Add, Sub, Hadamard, Scale };

// --- kernels (parallel over output rows; see parallel.hpp) ---------------

DenseMatrix matmul(const DenseMatrix& a, const DenseMatrix& b);
// a^T * b and a * b^T without materializing the transpose.
DenseMatrix matmul_tn(const DenseMatrix& a, const DenseMatrix& b);
DenseMatrix matmul_nt(const DenseMatrix& a, const DenseMatrix& b);
DenseMatrix transpose(const DenseMatrix& a);

DenseMatrix spmm(const SparseMatrix& a, const DenseMatrix& b);
// (pattern o weights) * b where `weights` holds one value per stored entry
// of `pattern`, in entry order. Realizes learned edge reweighting.
DenseMatrix edge_weighted_spmm(const SparseMatrix& pattern,
                               const DenseMatrix& weights,
                               const DenseMatrix& b);

DenseMatrix elementwise(ElemOp op, const DenseMatrix& a);
DenseMatrix elementwise(ElemOp op, const DenseMatrix& a, const DenseMatrix& b);
DenseMatrix elementwise(ElemOp op, const DenseMatrix& a, double scalar);

inline DenseMatrix add(const DenseMatrix& a, const DenseMatrix& b) {
  return elementwise(ElemOp::Add, a, b);
}
inline DenseMatrix sub(const DenseMatrix& a, const DenseMatrix& b) {
  return elementwise(ElemOp::Sub, a, b);
}
inline DenseMatrix hadamard(const DenseMatrix& a, const DenseMatrix& b) {
  return elementwise(ElemOp::Hadamard, a, b);
}
inline DenseMatrix scale(const DenseMatrix& a, double s) {
  return elementwise(ElemOp::Scale, a, s);
}
inline DenseMatrix sigmoid(const DenseMatrix& a) {
  return elementwise(ElemOp::Sigmoid, a);
}
inline DenseMatrix relu(const DenseMatrix& a) {
  return elementwise(ElemOp::Relu, a);
}

void add_in_place(DenseMatrix& a, const DenseMatrix& b);
void axpy_in_place(DenseMatrix& a, double s, const DenseMatrix& b);  // a += s*b

// sigma(x) = 1/(1+exp(-x)) evaluated through exp(-|x|) so large |x| cannot
// overflow: sigmoid(500) is exactly 1.0 and sigmoid(-500) is exactly 0.0 in
// doubles.
double stable_sigmoid(double x);

// Vectorized row variant of stable_sigmoid (fastmath translation unit).
// Agrees with the scalar path to a few ulp.
void sigmoid_row(const double* z, double* out, int n);
// out[i] = exp(-|z[i]|), the shared primitive behind sigmoid/softplus rows.
void exp_neg_abs_row(const double* z, double* out, int n);
// p = sigmoid(z), lg = log(1 + exp(-|z|)); together they give the stable
// per-entry BCE value and its derivative without further transcendentals.
void sigmoid_and_log1p_row(const double* z, double* p, double* lg, int n);

// Entries i.i.d. N(0, 2/(rows+cols)). Consumes rng row-major.
DenseMatrix glorot_normal_init(int rows, int cols, Rng& rng);

}  // namespace fairegm
