#include "fairegm/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <stdexcept>
#include <string>

#include "fairegm/errors.hpp"
#include "fairegm/parallel.hpp"

namespace fairegm {

namespace {

std::atomic<std::int64_t> g_current_bytes{0};
std::atomic<std::int64_t> g_peak_bytes{0};

void check_shape(bool ok, const char* what) {
  if (!ok) throw std::invalid_argument(std::string("shape mismatch in ") + what);
}

}  // namespace

std::int64_t AllocStats::current_bytes() { return g_current_bytes.load(); }
std::int64_t AllocStats::peak_bytes() { return g_peak_bytes.load(); }
void AllocStats::reset_peak() { g_peak_bytes.store(g_current_bytes.load()); }

void AllocStats::add(std::int64_t bytes) {
  const std::int64_t cur = g_current_bytes.fetch_add(bytes) + bytes;
  std::int64_t peak = g_peak_bytes.load();
  while (cur > peak && !g_peak_bytes.compare_exchange_weak(peak, cur)) {
  }
}

void AllocStats::sub(std::int64_t bytes) { g_current_bytes.fetch_sub(bytes); }

// --- DenseMatrix ----------------------------------------------------------

DenseMatrix::DenseMatrix(int rows, int cols) : rows_(rows), cols_(cols) {
  if (rows < 0 || cols < 0) throw std::invalid_argument("DenseMatrix: negative dimension");
  if (size() > 0) {
    data_ = std::make_unique<double[]>(size());
    AllocStats::add(size() * 8);
  }
}

DenseMatrix::DenseMatrix(int rows, int cols, std::initializer_list<double> values)
    : DenseMatrix(rows, cols) {
  if (std::int64_t(values.size()) != size())
    throw std::invalid_argument("DenseMatrix: initializer size mismatch");
  std::copy(values.begin(), values.end(), data_.get());
}

DenseMatrix::DenseMatrix(const DenseMatrix& other) : DenseMatrix(other.rows_, other.cols_) {
  if (size() > 0) std::memcpy(data_.get(), other.data_.get(), size() * 8);
}

DenseMatrix::DenseMatrix(DenseMatrix&& other) noexcept
    : rows_(other.rows_), cols_(other.cols_), data_(std::move(other.data_)) {
  other.rows_ = other.cols_ = 0;
}

DenseMatrix& DenseMatrix::operator=(const DenseMatrix& other) {
  if (this != &other) {
    DenseMatrix tmp(other);
    *this = std::move(tmp);
  }
  return *this;
}

DenseMatrix& DenseMatrix::operator=(DenseMatrix&& other) noexcept {
  if (this != &other) {
    if (data_) AllocStats::sub(size() * 8);
    rows_ = other.rows_;
    cols_ = other.cols_;
    data_ = std::move(other.data_);
    other.rows_ = other.cols_ = 0;
  }
  return *this;
}

DenseMatrix::~DenseMatrix() {
  if (data_) AllocStats::sub(size() * 8);
}

DenseMatrix DenseMatrix::identity(int n) {
  DenseMatrix m(n, n);
  for (int i = 0; i < n; ++i) m(i, i) = 1.0;
  return m;
}

DenseMatrix DenseMatrix::constant(int rows, int cols, double value) {
  DenseMatrix m(rows, cols);
  m.fill(value);
  return m;
}

bool DenseMatrix::all_finite() const {
  for (std::int64_t i = 0; i < size(); ++i)
    if (!std::isfinite(data_[i])) return false;
  return true;
}

void DenseMatrix::fill(double value) {
  std::fill_n(data_.get(), size(), value);
}

// --- SparseMatrix ----------------------------------------------------------

SparseMatrix::SparseMatrix(int rows, int cols, std::vector<SparseEntry> entries)
    : rows_(rows), cols_(cols), entries_(std::move(entries)) {
  if (rows < 0 || cols < 0) throw std::invalid_argument("SparseMatrix: negative dimension");
  for (const auto& e : entries_) {
    if (e.row < 0 || e.row >= rows_ || e.col < 0 || e.col >= cols_)
      throw std::invalid_argument("SparseMatrix: entry index out of range");
    if (!std::isfinite(e.value))
      throw std::invalid_argument("SparseMatrix: non-finite entry value");
  }
  std::sort(entries_.begin(), entries_.end(), [](const SparseEntry& a, const SparseEntry& b) {
    return a.row != b.row ? a.row < b.row : a.col < b.col;
  });
  // combine duplicates by summation
  std::size_t out = 0;
  for (std::size_t i = 0; i < entries_.size(); ++i) {
    if (out > 0 && entries_[out - 1].row == entries_[i].row &&
        entries_[out - 1].col == entries_[i].col) {
      entries_[out - 1].value += entries_[i].value;
    } else {
      entries_[out++] = entries_[i];
    }
  }
  entries_.resize(out);
  row_ptr_.assign(rows_ + 1, 0);
  for (const auto& e : entries_) ++row_ptr_[e.row + 1];
  for (int i = 0; i < rows_; ++i) row_ptr_[i + 1] += row_ptr_[i];
}

SparseMatrix SparseMatrix::identity(int n) {
  std::vector<SparseEntry> e;
  e.reserve(n);
  for (int i = 0; i < n; ++i) e.push_back({i, i, 1.0});
  return SparseMatrix(n, n, std::move(e));
}

SparseMatrix SparseMatrix::transposed() const {
  std::vector<SparseEntry> e;
  e.reserve(entries_.size());
  for (const auto& x : entries_) e.push_back({x.col, x.row, x.value});
  return SparseMatrix(cols_, rows_, std::move(e));
}

DenseMatrix SparseMatrix::to_dense() const {
  DenseMatrix m(rows_, cols_);
  for (const auto& e : entries_) m(e.row, e.col) = e.value;
  return m;
}

// --- kernels ---------------------------------------------------------------

DenseMatrix matmul(const DenseMatrix& a, const DenseMatrix& b) {
  check_shape(a.cols() == b.rows(), "matmul");
  DenseMatrix c(a.rows(), b.cols());
  const int n = a.rows(), k = a.cols(), m = b.cols();
  parallel_for(0, n, [&](int i) {
    double* ci = c.row(i);
    const double* ai = a.row(i);
    for (int p = 0; p < k; ++p) {
      const double av = ai[p];
      const double* bp = b.row(p);
      for (int j = 0; j < m; ++j) ci[j] += av * bp[j];
    }
  });
  return c;
}

DenseMatrix matmul_tn(const DenseMatrix& a, const DenseMatrix& b) {
  check_shape(a.rows() == b.rows(), "matmul_tn");
  const int n = a.rows(), ra = a.cols(), m = b.cols();
  DenseMatrix c(ra, m);
  // Parallel over blocks of result rows; each block streams a's rows and
  // accumulates outer products, so every c entry keeps the serial k-order.
  const int block = 64;
  const int nblocks = (ra + block - 1) / block;
  parallel_for(0, nblocks, [&](int bi) {
    const int i0 = bi * block, i1 = std::min(ra, i0 + block);
    for (int p = 0; p < n; ++p) {
      const double* ap = a.row(p);
      const double* bp = b.row(p);
      for (int i = i0; i < i1; ++i) {
        const double av = ap[i];
        double* ci = c.row(i);
        for (int j = 0; j < m; ++j) ci[j] += av * bp[j];
      }
    }
  });
  return c;
}

DenseMatrix matmul_nt(const DenseMatrix& a, const DenseMatrix& b) {
  check_shape(a.cols() == b.cols(), "matmul_nt");
  const int n = a.rows(), k = a.cols(), m = b.rows();
  DenseMatrix c(n, m);
  parallel_for(0, n, [&](int i) {
    const double* ai = a.row(i);
    double* ci = c.row(i);
    for (int j = 0; j < m; ++j) {
      const double* bj = b.row(j);
      double s = 0.0;
      for (int p = 0; p < k; ++p) s += ai[p] * bj[p];
      ci[j] = s;
    }
  });
  return c;
}

DenseMatrix transpose(const DenseMatrix& a) {
  DenseMatrix t(a.cols(), a.rows());
  parallel_for(0, a.rows(), [&](int i) {
    const double* ai = a.row(i);
    for (int j = 0; j < a.cols(); ++j) t(j, i) = ai[j];
  });
  return t;
}

DenseMatrix spmm(const SparseMatrix& a, const DenseMatrix& b) {
  check_shape(a.cols() == b.rows(), "spmm");
  DenseMatrix c(a.rows(), b.cols());
  const int m = b.cols();
  parallel_for(0, a.rows(), [&](int i) {
    double* ci = c.row(i);
    for (int idx = a.row_begin(i); idx < a.row_end(i); ++idx) {
      const SparseEntry& e = a.entry(idx);
      const double* bp = b.row(e.col);
      for (int j = 0; j < m; ++j) ci[j] += e.value * bp[j];
    }
  });
  return c;
}

DenseMatrix edge_weighted_spmm(const SparseMatrix& pattern, const DenseMatrix& weights,
                               const DenseMatrix& b) {
  check_shape(pattern.cols() == b.rows(), "edge_weighted_spmm");
  if (weights.size() != pattern.nnz() || weights.cols() != 1)
    throw std::invalid_argument("edge_weighted_spmm: weights must be nnz x 1");
  DenseMatrix c(pattern.rows(), b.cols());
  const int m = b.cols();
  const double* w = weights.data();
  parallel_for(0, pattern.rows(), [&](int i) {
    double* ci = c.row(i);
    for (int idx = pattern.row_begin(i); idx < pattern.row_end(i); ++idx) {
      const SparseEntry& e = pattern.entry(idx);
      const double coeff = e.value * w[idx];
      const double* bp = b.row(e.col);
      for (int j = 0; j < m; ++j) ci[j] += coeff * bp[j];
    }
  });
  return c;
}

double stable_sigmoid(double x) {
  const double e = std::exp(-std::fabs(x));
  return x >= 0 ? 1.0 / (1.0 + e) : e / (1.0 + e);
}

DenseMatrix elementwise(ElemOp op, const DenseMatrix& a) {
  DenseMatrix out(a.rows(), a.cols());
  const double* src = a.data();
  double* dst = out.data();
  const std::int64_t sz = a.size();
  switch (op) {
    case ElemOp::Sigmoid:
      for (std::int64_t i = 0; i < sz; ++i) dst[i] = stable_sigmoid(src[i]);
      break;
    case ElemOp::Relu:
      for (std::int64_t i = 0; i < sz; ++i) dst[i] = src[i] > 0 ? src[i] : 0.0;
      break;
    default:
      throw UnsupportedOperationError("elementwise: op requires two operands");
  }
  return out;
}

DenseMatrix elementwise(ElemOp op, const DenseMatrix& a, const DenseMatrix& b) {
  check_shape(a.same_shape(b), "elementwise");
  DenseMatrix out(a.rows(), a.cols());
  const double* x = a.data();
  const double* y = b.data();
  double* dst = out.data();
  const std::int64_t sz = a.size();
  switch (op) {
    case ElemOp::Add:
      for (std::int64_t i = 0; i < sz; ++i) dst[i] = x[i] + y[i];
      break;
    case ElemOp::Sub:
      for (std::int64_t i = 0; i < sz; ++i) dst[i] = x[i] - y[i];
      break;
    case ElemOp::Hadamard:
      for (std::int64_t i = 0; i < sz; ++i) dst[i] = x[i] * y[i];
      break;
    default:
      throw UnsupportedOperationError("elementwise: op is not binary");
  }
  return out;
}

DenseMatrix elementwise(ElemOp op, const DenseMatrix& a, double scalar) {
  if (op != ElemOp::Scale)
    throw UnsupportedOperationError("elementwise: scalar form only supports Scale");
  DenseMatrix out(a.rows(), a.cols());
  const double* x = a.data();
  double* dst = out.data();
  for (std::int64_t i = 0; i < a.size(); ++i) dst[i] = scalar * x[i];
  return out;
}

void add_in_place(DenseMatrix& a, const DenseMatrix& b) {
  check_shape(a.same_shape(b), "add_in_place");
  double* x = a.data();
  const double* y = b.data();
  for (std::int64_t i = 0; i < a.size(); ++i) x[i] += y[i];
}

void axpy_in_place(DenseMatrix& a, double s, const DenseMatrix& b) {
  check_shape(a.same_shape(b), "axpy_in_place");
  double* x = a.data();
  const double* y = b.data();
  for (std::int64_t i = 0; i < a.size(); ++i) x[i] += s * y[i];
}

DenseMatrix glorot_normal_init(int rows, int cols, Rng& rng) {
  if (rows < 1 || cols < 1)
    throw std::invalid_argument("glorot_normal_init: dimensions must be >= 1");
  DenseMatrix m(rows, cols);
  const double stddev = std::sqrt(2.0 / (double(rows) + double(cols)));
  double* d = m.data();
  for (std::int64_t i = 0; i < m.size(); ++i) d[i] = stddev * rng.normal();
  return m;
}

}  // namespace fairegm
