#include "parcelplan/nn/matrix.hpp"

#include <algorithm>
#include <cmath>
#include <string>
#include <unordered_map>

#include "parcelplan/error.hpp"

namespace parcelplan::nn {

namespace detail {

namespace {

// Blocks below this many doubles go straight to operator new.
constexpr std::size_t kPooledMin = 256;
constexpr std::size_t kMaxCachedPerSize = 64;

struct BlockCache {
  std::unordered_map<std::size_t, std::vector<double*>> free;
  bool alive = true;

  ~BlockCache() {
    alive = false;
    for (auto& [n, blocks] : free) {
      for (double* p : blocks) ::operator delete(p);
    }
  }
};

// Null once the thread's cache has been destroyed (late frees of static
// matrices then bypass it).
BlockCache* cache() {
  thread_local BlockCache c;
  return c.alive ? &c : nullptr;
}

}  // namespace

double* acquire_block(std::size_t n) {
  BlockCache* c = n >= kPooledMin ? cache() : nullptr;
  if (c) {
    auto& blocks = c->free[n];
    if (!blocks.empty()) {
      double* p = blocks.back();
      blocks.pop_back();
      return p;
    }
  }
  return static_cast<double*>(::operator new(n * sizeof(double)));
}

void release_block(double* p, std::size_t n) noexcept {
  BlockCache* c = n >= kPooledMin ? cache() : nullptr;
  if (c) {
    auto& blocks = c->free[n];
    if (blocks.size() < kMaxCachedPerSize) {
      blocks.push_back(p);
      return;
    }
  }
  ::operator delete(p);
}

}  // namespace detail

Matrix::Matrix(std::size_t rows, std::size_t cols, double fill)
    : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

Matrix::Matrix(std::size_t rows, std::size_t cols, std::vector<double> data)
    : rows_(rows), cols_(cols), data_(data.begin(), data.end()) {
  if (data_.size() != rows * cols) fail(ErrorCode::Dimension, "matrix data length does not match shape");
}

Matrix::Matrix(std::initializer_list<std::initializer_list<double>> rows) {
  rows_ = rows.size();
  cols_ = rows_ ? rows.begin()->size() : 0;
  data_.reserve(rows_ * cols_);
  for (const auto& r : rows) {
    if (r.size() != cols_) fail(ErrorCode::Dimension, "ragged matrix literal");
    data_.insert(data_.end(), r.begin(), r.end());
  }
}

Matrix Matrix::uninitialized(std::size_t rows, std::size_t cols) {
  Matrix m;
  m.rows_ = rows;
  m.cols_ = cols;
  m.data_.resize(rows * cols);
  return m;
}

void Matrix::fill(double value) { std::fill(data_.begin(), data_.end(), value); }

Matrix transpose(const Matrix& a) {
  Matrix t = Matrix::uninitialized(a.cols(), a.rows());
  for (std::size_t i = 0; i < a.rows(); ++i) {
    for (std::size_t j = 0; j < a.cols(); ++j) t(j, i) = a(i, j);
  }
  return t;
}

Matrix matmul(const Matrix& a, const Matrix& b, const simd::KernelTable& k) {
  if (a.cols() != b.rows()) fail(ErrorCode::Dimension, "matmul: inner dimensions differ");
  Matrix c(a.rows(), b.cols());
  k.gemm(a.data().data(), b.data().data(), c.data().data(), a.rows(), a.cols(), b.cols());
  return c;
}

void matmul_add(Matrix& c, const Matrix& a, const Matrix& b, const simd::KernelTable& k) {
  if (a.cols() != b.rows() || c.rows() != a.rows() || c.cols() != b.cols()) {
    fail(ErrorCode::Dimension, "matmul_add: shapes do not compose");
  }
  k.gemm(a.data().data(), b.data().data(), c.data().data(), a.rows(), a.cols(), b.cols());
}

Matrix matmul_bt(const Matrix& a, const Matrix& b, const simd::KernelTable& k) {
  if (a.cols() != b.cols()) fail(ErrorCode::Dimension, "matmul_bt: column counts differ");
  return matmul(a, transpose(b), k);
}

Matrix matmul_at(const Matrix& a, const Matrix& b, const simd::KernelTable& k) {
  if (a.rows() != b.rows()) fail(ErrorCode::Dimension, "matmul_at: row counts differ");
  Matrix c(a.cols(), b.cols());
  k.gemm_at(a.data().data(), b.data().data(), c.data().data(), a.rows(), a.cols(), b.cols());
  return c;
}

void matmul_at_add(Matrix& c, const Matrix& a, const Matrix& b, const simd::KernelTable& k) {
  if (a.rows() != b.rows() || c.rows() != a.cols() || c.cols() != b.cols()) {
    fail(ErrorCode::Dimension, "matmul_at_add: shapes do not compose");
  }
  k.gemm_at(a.data().data(), b.data().data(), c.data().data(), a.rows(), a.cols(), b.cols());
}

void add_scaled(Matrix& y, double alpha, const Matrix& x, const simd::KernelTable& k) {
  if (!y.same_shape(x)) fail(ErrorCode::Dimension, "add_scaled: shape mismatch");
  k.axpy(alpha, x.data().data(), y.data().data(), y.size());
}

bool all_finite(const Matrix& m) {
  return std::all_of(m.data().begin(), m.data().end(), [](double v) { return std::isfinite(v); });
}

void require_shape(const Matrix& m, std::size_t rows, std::size_t cols, const char* what) {
  if (m.rows() != rows || m.cols() != cols) {
    fail(ErrorCode::Dimension, std::string(what) + ": expected " + std::to_string(rows) + "x" +
                                   std::to_string(cols) + ", got " + std::to_string(m.rows()) + "x" +
                                   std::to_string(m.cols()));
  }
}

}  // namespace parcelplan::nn
