#pragma once

#include <cstddef>
#include <initializer_list>
#include <span>
#include <utility>
#include <vector>

#include "parcelplan/simd/kernels.hpp"

namespace parcelplan::nn {

namespace detail {
// Per-thread cache of freed blocks, keyed by length. Training allocates and
// frees the same few large shapes thousands of times per second; recycling
// them avoids the allocator returning pages to the kernel in between.
double* acquire_block(std::size_t n);
void release_block(double* p, std::size_t n) noexcept;
}  // namespace detail

template <class T>
struct PooledAllocator {
  using value_type = T;

  PooledAllocator() = default;
  template <class U>
  PooledAllocator(const PooledAllocator<U>&) noexcept {}

  T* allocate(std::size_t n) { return detail::acquire_block(n); }
  void deallocate(T* p, std::size_t n) noexcept { detail::release_block(p, n); }

  // Default-initialize on resize(n) so buffers about to be overwritten are
  // not zeroed first.
  template <class U>
  void construct(U* p) noexcept {
    ::new (static_cast<void*>(p)) U;
  }
  template <class U, class... Args>
  void construct(U* p, Args&&... args) {
    ::new (static_cast<void*>(p)) U(std::forward<Args>(args)...);
  }

  template <class U>
  bool operator==(const PooledAllocator<U>&) const noexcept {
    return true;
  }
};

// Row-major dense matrix of doubles.
class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols, double fill = 0.0);
  Matrix(std::size_t rows, std::size_t cols, std::vector<double> data);
  Matrix(std::initializer_list<std::initializer_list<double>> rows);

  // Entries are indeterminate until written.
  static Matrix uninitialized(std::size_t rows, std::size_t cols);

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  std::size_t size() const { return data_.size(); }
  bool empty() const { return data_.empty(); }

  double& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
  double operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }

  std::span<double> data() { return data_; }
  std::span<const double> data() const { return data_; }
  std::span<double> row(std::size_t r) { return {data_.data() + r * cols_, cols_}; }
  std::span<const double> row(std::size_t r) const { return {data_.data() + r * cols_, cols_}; }

  bool same_shape(const Matrix& other) const { return rows_ == other.rows_ && cols_ == other.cols_; }
  void fill(double value);

  bool operator==(const Matrix&) const = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double, PooledAllocator<double>> data_;
};

Matrix transpose(const Matrix& a);
// a * b
Matrix matmul(const Matrix& a, const Matrix& b, const simd::KernelTable& k = simd::active());
// a * b^T
Matrix matmul_bt(const Matrix& a, const Matrix& b, const simd::KernelTable& k = simd::active());
// a^T * b
Matrix matmul_at(const Matrix& a, const Matrix& b, const simd::KernelTable& k = simd::active());

// c += a * b
void matmul_add(Matrix& c, const Matrix& a, const Matrix& b, const simd::KernelTable& k = simd::active());

// c += a^T * b
void matmul_at_add(Matrix& c, const Matrix& a, const Matrix& b, const simd::KernelTable& k = simd::active());

// y += alpha * x
void add_scaled(Matrix& y, double alpha, const Matrix& x, const simd::KernelTable& k = simd::active());

bool all_finite(const Matrix& m);

// Throws ErrorCode::Dimension with `what` in the message.
void require_shape(const Matrix& m, std::size_t rows, std::size_t cols, const char* what);

}  // namespace parcelplan::nn
