#include "parcelplan/simd/kernels.hpp"

#include <cmath>

namespace parcelplan::simd {

namespace {

double dot_scalar(const double* a, const double* b, std::size_t n) {
  double s = 0.0;
  for (std::size_t i = 0; i < n; ++i) s += a[i] * b[i];
  return s;
}

void axpy_scalar(double alpha, const double* x, double* y, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) y[i] += alpha * x[i];
}

void scale_scalar(double alpha, double* x, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) x[i] *= alpha;
}

void gemm_scalar(const double* a, const double* b, double* c, std::size_t n, std::size_t k, std::size_t m) {
  for (std::size_t i = 0; i < n; ++i) {
    double* ci = c + i * m;
    for (std::size_t p = 0; p < k; ++p) {
      const double aip = a[i * k + p];
      const double* bp = b + p * m;
      for (std::size_t j = 0; j < m; ++j) ci[j] += aip * bp[j];
    }
  }
}

void gemm_at_scalar(const double* a, const double* b, double* c, std::size_t k, std::size_t n, std::size_t m) {
  for (std::size_t p = 0; p < k; ++p) {
    const double* ap = a + p * n;
    const double* bp = b + p * m;
    for (std::size_t i = 0; i < n; ++i) {
      double* ci = c + i * m;
      for (std::size_t j = 0; j < m; ++j) ci[j] += ap[i] * bp[j];
    }
  }
}

void exp_scalar(const double* x, double* y, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) y[i] = std::exp(x[i]);
}

void spmm_scalar(const std::size_t* start, const std::size_t* index, const double* w, const double* x, double* y,
                 std::size_t n, std::size_t f) {
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t k = start[i]; k < start[i + 1]; ++k) axpy_scalar(w[k], x + index[k] * f, y + i * f, f);
  }
}

void spmm_t_scalar(const std::size_t* start, const std::size_t* index, const double* w, const double* x, double* y,
                   std::size_t n, std::size_t f) {
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t k = start[i]; k < start[i + 1]; ++k) axpy_scalar(w[k], x + i * f, y + index[k] * f, f);
  }
}

void sddmm_scalar(const std::size_t* start, const std::size_t* index, const double* x, const double* y, double* out,
                  std::size_t n, std::size_t f) {
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t k = start[i]; k < start[i + 1]; ++k) out[k] = dot_scalar(x + i * f, y + index[k] * f, f);
  }
}

constexpr KernelTable kScalar{Isa::Scalar, dot_scalar,  axpy_scalar,   scale_scalar, gemm_scalar,
                              gemm_at_scalar, exp_scalar, spmm_scalar, spmm_t_scalar, sddmm_scalar};

}  // namespace

const KernelTable& scalar_table() { return kScalar; }

}  // namespace parcelplan::simd
