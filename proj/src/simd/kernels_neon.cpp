#include "parcelplan/simd/kernels.hpp"

#include <cmath>

#if defined(__aarch64__)
#include <arm_neon.h>
#endif

namespace parcelplan::simd {

#if defined(__aarch64__)

namespace {

double dot_neon(const double* a, const double* b, std::size_t n) {
  float64x2_t acc0 = vdupq_n_f64(0.0);
  float64x2_t acc1 = vdupq_n_f64(0.0);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    acc0 = vfmaq_f64(acc0, vld1q_f64(a + i), vld1q_f64(b + i));
    acc1 = vfmaq_f64(acc1, vld1q_f64(a + i + 2), vld1q_f64(b + i + 2));
  }
  double s = vaddvq_f64(vaddq_f64(acc0, acc1));
  for (; i < n; ++i) s += a[i] * b[i];
  return s;
}

void axpy_neon(double alpha, const double* x, double* y, std::size_t n) {
  const float64x2_t va = vdupq_n_f64(alpha);
  std::size_t i = 0;
  for (; i + 2 <= n; i += 2) vst1q_f64(y + i, vfmaq_f64(vld1q_f64(y + i), va, vld1q_f64(x + i)));
  for (; i < n; ++i) y[i] += alpha * x[i];
}

void scale_neon(double alpha, double* x, std::size_t n) {
  std::size_t i = 0;
  for (; i + 2 <= n; i += 2) vst1q_f64(x + i, vmulq_n_f64(vld1q_f64(x + i), alpha));
  for (; i < n; ++i) x[i] *= alpha;
}

void gemm_neon(const double* a, const double* b, double* c, std::size_t n, std::size_t k, std::size_t m) {
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t p = 0; p < k; ++p) axpy_neon(a[i * k + p], b + p * m, c + i * m, m);
  }
}

void gemm_at_neon(const double* a, const double* b, double* c, std::size_t k, std::size_t n, std::size_t m) {
  for (std::size_t p = 0; p < k; ++p) {
    for (std::size_t i = 0; i < n; ++i) axpy_neon(a[p * n + i], b + p * m, c + i * m, m);
  }
}

void exp_neon(const double* x, double* y, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) y[i] = std::exp(x[i]);
}

void spmm_neon(const std::size_t* start, const std::size_t* index, const double* w, const double* x, double* y,
               std::size_t n, std::size_t f) {
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t k = start[i]; k < start[i + 1]; ++k) axpy_neon(w[k], x + index[k] * f, y + i * f, f);
  }
}

void spmm_t_neon(const std::size_t* start, const std::size_t* index, const double* w, const double* x, double* y,
                 std::size_t n, std::size_t f) {
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t k = start[i]; k < start[i + 1]; ++k) axpy_neon(w[k], x + i * f, y + index[k] * f, f);
  }
}

void sddmm_neon(const std::size_t* start, const std::size_t* index, const double* x, const double* y, double* out,
                std::size_t n, std::size_t f) {
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t k = start[i]; k < start[i + 1]; ++k) out[k] = dot_neon(x + i * f, y + index[k] * f, f);
  }
}

constexpr KernelTable kNeon{Isa::Neon,    dot_neon, axpy_neon, scale_neon,  gemm_neon,
                            gemm_at_neon, exp_neon, spmm_neon, spmm_t_neon, sddmm_neon};

}  // namespace

const KernelTable* neon_table() { return &kNeon; }

#else

const KernelTable* neon_table() { return nullptr; }

#endif

}  // namespace parcelplan::simd
