#include "parcelplan/simd/kernels.hpp"

#include <cmath>

#if defined(__x86_64__) && (defined(__GNUC__) || defined(__clang__))
#include <immintrin.h>
#define PARCELPLAN_HAVE_AVX2 1
#define AVX2_ATTR __attribute__((target("avx2,fma")))
#endif

namespace parcelplan::simd {

#ifdef PARCELPLAN_HAVE_AVX2

namespace {

AVX2_ATTR double dot_avx2(const double* a, const double* b, std::size_t n) {
  __m256d acc0 = _mm256_setzero_pd();
  __m256d acc1 = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 8 <= n; i += 8) {
    acc0 = _mm256_fmadd_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i), acc0);
    acc1 = _mm256_fmadd_pd(_mm256_loadu_pd(a + i + 4), _mm256_loadu_pd(b + i + 4), acc1);
  }
  if (i + 4 <= n) {
    acc0 = _mm256_fmadd_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i), acc0);
    i += 4;
  }
  const __m256d acc = _mm256_add_pd(acc0, acc1);
  const __m128d lo = _mm256_castpd256_pd128(acc);
  const __m128d hi = _mm256_extractf128_pd(acc, 1);
  const __m128d pair = _mm_add_pd(lo, hi);
  double s = _mm_cvtsd_f64(_mm_add_sd(pair, _mm_unpackhi_pd(pair, pair)));
  for (; i < n; ++i) s += a[i] * b[i];
  return s;
}

AVX2_ATTR void axpy_avx2(double alpha, const double* x, double* y, std::size_t n) {
  const __m256d va = _mm256_set1_pd(alpha);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    _mm256_storeu_pd(y + i, _mm256_fmadd_pd(va, _mm256_loadu_pd(x + i), _mm256_loadu_pd(y + i)));
  }
  for (; i < n; ++i) y[i] += alpha * x[i];
}

AVX2_ATTR void scale_avx2(double alpha, double* x, std::size_t n) {
  const __m256d va = _mm256_set1_pd(alpha);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) _mm256_storeu_pd(x + i, _mm256_mul_pd(va, _mm256_loadu_pd(x + i)));
  for (; i < n; ++i) x[i] *= alpha;
}

// Two rows of c by sixteen columns stay in registers across the k loop.
AVX2_ATTR void gemm_avx2(const double* a, const double* b, double* c, std::size_t n, std::size_t k, std::size_t m) {
  std::size_t i = 0;
  for (; i + 2 <= n; i += 2) {
    const double* a0 = a + i * k;
    const double* a1 = a0 + k;
    double* c0 = c + i * m;
    double* c1 = c0 + m;
    std::size_t j = 0;
    for (; j + 16 <= m; j += 16) {
      __m256d x0 = _mm256_loadu_pd(c0 + j), x1 = _mm256_loadu_pd(c0 + j + 4);
      __m256d x2 = _mm256_loadu_pd(c0 + j + 8), x3 = _mm256_loadu_pd(c0 + j + 12);
      __m256d y0 = _mm256_loadu_pd(c1 + j), y1 = _mm256_loadu_pd(c1 + j + 4);
      __m256d y2 = _mm256_loadu_pd(c1 + j + 8), y3 = _mm256_loadu_pd(c1 + j + 12);
      for (std::size_t p = 0; p < k; ++p) {
        const double* bp = b + p * m + j;
        const __m256d b0 = _mm256_loadu_pd(bp), b1 = _mm256_loadu_pd(bp + 4);
        const __m256d b2 = _mm256_loadu_pd(bp + 8), b3 = _mm256_loadu_pd(bp + 12);
        const __m256d s0 = _mm256_broadcast_sd(a0 + p);
        const __m256d s1 = _mm256_broadcast_sd(a1 + p);
        x0 = _mm256_fmadd_pd(s0, b0, x0);
        x1 = _mm256_fmadd_pd(s0, b1, x1);
        x2 = _mm256_fmadd_pd(s0, b2, x2);
        x3 = _mm256_fmadd_pd(s0, b3, x3);
        y0 = _mm256_fmadd_pd(s1, b0, y0);
        y1 = _mm256_fmadd_pd(s1, b1, y1);
        y2 = _mm256_fmadd_pd(s1, b2, y2);
        y3 = _mm256_fmadd_pd(s1, b3, y3);
      }
      _mm256_storeu_pd(c0 + j, x0), _mm256_storeu_pd(c0 + j + 4, x1);
      _mm256_storeu_pd(c0 + j + 8, x2), _mm256_storeu_pd(c0 + j + 12, x3);
      _mm256_storeu_pd(c1 + j, y0), _mm256_storeu_pd(c1 + j + 4, y1);
      _mm256_storeu_pd(c1 + j + 8, y2), _mm256_storeu_pd(c1 + j + 12, y3);
    }
    for (; j + 4 <= m; j += 4) {
      __m256d x = _mm256_loadu_pd(c0 + j), y = _mm256_loadu_pd(c1 + j);
      for (std::size_t p = 0; p < k; ++p) {
        const __m256d bp = _mm256_loadu_pd(b + p * m + j);
        x = _mm256_fmadd_pd(_mm256_broadcast_sd(a0 + p), bp, x);
        y = _mm256_fmadd_pd(_mm256_broadcast_sd(a1 + p), bp, y);
      }
      _mm256_storeu_pd(c0 + j, x);
      _mm256_storeu_pd(c1 + j, y);
    }
    for (; j < m; ++j) {
      double x = c0[j], y = c1[j];
      for (std::size_t p = 0; p < k; ++p) {
        x += a0[p] * b[p * m + j];
        y += a1[p] * b[p * m + j];
      }
      c0[j] = x;
      c1[j] = y;
    }
  }
  for (; i < n; ++i) {
    for (std::size_t p = 0; p < k; ++p) axpy_avx2(a[i * k + p], b + p * m, c + i * m, m);
  }
}

// Rank-one updates c += a_p^T b_p, one per row p; c stays cache resident.
AVX2_ATTR void gemm_at_avx2(const double* a, const double* b, double* c, std::size_t k, std::size_t n, std::size_t m) {
  for (std::size_t p = 0; p < k; ++p) {
    const double* ap = a + p * n;
    const double* bp = b + p * m;
    for (std::size_t i = 0; i < n; ++i) {
      const __m256d s = _mm256_set1_pd(ap[i]);
      double* ci = c + i * m;
      std::size_t j = 0;
      for (; j + 4 <= m; j += 4) {
        _mm256_storeu_pd(ci + j, _mm256_fmadd_pd(s, _mm256_loadu_pd(bp + j), _mm256_loadu_pd(ci + j)));
      }
      for (; j < m; ++j) ci[j] += ap[i] * bp[j];
    }
  }
}

// exp(x) = 2^n * exp(r) with r = x - n ln2 split in two parts, |r| <= ln2/2,
// and a degree-13 Taylor polynomial for exp(r).
AVX2_ATTR inline __attribute__((always_inline)) __m256d exp4(__m256d x) {
  const __m256d lo_limit = _mm256_set1_pd(-708.0);
  const __m256d hi_limit = _mm256_set1_pd(709.0);
  const __m256d xc = _mm256_min_pd(_mm256_max_pd(x, lo_limit), hi_limit);
  const __m256d n = _mm256_round_pd(_mm256_mul_pd(xc, _mm256_set1_pd(1.4426950408889634)),
                                    _MM_FROUND_TO_NEAREST_INT | _MM_FROUND_NO_EXC);
  __m256d r = _mm256_fnmadd_pd(n, _mm256_set1_pd(6.93147180369123816490e-01), xc);
  r = _mm256_fnmadd_pd(n, _mm256_set1_pd(1.90821492927058770002e-10), r);
  static constexpr double kInvFact[] = {1.0 / 6227020800.0, 1.0 / 479001600.0, 1.0 / 39916800.0,
                                        1.0 / 3628800.0,    1.0 / 362880.0,    1.0 / 40320.0,
                                        1.0 / 5040.0,       1.0 / 720.0,       1.0 / 120.0,
                                        1.0 / 24.0,         1.0 / 6.0,         0.5,
                                        1.0,                1.0};
  __m256d p = _mm256_set1_pd(kInvFact[0]);
  for (std::size_t i = 1; i < 14; ++i) p = _mm256_fmadd_pd(p, r, _mm256_set1_pd(kInvFact[i]));
  const __m128i ni = _mm256_cvtpd_epi32(n);
  const __m256i bits = _mm256_slli_epi64(_mm256_add_epi64(_mm256_cvtepi32_epi64(ni), _mm256_set1_epi64x(1023)), 52);
  __m256d y = _mm256_mul_pd(p, _mm256_castsi256_pd(bits));
  y = _mm256_blendv_pd(y, _mm256_setzero_pd(), _mm256_cmp_pd(x, lo_limit, _CMP_LT_OQ));
  y = _mm256_blendv_pd(y, _mm256_set1_pd(HUGE_VAL), _mm256_cmp_pd(x, hi_limit, _CMP_GT_OQ));
  return _mm256_blendv_pd(y, x, _mm256_cmp_pd(x, x, _CMP_UNORD_Q));
}

AVX2_ATTR void exp_avx2(const double* x, double* y, std::size_t n) {
  std::size_t i = 0;
  // Four independent polynomial chains per iteration hide the FMA latency.
  for (; i + 16 <= n; i += 16) {
    const __m256d a = exp4(_mm256_loadu_pd(x + i)), b = exp4(_mm256_loadu_pd(x + i + 4));
    const __m256d c = exp4(_mm256_loadu_pd(x + i + 8)), d = exp4(_mm256_loadu_pd(x + i + 12));
    _mm256_storeu_pd(y + i, a);
    _mm256_storeu_pd(y + i + 4, b);
    _mm256_storeu_pd(y + i + 8, c);
    _mm256_storeu_pd(y + i + 12, d);
  }
  for (; i + 4 <= n; i += 4) _mm256_storeu_pd(y + i, exp4(_mm256_loadu_pd(x + i)));
  if (i < n) {
    double tail[4] = {0.0, 0.0, 0.0, 0.0};
    for (std::size_t j = i; j < n; ++j) tail[j - i] = x[j];
    _mm256_storeu_pd(tail, exp4(_mm256_loadu_pd(tail)));
    for (std::size_t j = i; j < n; ++j) y[j] = tail[j - i];
  }
}

AVX2_ATTR inline __attribute__((always_inline)) void axpy_inline(double alpha, const double* x, double* y,
                                                                  std::size_t n) {
  const __m256d va = _mm256_set1_pd(alpha);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    _mm256_storeu_pd(y + i, _mm256_fmadd_pd(va, _mm256_loadu_pd(x + i), _mm256_loadu_pd(y + i)));
  }
  for (; i < n; ++i) y[i] += alpha * x[i];
}

AVX2_ATTR inline __attribute__((always_inline)) double dot_inline(const double* a, const double* b, std::size_t n) {
  __m256d acc = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) acc = _mm256_fmadd_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i), acc);
  const __m128d pair = _mm_add_pd(_mm256_castpd256_pd128(acc), _mm256_extractf128_pd(acc, 1));
  double s = _mm_cvtsd_f64(_mm_add_sd(pair, _mm_unpackhi_pd(pair, pair)));
  for (; i < n; ++i) s += a[i] * b[i];
  return s;
}

// Accumulates each output row in registers, four columns at a time.
AVX2_ATTR void spmm_avx2(const std::size_t* start, const std::size_t* index, const double* w, const double* x,
                         double* y, std::size_t n, std::size_t f) {
  for (std::size_t i = 0; i < n; ++i) {
    double* yi = y + i * f;
    std::size_t j = 0;
    for (; j + 8 <= f; j += 8) {
      __m256d a0 = _mm256_loadu_pd(yi + j), a1 = _mm256_loadu_pd(yi + j + 4);
      for (std::size_t k = start[i]; k < start[i + 1]; ++k) {
        const __m256d wk = _mm256_set1_pd(w[k]);
        const double* xr = x + index[k] * f + j;
        a0 = _mm256_fmadd_pd(wk, _mm256_loadu_pd(xr), a0);
        a1 = _mm256_fmadd_pd(wk, _mm256_loadu_pd(xr + 4), a1);
      }
      _mm256_storeu_pd(yi + j, a0);
      _mm256_storeu_pd(yi + j + 4, a1);
    }
    for (; j < f; ++j) {
      double acc = yi[j];
      for (std::size_t k = start[i]; k < start[i + 1]; ++k) acc += w[k] * x[index[k] * f + j];
      yi[j] = acc;
    }
  }
}

AVX2_ATTR void spmm_t_avx2(const std::size_t* start, const std::size_t* index, const double* w, const double* x,
                           double* y, std::size_t n, std::size_t f) {
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t k = start[i]; k < start[i + 1]; ++k) axpy_inline(w[k], x + i * f, y + index[k] * f, f);
  }
}

AVX2_ATTR void sddmm_avx2(const std::size_t* start, const std::size_t* index, const double* x, const double* y,
                          double* out, std::size_t n, std::size_t f) {
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t k = start[i]; k < start[i + 1]; ++k) out[k] = dot_inline(x + i * f, y + index[k] * f, f);
  }
}

constexpr KernelTable kAvx2{Isa::Avx2,   dot_avx2, axpy_avx2, scale_avx2,  gemm_avx2,
                            gemm_at_avx2, exp_avx2, spmm_avx2, spmm_t_avx2, sddmm_avx2};

}  // namespace

const KernelTable* avx2_table() {
  static const bool supported = __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
  return supported ? &kAvx2 : nullptr;
}

#else

const KernelTable* avx2_table() { return nullptr; }

#endif

}  // namespace parcelplan::simd
