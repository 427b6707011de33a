#pragma once

#include <cstddef>
#include <string_view>

// Dense double-precision inner loops behind the network layers. Every
// instruction-set variant is checked against the scalar reference.
namespace parcelplan::simd {

enum class Isa { Scalar, Avx2, Neon };

std::string_view isa_name(Isa isa);

struct KernelTable {
  Isa isa;
  // sum_i a[i] * b[i]
  double (*dot)(const double* a, const double* b, std::size_t n);
  // y[i] += alpha * x[i]
  void (*axpy)(double alpha, const double* x, double* y, std::size_t n);
  // x[i] *= alpha
  void (*scale)(double alpha, double* x, std::size_t n);
  // c (n x m) += a (n x k) * b (k x m), all row-major and densely packed
  void (*gemm)(const double* a, const double* b, double* c, std::size_t n, std::size_t k, std::size_t m);
  // c (n x m) += a^T * b with a (k x n) and b (k x m)
  void (*gemm_at)(const double* a, const double* b, double* c, std::size_t k, std::size_t n, std::size_t m);
  // y[i] = exp(x[i]); x and y may alias
  void (*exp)(const double* x, double* y, std::size_t n);

  // Sparse kernels over n compressed rows: row i owns entries
  // [start[i], start[i+1]) with column index[k]; dense rows have width f.
  // y_i += sum_k w[k] * x_index[k]
  void (*spmm)(const std::size_t* start, const std::size_t* index, const double* w, const double* x, double* y,
               std::size_t n, std::size_t f);
  // y_index[k] += w[k] * x_i
  void (*spmm_t)(const std::size_t* start, const std::size_t* index, const double* w, const double* x, double* y,
                 std::size_t n, std::size_t f);
  // out[k] = x_i . y_index[k]
  void (*sddmm)(const std::size_t* start, const std::size_t* index, const double* x, const double* y, double* out,
                std::size_t n, std::size_t f);
};

const KernelTable& scalar_table();

// nullptr when the variant is not compiled in or the CPU lacks the feature.
const KernelTable* avx2_table();
const KernelTable* neon_table();

namespace detail {
const KernelTable& select_table();
}

// Chosen once per process: PARCELPLAN_SIMD=scalar|avx2|neon forces a variant
// (falling back to scalar if unavailable); otherwise the widest supported.
inline const KernelTable& active() {
  static const KernelTable& table = detail::select_table();
  return table;
}

inline double dot(const double* a, const double* b, std::size_t n) { return active().dot(a, b, n); }
inline void axpy(double alpha, const double* x, double* y, std::size_t n) { active().axpy(alpha, x, y, n); }
inline void scale(double alpha, double* x, std::size_t n) { active().scale(alpha, x, n); }
inline void gemm(const double* a, const double* b, double* c, std::size_t n, std::size_t k, std::size_t m) {
  active().gemm(a, b, c, n, k, m);
}

inline void gemm_at(const double* a, const double* b, double* c, std::size_t k, std::size_t n, std::size_t m) {
  active().gemm_at(a, b, c, k, n, m);
}
inline void exp(const double* x, double* y, std::size_t n) { active().exp(x, y, n); }
inline void spmm(const std::size_t* start, const std::size_t* index, const double* w, const double* x, double* y,
                 std::size_t n, std::size_t f) {
  active().spmm(start, index, w, x, y, n, f);
}
inline void spmm_t(const std::size_t* start, const std::size_t* index, const double* w, const double* x, double* y,
                   std::size_t n, std::size_t f) {
  active().spmm_t(start, index, w, x, y, n, f);
}
inline void sddmm(const std::size_t* start, const std::size_t* index, const double* x, const double* y, double* out,
                  std::size_t n, std::size_t f) {
  active().sddmm(start, index, x, y, out, n, f);
}

}  // namespace parcelplan::simd
