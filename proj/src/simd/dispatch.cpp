#include <cstdlib>
#include <string>

#include "parcelplan/simd/kernels.hpp"

namespace parcelplan::simd {

std::string_view isa_name(Isa isa) {
  switch (isa) {
    case Isa::Scalar: return "scalar";
    case Isa::Avx2: return "avx2";
    case Isa::Neon: return "neon";
  }
  return "unknown";
}

namespace detail {

const KernelTable& select_table() {
  const char* env = std::getenv("PARCELPLAN_SIMD");
  const std::string want = env ? env : "auto";
  if (want == "scalar") return scalar_table();
  if (want == "avx2") return avx2_table() ? *avx2_table() : scalar_table();
  if (want == "neon") return neon_table() ? *neon_table() : scalar_table();
  if (const KernelTable* t = avx2_table()) return *t;
  if (const KernelTable* t = neon_table()) return *t;
  return scalar_table();
}

}  // namespace detail

}  // namespace parcelplan::simd
