#include <doctest.h>

#include <cmath>
#include <limits>
#include <vector>

#include "parcelplan/simd/kernels.hpp"
#include "support.hpp"

using namespace parcelplan;
using simd::KernelTable;

namespace {

std::vector<const KernelTable*> tables() {
  std::vector<const KernelTable*> out{&simd::scalar_table()};
  if (simd::avx2_table()) out.push_back(simd::avx2_table());
  if (simd::neon_table()) out.push_back(simd::neon_table());
  return out;
}

std::vector<double> random_vec(Rng& rng, std::size_t n, double scale = 1.0) {
  std::vector<double> v(n);
  for (double& x : v) x = rng.uniform(-scale, scale);
  return v;
}

// Compressed rows with 0..4 random entries each.
struct Csr {
  std::vector<std::size_t> start{0}, index;
};

Csr random_csr(Rng& rng, std::size_t n) {
  Csr c;
  for (std::size_t i = 0; i < n; ++i) {
    const auto k = rng.below(5);
    for (std::size_t e = 0; e < k; ++e) c.index.push_back(rng.below(n));
    c.start.push_back(c.index.size());
  }
  return c;
}

bool close(double a, double b, double tol = 1e-12) { return std::abs(a - b) <= tol * std::max(1.0, std::abs(b)); }

}  // namespace

TEST_SUITE("simd") {

TEST_CASE("scalar table is always present and the active one is listed") {
  CHECK(simd::scalar_table().isa == simd::Isa::Scalar);
  bool found = false;
  for (const KernelTable* t : tables()) found |= t->isa == simd::active().isa;
  CHECK(found);
  CHECK(simd::isa_name(simd::Isa::Avx2) == "avx2");
}

TEST_CASE("vector kernels match plain loops at every length") {
  Rng rng(3);
  for (const KernelTable* t : tables()) {
    CAPTURE(simd::isa_name(t->isa));
    for (std::size_t n = 0; n < 40; ++n) {
      const auto a = random_vec(rng, n), b = random_vec(rng, n);
      double ref = 0.0;
      for (std::size_t i = 0; i < n; ++i) ref += a[i] * b[i];
      CHECK(close(t->dot(a.data(), b.data(), n), ref));

      auto y = b;
      t->axpy(0.75, a.data(), y.data(), n);
      for (std::size_t i = 0; i < n; ++i) CHECK(close(y[i], b[i] + 0.75 * a[i], 1e-15));

      auto z = a;
      t->scale(-2.5, z.data(), n);
      for (std::size_t i = 0; i < n; ++i) CHECK(z[i] == -2.5 * a[i]);
    }
  }
}

TEST_CASE("gemm variants match the triple loop") {
  Rng rng(4);
  for (const KernelTable* t : tables()) {
    CAPTURE(simd::isa_name(t->isa));
    for (int trial = 0; trial < 60; ++trial) {
      const auto n = 1 + rng.below(9), k = 1 + rng.below(19), m = 1 + rng.below(21);
      const auto a = random_vec(rng, n * k), b = random_vec(rng, k * m), c0 = random_vec(rng, n * m);
      auto c = c0;
      t->gemm(a.data(), b.data(), c.data(), n, k, m);
      // a^T stored k x n
      std::vector<double> at(k * n);
      for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t p = 0; p < k; ++p) at[p * n + i] = a[i * k + p];
      }
      auto c2 = c0;
      t->gemm_at(at.data(), b.data(), c2.data(), k, n, m);
      for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < m; ++j) {
          double ref = c0[i * m + j];
          for (std::size_t p = 0; p < k; ++p) ref += a[i * k + p] * b[p * m + j];
          CHECK(close(c[i * m + j], ref));
          CHECK(close(c2[i * m + j], ref));
        }
      }
    }
  }
}

TEST_CASE("exp agrees with the standard library") {
  Rng rng(5);
  for (const KernelTable* t : tables()) {
    CAPTURE(simd::isa_name(t->isa));
    for (std::size_t n : {0u, 1u, 3u, 4u, 7u, 16u, 17u, 101u}) {
      auto x = random_vec(rng, n, 700.0);
      std::vector<double> y(n);
      t->exp(x.data(), y.data(), n);
      for (std::size_t i = 0; i < n; ++i) CHECK(close(y[i], std::exp(x[i]), 1e-14));
      t->exp(x.data(), x.data(), n);
      CHECK(x == y);
    }
    const double inf = std::numeric_limits<double>::infinity();
    std::vector<double> special{0.0, -0.0, 1.0, -1.0, 709.0, -708.0, -inf, inf, -1000.0, 1000.0};
    std::vector<double> out(special.size());
    t->exp(special.data(), out.data(), special.size());
    CHECK(out[0] == 1.0);
    CHECK(out[1] == 1.0);
    CHECK(close(out[2], std::exp(1.0), 1e-15));
    CHECK(close(out[3], std::exp(-1.0), 1e-15));
    CHECK(close(out[4], std::exp(709.0), 1e-14));
    CHECK(close(out[5], std::exp(-708.0), 1e-14));
    CHECK(out[6] == 0.0);
    CHECK(out[7] == inf);
    CHECK(out[8] == 0.0);
    CHECK(out[9] == inf);
    std::vector<double> nan{std::nan("")}, nan_out(1);
    t->exp(nan.data(), nan_out.data(), 1);
    CHECK(std::isnan(nan_out[0]));
  }
}

TEST_CASE("sparse kernels match dense references") {
  Rng rng(6);
  for (const KernelTable* t : tables()) {
    CAPTURE(simd::isa_name(t->isa));
    for (int trial = 0; trial < 80; ++trial) {
      const auto n = 1 + rng.below(12), f = 1 + rng.below(37);
      const Csr c = random_csr(rng, n);
      const auto w = random_vec(rng, c.index.size());
      const auto x = random_vec(rng, n * f), y0 = random_vec(rng, n * f);

      auto y = y0, ref = y0;
      t->spmm(c.start.data(), c.index.data(), w.data(), x.data(), y.data(), n, f);
      for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t e = c.start[i]; e < c.start[i + 1]; ++e) {
          for (std::size_t d = 0; d < f; ++d) ref[i * f + d] += w[e] * x[c.index[e] * f + d];
        }
      }
      for (std::size_t i = 0; i < n * f; ++i) CHECK(close(y[i], ref[i]));

      auto yt = y0, reft = y0;
      t->spmm_t(c.start.data(), c.index.data(), w.data(), x.data(), yt.data(), n, f);
      for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t e = c.start[i]; e < c.start[i + 1]; ++e) {
          for (std::size_t d = 0; d < f; ++d) reft[c.index[e] * f + d] += w[e] * x[i * f + d];
        }
      }
      for (std::size_t i = 0; i < n * f; ++i) CHECK(close(yt[i], reft[i]));

      std::vector<double> out(c.index.size(), -7.0);
      t->sddmm(c.start.data(), c.index.data(), x.data(), y0.data(), out.data(), n, f);
      for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t e = c.start[i]; e < c.start[i + 1]; ++e) {
          double r = 0.0;
          for (std::size_t d = 0; d < f; ++d) r += x[i * f + d] * y0[c.index[e] * f + d];
          CHECK(close(out[e], r));
        }
      }
    }
  }
}

}  // TEST_SUITE
