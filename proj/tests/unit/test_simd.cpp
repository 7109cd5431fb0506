#include <cmath>
#include <vector>

#include "aeos/common/rng.hpp"
#include "aeos/simd/kernels.hpp"
#include "doctest.h"

using aeos::Rng;
namespace simd = aeos::simd;

namespace {

std::vector<double> random_vector(Rng& rng, std::size_t n) {
  std::vector<double> v(n);
  for (auto& x : v) x = rng.uniform(-1.0, 1.0);
  return v;
}

// Every wider table is checked against the scalar reference.
std::vector<const simd::KernelTable*> wide_tables() {
  std::vector<const simd::KernelTable*> out;
  if (const auto* t = simd::avx2_kernels()) out.push_back(t);
  return out;
}

}  // namespace

TEST_CASE("active table is one of the known tables") {
  const auto& a = simd::active();
  CHECK((a.name == "scalar" || a.name == "avx2"));
}

TEST_CASE("dot and gemv agree with the scalar reference to rounding") {
  Rng rng(7);
  const auto& ref = simd::scalar_kernels();
  for (const auto* table : wide_tables()) {
    for (std::size_t n : {0u, 1u, 3u, 4u, 5u, 15u, 16u, 17u, 255u, 3209u}) {
      const auto a = random_vector(rng, n);
      const auto b = random_vector(rng, n);
      double abs_sum = 0.0;
      for (std::size_t i = 0; i < n; ++i) abs_sum += std::abs(a[i] * b[i]);
      const double want = ref.dot(a.data(), b.data(), n);
      const double got = table->dot(a.data(), b.data(), n);
      CHECK(std::abs(got - want) <= 1e-14 * (abs_sum + 1.0) * static_cast<double>(n + 1));
    }
    for (std::size_t rows : {1u, 4u, 7u, 256u}) {
      for (std::size_t cols : {1u, 6u, 257u}) {
        const auto w = random_vector(rng, rows * cols);
        const auto x = random_vector(rng, cols);
        std::vector<double> y_ref = random_vector(rng, rows);
        std::vector<double> y = y_ref;
        ref.gemv_acc(w.data(), rows, cols, x.data(), y_ref.data());
        table->gemv_acc(w.data(), rows, cols, x.data(), y.data());
        for (std::size_t r = 0; r < rows; ++r) CHECK(y[r] == doctest::Approx(y_ref[r]).epsilon(1e-12));
      }
    }
  }
}

TEST_CASE("axpy agrees with the scalar reference") {
  Rng rng(11);
  const auto& ref = simd::scalar_kernels();
  for (const auto* table : wide_tables()) {
    for (std::size_t n : {0u, 1u, 7u, 8u, 9u, 33u, 1000u}) {
      const auto x = random_vector(rng, n);
      auto y_ref = random_vector(rng, n);
      auto y = y_ref;
      const double alpha = rng.uniform(-2.0, 2.0);
      ref.axpy(alpha, x.data(), y_ref.data(), n);
      table->axpy(alpha, x.data(), y.data(), n);
      for (std::size_t i = 0; i < n; ++i) CHECK(std::abs(y[i] - y_ref[i]) <= 1e-15 * (1.0 + std::abs(y_ref[i])));
    }
  }
}

TEST_CASE("ray_nearest selects bitwise the same point as the scalar reference") {
  Rng rng(3);
  const auto& ref = simd::scalar_kernels();
  for (const auto* table : wide_tables()) {
    for (int trial = 0; trial < 200; ++trial) {
      const std::size_t n = static_cast<std::size_t>(rng.uniform(0.0, 70.0));
      std::vector<double> xs(n), ys(n), zs(n);
      for (std::size_t i = 0; i < n; ++i) {
        xs[i] = rng.uniform(0.0, 4.0);
        ys[i] = rng.uniform(-0.2, 0.2);
        zs[i] = rng.uniform(-0.2, 0.2);
      }
      // Duplicate points exercise the lowest-index tie rule.
      if (n > 8) {
        xs[n - 1] = xs[2];
        ys[n - 1] = ys[2];
        zs[n - 1] = zs[2];
      }
      const simd::RayQuery q{0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.01, 0.0};
      const auto a = ref.ray_nearest(q, xs.data(), ys.data(), zs.data(), n);
      const auto b = table->ray_nearest(q, xs.data(), ys.data(), zs.data(), n);
      CHECK(a.index == b.index);
      if (a.index >= 0) CHECK(a.t == b.t);
    }
  }
}

TEST_CASE("ray_nearest reports a miss when nothing is within the radius") {
  const std::vector<double> xs{1.0, 2.0}, ys{1.0, -1.0}, zs{0.0, 0.0};
  const simd::RayQuery q{0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.25, 0.0};
  CHECK(simd::scalar_kernels().ray_nearest(q, xs.data(), ys.data(), zs.data(), 2).index == -1);
  // Points behind the origin are ignored.
  const std::vector<double> bx{-1.0}, by{0.0}, bz{0.0};
  CHECK(simd::active().ray_nearest(q, bx.data(), by.data(), bz.data(), 1).index == -1);
}
