#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string_view>

// Data-parallel inner loops. Every kernel has a scalar reference version;
// wider variants must agree with it (bitwise for ray_nearest, to rounding
// for the reductions). The active table is picked once at startup from the
// CPU feature set and can be forced with AEOS_SIMD=scalar|avx2.

namespace aeos::simd {

struct RayQuery {
  double ox, oy, oz;  // ray origin
  double dx, dy, dz;  // unit direction
  double max_perp2;   // squared hit radius around the ray
  double min_t;       // ignore points at or behind this parameter
};

struct RayNearest {
  double t = 0.0;
  std::int64_t index = -1;  // -1: no point within the radius
};

struct KernelTable {
  std::string_view name;
  /// sum a[i] * b[i]
  double (*dot)(const double* a, const double* b, std::size_t n);
  /// y += alpha * x
  void (*axpy)(double alpha, const double* x, double* y, std::size_t n);
  /// y[r] += W[r, :] . x for a row-major rows x cols matrix
  void (*gemv_acc)(const double* w, std::size_t rows, std::size_t cols,
                   const double* x, double* y);
  /// Smallest ray parameter t among points within sqrt(max_perp2) of the ray.
  RayNearest (*ray_nearest)(const RayQuery& q, const double* xs,
                            const double* ys, const double* zs, std::size_t n);
};

const KernelTable& scalar_kernels();

/// AVX2+FMA table, or nullptr when not compiled in or unsupported by the CPU.
const KernelTable* avx2_kernels();

const KernelTable& active();

/// Overrides the active table (tests and benchmarks).
void set_active(const KernelTable& table);

inline double dot(std::span<const double> a, std::span<const double> b) {
  return active().dot(a.data(), b.data(), a.size());
}

inline void axpy(double alpha, std::span<const double> x, std::span<double> y) {
  active().axpy(alpha, x.data(), y.data(), x.size());
}

}  // namespace aeos::simd
