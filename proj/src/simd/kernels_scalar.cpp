#include "aeos/simd/kernels.hpp"

namespace aeos::simd {
namespace {

double dot_scalar(const double* a, const double* b, std::size_t n) {
  double s = 0.0;
  for (std::size_t i = 0; i < n; ++i) s += a[i] * b[i];
  return s;
}

void axpy_scalar(double alpha, const double* x, double* y, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) y[i] += alpha * x[i];
}

void gemv_acc_scalar(const double* w, std::size_t rows, std::size_t cols,
                     const double* x, double* y) {
  for (std::size_t r = 0; r < rows; ++r) y[r] += dot_scalar(w + r * cols, x, cols);
}

RayNearest ray_nearest_scalar(const RayQuery& q, const double* xs,
                              const double* ys, const double* zs,
                              std::size_t n) {
  RayNearest best;
  for (std::size_t i = 0; i < n; ++i) {
    const double px = xs[i] - q.ox;
    const double py = ys[i] - q.oy;
    const double pz = zs[i] - q.oz;
    const double t = px * q.dx + py * q.dy + pz * q.dz;
    const double n2 = px * px + py * py + pz * pz;
    const double perp2 = n2 - t * t;
    if (perp2 <= q.max_perp2 && t > q.min_t && (best.index < 0 || t < best.t)) {
      best.t = t;
      best.index = static_cast<std::int64_t>(i);
    }
  }
  return best;
}

}  // namespace

const KernelTable& scalar_kernels() {
  static const KernelTable table{"scalar", dot_scalar, axpy_scalar,
                                 gemv_acc_scalar, ray_nearest_scalar};
  return table;
}

}  // namespace aeos::simd
