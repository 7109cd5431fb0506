// Compiled with -mavx2 -mfma -ffp-contract=off; only reached after a
// runtime CPU check.
#include <immintrin.h>

#include <limits>

#include "aeos/simd/kernels.hpp"

namespace aeos::simd {
namespace {

inline double hsum(__m256d v) {
  __m128d lo = _mm256_castpd256_pd128(v);
  __m128d hi = _mm256_extractf128_pd(v, 1);
  lo = _mm_add_pd(lo, hi);
  __m128d sh = _mm_unpackhi_pd(lo, lo);
  return _mm_cvtsd_f64(_mm_add_sd(lo, sh));
}

double dot_avx2(const double* a, const double* b, std::size_t n) {
  __m256d acc0 = _mm256_setzero_pd();
  __m256d acc1 = _mm256_setzero_pd();
  __m256d acc2 = _mm256_setzero_pd();
  __m256d acc3 = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 16 <= n; i += 16) {
    acc0 = _mm256_fmadd_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i), acc0);
    acc1 = _mm256_fmadd_pd(_mm256_loadu_pd(a + i + 4), _mm256_loadu_pd(b + i + 4), acc1);
    acc2 = _mm256_fmadd_pd(_mm256_loadu_pd(a + i + 8), _mm256_loadu_pd(b + i + 8), acc2);
    acc3 = _mm256_fmadd_pd(_mm256_loadu_pd(a + i + 12), _mm256_loadu_pd(b + i + 12), acc3);
  }
  for (; i + 4 <= n; i += 4) {
    acc0 = _mm256_fmadd_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i), acc0);
  }
  double s = hsum(_mm256_add_pd(_mm256_add_pd(acc0, acc1), _mm256_add_pd(acc2, acc3)));
  for (; i < n; ++i) s += a[i] * b[i];
  return s;
}

void axpy_avx2(double alpha, const double* x, double* y, std::size_t n) {
  const __m256d va = _mm256_set1_pd(alpha);
  std::size_t i = 0;
  for (; i + 8 <= n; i += 8) {
    _mm256_storeu_pd(y + i, _mm256_fmadd_pd(va, _mm256_loadu_pd(x + i), _mm256_loadu_pd(y + i)));
    _mm256_storeu_pd(y + i + 4,
                     _mm256_fmadd_pd(va, _mm256_loadu_pd(x + i + 4), _mm256_loadu_pd(y + i + 4)));
  }
  for (; i + 4 <= n; i += 4) {
    _mm256_storeu_pd(y + i, _mm256_fmadd_pd(va, _mm256_loadu_pd(x + i), _mm256_loadu_pd(y + i)));
  }
  for (; i < n; ++i) y[i] += alpha * x[i];
}

// Four rows per pass so each load of x is reused.
void gemv_acc_avx2(const double* w, std::size_t rows, std::size_t cols,
                   const double* x, double* y) {
  std::size_t r = 0;
  for (; r + 4 <= rows; r += 4) {
    const double* w0 = w + r * cols;
    const double* w1 = w0 + cols;
    const double* w2 = w1 + cols;
    const double* w3 = w2 + cols;
    __m256d a0 = _mm256_setzero_pd();
    __m256d a1 = _mm256_setzero_pd();
    __m256d a2 = _mm256_setzero_pd();
    __m256d a3 = _mm256_setzero_pd();
    std::size_t c = 0;
    for (; c + 4 <= cols; c += 4) {
      const __m256d vx = _mm256_loadu_pd(x + c);
      a0 = _mm256_fmadd_pd(_mm256_loadu_pd(w0 + c), vx, a0);
      a1 = _mm256_fmadd_pd(_mm256_loadu_pd(w1 + c), vx, a1);
      a2 = _mm256_fmadd_pd(_mm256_loadu_pd(w2 + c), vx, a2);
      a3 = _mm256_fmadd_pd(_mm256_loadu_pd(w3 + c), vx, a3);
    }
    double s0 = hsum(a0), s1 = hsum(a1), s2 = hsum(a2), s3 = hsum(a3);
    for (; c < cols; ++c) {
      s0 += w0[c] * x[c];
      s1 += w1[c] * x[c];
      s2 += w2[c] * x[c];
      s3 += w3[c] * x[c];
    }
    y[r] += s0;
    y[r + 1] += s1;
    y[r + 2] += s2;
    y[r + 3] += s3;
  }
  for (; r < rows; ++r) y[r] += dot_avx2(w + r * cols, x, cols);
}

// Same arithmetic sequence as the scalar version (no FMA) so the selected
// point is bitwise identical.
RayNearest ray_nearest_avx2(const RayQuery& q, const double* xs,
                            const double* ys, const double* zs,
                            std::size_t n) {
  constexpr double kInf = std::numeric_limits<double>::infinity();
  const __m256d ox = _mm256_set1_pd(q.ox), oy = _mm256_set1_pd(q.oy),
                oz = _mm256_set1_pd(q.oz);
  const __m256d dx = _mm256_set1_pd(q.dx), dy = _mm256_set1_pd(q.dy),
                dz = _mm256_set1_pd(q.dz);
  const __m256d max_perp2 = _mm256_set1_pd(q.max_perp2);
  const __m256d min_t = _mm256_set1_pd(q.min_t);
  __m256d best_t = _mm256_set1_pd(kInf);
  __m256d best_i = _mm256_set1_pd(-1.0);
  __m256d idx = _mm256_setr_pd(0.0, 1.0, 2.0, 3.0);
  const __m256d four = _mm256_set1_pd(4.0);

  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    const __m256d px = _mm256_sub_pd(_mm256_loadu_pd(xs + i), ox);
    const __m256d py = _mm256_sub_pd(_mm256_loadu_pd(ys + i), oy);
    const __m256d pz = _mm256_sub_pd(_mm256_loadu_pd(zs + i), oz);
    const __m256d t = _mm256_add_pd(
        _mm256_add_pd(_mm256_mul_pd(px, dx), _mm256_mul_pd(py, dy)),
        _mm256_mul_pd(pz, dz));
    const __m256d n2 = _mm256_add_pd(
        _mm256_add_pd(_mm256_mul_pd(px, px), _mm256_mul_pd(py, py)),
        _mm256_mul_pd(pz, pz));
    const __m256d perp2 = _mm256_sub_pd(n2, _mm256_mul_pd(t, t));
    __m256d m = _mm256_and_pd(_mm256_cmp_pd(perp2, max_perp2, _CMP_LE_OQ),
                              _mm256_cmp_pd(t, min_t, _CMP_GT_OQ));
    m = _mm256_and_pd(m, _mm256_cmp_pd(t, best_t, _CMP_LT_OQ));
    best_t = _mm256_blendv_pd(best_t, t, m);
    best_i = _mm256_blendv_pd(best_i, idx, m);
    idx = _mm256_add_pd(idx, four);
  }

  alignas(32) double lane_t[4];
  alignas(32) double lane_i[4];
  _mm256_store_pd(lane_t, best_t);
  _mm256_store_pd(lane_i, best_i);
  RayNearest best;
  for (int l = 0; l < 4; ++l) {
    if (lane_i[l] < 0.0) continue;
    const auto li = static_cast<std::int64_t>(lane_i[l]);
    if (best.index < 0 || lane_t[l] < best.t || (lane_t[l] == best.t && li < best.index)) {
      best.t = lane_t[l];
      best.index = li;
    }
  }
  for (; i < n; ++i) {
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

const KernelTable* avx2_kernels_compiled() {
  static const KernelTable table{"avx2", dot_avx2, axpy_avx2, gemv_acc_avx2,
                                 ray_nearest_avx2};
  return &table;
}

}  // namespace aeos::simd
