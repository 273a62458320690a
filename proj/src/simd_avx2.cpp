// Compiled with -mavx2 -mfma -ffp-contract=off; only reached after a
// runtime CPU check.
#include <immintrin.h>

#include <cmath>

#include "kst/simd.hpp"

namespace kst::simd {
namespace {

inline double hsum(__m256d v) {
  const __m128d lo = _mm256_castpd256_pd128(v);
  const __m128d hi = _mm256_extractf128_pd(v, 1);
  const __m128d s = _mm_add_pd(lo, hi);
  return _mm_cvtsd_f64(_mm_add_sd(s, _mm_unpackhi_pd(s, s)));
}

double dot_avx2(const double* x, const double* y, std::size_t count) {
  __m256d a0 = _mm256_setzero_pd();
  __m256d a1 = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 8 <= count; i += 8) {
    a0 = _mm256_fmadd_pd(_mm256_loadu_pd(x + i), _mm256_loadu_pd(y + i), a0);
    a1 = _mm256_fmadd_pd(_mm256_loadu_pd(x + i + 4), _mm256_loadu_pd(y + i + 4), a1);
  }
  for (; i + 4 <= count; i += 4) a0 = _mm256_fmadd_pd(_mm256_loadu_pd(x + i), _mm256_loadu_pd(y + i), a0);
  double acc = hsum(_mm256_add_pd(a0, a1));
  for (; i < count; ++i) acc += x[i] * y[i];
  return acc;
}

void axpy_avx2(double a, const double* x, double* y, std::size_t count) {
  const __m256d va = _mm256_set1_pd(a);
  std::size_t i = 0;
  for (; i + 4 <= count; i += 4) {
    // mul then add, matching the scalar rounding exactly
    const __m256d prod = _mm256_mul_pd(va, _mm256_loadu_pd(x + i));
    _mm256_storeu_pd(y + i, _mm256_add_pd(_mm256_loadu_pd(y + i), prod));
  }
  for (; i < count; ++i) y[i] += a * x[i];
}

double sum_sq_diff_avx2(const double* x, const double* y, std::size_t count) {
  __m256d acc = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 4 <= count; i += 4) {
    const __m256d e = _mm256_sub_pd(_mm256_loadu_pd(x + i), _mm256_loadu_pd(y + i));
    acc = _mm256_fmadd_pd(e, e, acc);
  }
  double total = hsum(acc);
  for (; i < count; ++i) {
    const double e = x[i] - y[i];
    total += e * e;
  }
  return total;
}

void laplacian_row_avx2(const double* up, const double* mid, const double* down, double* out, std::size_t count,
                        double inv_h2) {
  const __m256d four = _mm256_set1_pd(4.0);
  const __m256d scale = _mm256_set1_pd(inv_h2);
  std::size_t i = 0;
  for (; i + 4 <= count; i += 4) {
    const __m256d vert = _mm256_add_pd(_mm256_loadu_pd(up + i), _mm256_loadu_pd(down + i));
    const __m256d horiz = _mm256_add_pd(_mm256_loadu_pd(mid + i - 1), _mm256_loadu_pd(mid + i + 1));
    const __m256d centre = _mm256_mul_pd(four, _mm256_loadu_pd(mid + i));
    _mm256_storeu_pd(out + i, _mm256_mul_pd(_mm256_sub_pd(_mm256_add_pd(vert, horiz), centre), scale));
  }
  for (; i < count; ++i) {
    const double vert = up[i] + down[i];
    const double horiz = mid[i - 1] + mid[i + 1];
    out[i] = ((vert + horiz) - 4.0 * mid[i]) * inv_h2;
  }
}

void hat_locate_avx2(const double* t, std::size_t count, double n, std::int32_t last, std::int32_t* index,
                     double* frac) {
  const double lastd = static_cast<double>(last);
  const __m256d vn = _mm256_set1_pd(n);
  const __m256d vlast = _mm256_set1_pd(lastd);
  const __m256d zero = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 4 <= count; i += 4) {
    const __m256d s = _mm256_mul_pd(_mm256_loadu_pd(t + i), vn);
    __m256d j = _mm256_floor_pd(s);
    j = _mm256_min_pd(_mm256_max_pd(j, zero), vlast);
    const __m256d at_last = _mm256_cmp_pd(j, vlast, _CMP_EQ_OQ);
    const __m256d f = _mm256_andnot_pd(at_last, _mm256_sub_pd(s, j));
    _mm_storeu_si128(reinterpret_cast<__m128i*>(index + i), _mm256_cvtpd_epi32(j));
    _mm256_storeu_pd(frac + i, f);
  }
  for (; i < count; ++i) {
    const double s = t[i] * n;
    double j = std::floor(s);
    j = j < 0.0 ? 0.0 : (j > lastd ? lastd : j);
    index[i] = static_cast<std::int32_t>(j);
    frac[i] = j == lastd ? 0.0 : s - j;
  }
}

constexpr KernelTable kAvx2{Isa::Avx2, dot_avx2, axpy_avx2, sum_sq_diff_avx2, laplacian_row_avx2, hat_locate_avx2};

}  // namespace

const KernelTable* avx2_table() { return &kAvx2; }

}  // namespace kst::simd
