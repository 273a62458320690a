#include <arm_neon.h>

#include <cmath>

#include "kst/simd.hpp"

namespace kst::simd {
namespace {

double dot_neon(const double* x, const double* y, std::size_t count) {
  float64x2_t a0 = vdupq_n_f64(0.0);
  float64x2_t a1 = vdupq_n_f64(0.0);
  std::size_t i = 0;
  for (; i + 4 <= count; i += 4) {
    a0 = vfmaq_f64(a0, vld1q_f64(x + i), vld1q_f64(y + i));
    a1 = vfmaq_f64(a1, vld1q_f64(x + i + 2), vld1q_f64(y + i + 2));
  }
  double acc = vaddvq_f64(vaddq_f64(a0, a1));
  for (; i < count; ++i) acc += x[i] * y[i];
  return acc;
}

void axpy_neon(double a, const double* x, double* y, std::size_t count) {
  const float64x2_t va = vdupq_n_f64(a);
  std::size_t i = 0;
  for (; i + 2 <= count; i += 2) vst1q_f64(y + i, vaddq_f64(vld1q_f64(y + i), vmulq_f64(va, vld1q_f64(x + i))));
  for (; i < count; ++i) y[i] += a * x[i];
}

double sum_sq_diff_neon(const double* x, const double* y, std::size_t count) {
  float64x2_t acc = vdupq_n_f64(0.0);
  std::size_t i = 0;
  for (; i + 2 <= count; i += 2) {
    const float64x2_t e = vsubq_f64(vld1q_f64(x + i), vld1q_f64(y + i));
    acc = vfmaq_f64(acc, e, e);
  }
  double total = vaddvq_f64(acc);
  for (; i < count; ++i) total += (x[i] - y[i]) * (x[i] - y[i]);
  return total;
}

void laplacian_row_neon(const double* up, const double* mid, const double* down, double* out, std::size_t count,
                        double inv_h2) {
  const float64x2_t four = vdupq_n_f64(4.0);
  const float64x2_t scale = vdupq_n_f64(inv_h2);
  std::size_t i = 0;
  for (; i + 2 <= count; i += 2) {
    const float64x2_t vert = vaddq_f64(vld1q_f64(up + i), vld1q_f64(down + i));
    const float64x2_t horiz = vaddq_f64(vld1q_f64(mid + i - 1), vld1q_f64(mid + i + 1));
    const float64x2_t centre = vmulq_f64(four, vld1q_f64(mid + i));
    vst1q_f64(out + i, vmulq_f64(vsubq_f64(vaddq_f64(vert, horiz), centre), scale));
  }
  for (; i < count; ++i) out[i] = ((up[i] + down[i] + (mid[i - 1] + mid[i + 1])) - 4.0 * mid[i]) * inv_h2;
}

void hat_locate_neon(const double* t, std::size_t count, double n, std::int32_t last, std::int32_t* index,
                     double* frac) {
  const double lastd = static_cast<double>(last);
  for (std::size_t i = 0; i < count; ++i) {
    const double s = t[i] * n;
    double j = std::floor(s);
    j = j < 0.0 ? 0.0 : (j > lastd ? lastd : j);
    index[i] = static_cast<std::int32_t>(j);
    frac[i] = j == lastd ? 0.0 : s - j;
  }
}

constexpr KernelTable kNeon{Isa::Neon, dot_neon, axpy_neon, sum_sq_diff_neon, laplacian_row_neon, hat_locate_neon};

}  // namespace

const KernelTable* neon_table() { return &kNeon; }

}  // namespace kst::simd
