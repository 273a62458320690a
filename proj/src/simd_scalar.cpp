#include <cmath>

#include "kst/simd.hpp"

namespace kst::simd {
namespace {

double dot_scalar(const double* x, const double* y, std::size_t count) {
  double acc = 0.0;
  for (std::size_t i = 0; i < count; ++i) acc += x[i] * y[i];
  return acc;
}

void axpy_scalar(double a, const double* x, double* y, std::size_t count) {
  for (std::size_t i = 0; i < count; ++i) y[i] += a * x[i];
}

double sum_sq_diff_scalar(const double* x, const double* y, std::size_t count) {
  double acc = 0.0;
  for (std::size_t i = 0; i < count; ++i) {
    const double e = x[i] - y[i];
    acc += e * e;
  }
  return acc;
}

void laplacian_row_scalar(const double* up, const double* mid, const double* down, double* out, std::size_t count,
                          double inv_h2) {
  for (std::size_t i = 0; i < count; ++i) {
    const double vert = up[i] + down[i];
    const double horiz = mid[i - 1] + mid[i + 1];
    out[i] = ((vert + horiz) - 4.0 * mid[i]) * inv_h2;
  }
}

void hat_locate_scalar(const double* t, std::size_t count, double n, std::int32_t last, std::int32_t* index,
                       double* frac) {
  const double lastd = static_cast<double>(last);
  for (std::size_t i = 0; i < count; ++i) {
    const double s = t[i] * n;
    double j = std::floor(s);
    j = j < 0.0 ? 0.0 : (j > lastd ? lastd : j);
    const double f = s - j;
    index[i] = static_cast<std::int32_t>(j);
    frac[i] = j == lastd ? 0.0 : f;
  }
}

constexpr KernelTable kScalar{Isa::Scalar, dot_scalar, axpy_scalar, sum_sq_diff_scalar, laplacian_row_scalar,
                              hat_locate_scalar};

}  // namespace

const KernelTable& scalar_table() { return kScalar; }

}  // namespace kst::simd
