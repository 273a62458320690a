#pragma once

// Data-parallel inner loops with a scalar reference path and vectorised
// variants picked once at startup from the running CPU's capabilities.
// Every variant must agree with the scalar path: elementwise kernels
// bit-for-bit, reductions to rounding.

#include <cstddef>
#include <cstdint>
#include <span>
#include <string_view>

namespace kst::simd {

enum class Isa { Scalar, Avx2, Neon };

struct KernelTable {
  Isa isa;
  double (*dot)(const double* x, const double* y, std::size_t count);
  void (*axpy)(double a, const double* x, double* y, std::size_t count);
  double (*sum_sq_diff)(const double* x, const double* y, std::size_t count);
  // out[i] = (up[i] + down[i] + mid[i-1] + mid[i+1] - 4 mid[i]) * inv_h2, i in [0, count).
  // mid[-1] and mid[count] must be readable.
  void (*laplacian_row)(const double* up, const double* mid, const double* down, double* out, std::size_t count,
                        double inv_h2);
  // Hat-basis lookup on a uniform grid with spacing 1/n and `last + 1` knots:
  // index = clamp(floor(t n), 0, last), frac = t n - index (0 when index == last).
  void (*hat_locate)(const double* t, std::size_t count, double n, std::int32_t last, std::int32_t* index,
                     double* frac);
};

const KernelTable& scalar_table();
const KernelTable* avx2_table();  // nullptr when not compiled in
const KernelTable* neon_table();  // nullptr when not compiled in

bool cpu_supports(Isa isa);

/// Kernels for the current process. Honours KST_SIMD=scalar|avx2|neon.
const KernelTable& active();
std::string_view isa_name(Isa isa);

inline double dot(std::span<const double> x, std::span<const double> y) {
  return active().dot(x.data(), y.data(), x.size());
}
inline void axpy(double a, std::span<const double> x, std::span<double> y) {
  active().axpy(a, x.data(), y.data(), x.size());
}
inline double sum_sq_diff(std::span<const double> x, std::span<const double> y) {
  return active().sum_sq_diff(x.data(), y.data(), x.size());
}

}  // namespace kst::simd
