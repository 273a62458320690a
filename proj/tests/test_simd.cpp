#include <doctest.h>

#include <cmath>
#include <cstring>
#include <random>
#include <vector>

#include "kst/simd.hpp"

using namespace kst::simd;

namespace {

std::vector<const KernelTable*> available() {
  std::vector<const KernelTable*> out{&scalar_table()};
  if (cpu_supports(Isa::Avx2) && avx2_table()) out.push_back(avx2_table());
  if (cpu_supports(Isa::Neon) && neon_table()) out.push_back(neon_table());
  return out;
}

std::vector<double> random_vector(std::size_t n, std::mt19937_64& rng, double lo = -1.0, double hi = 1.0) {
  std::uniform_real_distribution<double> u(lo, hi);
  std::vector<double> v(n);
  for (auto& x : v) x = u(rng);
  return v;
}

bool bit_equal(const std::vector<double>& a, const std::vector<double>& b) {
  return a.size() == b.size() && std::memcmp(a.data(), b.data(), a.size() * sizeof(double)) == 0;
}

}  // namespace

TEST_CASE("active kernels are one of the compiled variants") {
  const auto& k = active();
  CHECK(cpu_supports(k.isa));
  CHECK(!isa_name(k.isa).empty());
}

TEST_CASE("reductions match a long double oracle on every variant") {
  std::mt19937_64 rng(7);
  for (const auto* k : available()) {
    CAPTURE(isa_name(k->isa));
    for (std::size_t n : {0u, 1u, 3u, 4u, 7u, 8u, 9u, 31u, 64u, 1001u}) {
      const auto x = random_vector(n, rng), y = random_vector(n, rng);
      long double dot = 0, ssd = 0;
      for (std::size_t i = 0; i < n; ++i) {
        dot += static_cast<long double>(x[i]) * y[i];
        ssd += (static_cast<long double>(x[i]) - y[i]) * (static_cast<long double>(x[i]) - y[i]);
      }
      CHECK(k->dot(x.data(), y.data(), n) == doctest::Approx(static_cast<double>(dot)).epsilon(1e-12));
      CHECK(k->sum_sq_diff(x.data(), y.data(), n) == doctest::Approx(static_cast<double>(ssd)).epsilon(1e-12));
    }
  }
}

TEST_CASE("elementwise kernels are bit-identical to the scalar path") {
  std::mt19937_64 rng(11);
  const auto& ref = scalar_table();
  for (const auto* k : available()) {
    CAPTURE(isa_name(k->isa));
    for (std::size_t n : {1u, 2u, 5u, 8u, 13u, 64u, 255u}) {
      const auto x = random_vector(n, rng);
      auto y1 = random_vector(n, rng);
      auto y2 = y1;
      ref.axpy(0.37, x.data(), y1.data(), n);
      k->axpy(0.37, x.data(), y2.data(), n);
      CHECK(bit_equal(y1, y2));

      const auto up = random_vector(n, rng), down = random_vector(n, rng), mid = random_vector(n + 2, rng);
      std::vector<double> o1(n), o2(n);
      ref.laplacian_row(up.data(), mid.data() + 1, down.data(), o1.data(), n, 65536.0);
      k->laplacian_row(up.data(), mid.data() + 1, down.data(), o2.data(), n, 65536.0);
      CHECK(bit_equal(o1, o2));
    }
  }
}

TEST_CASE("laplacian row agrees with the five-point formula") {
  const std::vector<double> up{1, 2, 3}, down{4, 5, 6}, mid{0, 7, 8, 9, 0};
  std::vector<double> out(3);
  scalar_table().laplacian_row(up.data(), mid.data() + 1, down.data(), out.data(), 3, 2.0);
  CHECK(out[0] == doctest::Approx(2.0 * (1 + 4 + 0 + 8 - 28)));
  CHECK(out[1] == doctest::Approx(2.0 * (2 + 5 + 7 + 9 - 32)));
  CHECK(out[2] == doctest::Approx(2.0 * (3 + 6 + 8 + 0 - 36)));
}

TEST_CASE("hat_locate agrees across variants and with the definition") {
  std::mt19937_64 rng(3);
  const double n = 10.0;
  const std::int32_t last = 19;
  auto t = random_vector(257, rng, 0.0, 2.0);
  t.push_back(0.0);
  t.push_back(2.0);
  t.push_back(1.9);
  t.push_back(0.3);
  for (const auto* k : available()) {
    CAPTURE(isa_name(k->isa));
    std::vector<std::int32_t> idx(t.size());
    std::vector<double> frac(t.size());
    k->hat_locate(t.data(), t.size(), n, last, idx.data(), frac.data());
    for (std::size_t i = 0; i < t.size(); ++i) {
      const auto expect = std::min<std::int32_t>(static_cast<std::int32_t>(std::floor(t[i] * n)), last);
      CHECK(idx[i] == expect);
      CHECK(frac[i] == (expect == last ? 0.0 : t[i] * n - expect));
    }
  }
}
