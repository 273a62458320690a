#include <cstdlib>
#include <string>

#include "kst/simd.hpp"

namespace kst::simd {

#if !defined(KST_HAVE_AVX2)
const KernelTable* avx2_table() { return nullptr; }
#endif
#if !defined(KST_HAVE_NEON)
const KernelTable* neon_table() { return nullptr; }
#endif

bool cpu_supports(Isa isa) {
  switch (isa) {
    case Isa::Scalar:
      return true;
    case Isa::Avx2:
#if defined(KST_HAVE_AVX2) && (defined(__GNUC__) || defined(__clang__))
      return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
      return false;
#endif
    case Isa::Neon:
#if defined(KST_HAVE_NEON)
      return true;
#else
      return false;
#endif
  }
  return false;
}

std::string_view isa_name(Isa isa) {
  switch (isa) {
    case Isa::Scalar:
      return "scalar";
    case Isa::Avx2:
      return "avx2";
    case Isa::Neon:
      return "neon";
  }
  return "unknown";
}

namespace {

const KernelTable& select() {
  const char* env = std::getenv("KST_SIMD");
  const std::string want = env ? env : "";
  if (want == "scalar") return scalar_table();
  if ((want.empty() || want == "avx2") && cpu_supports(Isa::Avx2)) return *avx2_table();
  if ((want.empty() || want == "neon") && cpu_supports(Isa::Neon)) return *neon_table();
  return scalar_table();
}

}  // namespace

const KernelTable& active() {
  static const KernelTable& table = select();
  return table;
}

}  // namespace kst::simd
