#include <cstdlib>
#include <string_view>

#include "thermalsplat/simd.hpp"

namespace thermalsplat::simd {

#if defined(THERMALSPLAT_BUILD_AVX2)
const KernelTable& avx2_table();
#endif

const KernelTable* avx2_kernels() {
#if defined(THERMALSPLAT_BUILD_AVX2)
  static const bool supported = __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
  return supported ? &avx2_table() : nullptr;
#else
  return nullptr;
#endif
}

namespace {

const KernelTable& select() {
  const char* forced = std::getenv("THERMALSPLAT_SIMD");
  if (forced != nullptr && std::string_view(forced) == "scalar") return scalar_kernels();
  if (const KernelTable* avx2 = avx2_kernels()) return *avx2;
  return scalar_kernels();
}

}  // namespace

const KernelTable& kernels() {
  static const KernelTable& table = select();
  return table;
}

}  // namespace thermalsplat::simd
