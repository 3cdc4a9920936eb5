#pragma once

#include <cstddef>
#include <string_view>

// Data-parallel inner loops. Every kernel has a scalar reference in
// kernels_scalar.cpp and may have an AVX2/FMA variant in kernels_avx2.cpp;
// the variant is chosen once at runtime from CPU features, or forced with
// THERMALSPLAT_SIMD=scalar|avx2.
//
// Matrices are row-major with explicit leading dimensions.

namespace thermalsplat::simd {

struct AdamParams {
  double lr;
  double beta1;
  double beta2;
  double eps;
  double bias_correction1;  // 1 - beta1^t
  double bias_correction2;  // 1 - beta2^t
};

struct KernelTable {
  std::string_view name;

  /// C[i,j] = (accumulate ? C[i,j] : 0) + sum_k A[i,k] * B[j,k].  A: MxK, B: NxK.
  void (*gemm_nt)(std::size_t m, std::size_t n, std::size_t k, const double* a, std::size_t lda,
                  const double* b, std::size_t ldb, double* c, std::size_t ldc, bool accumulate);

  /// C[i,j] += sum_k A[i,k] * B[k,j].  A: MxK, B: KxN.
  void (*gemm_nn)(std::size_t m, std::size_t n, std::size_t k, const double* a, std::size_t lda,
                  const double* b, std::size_t ldb, double* c, std::size_t ldc);

  /// C[i,j] += sum_k A[k,i] * B[k,j].  A: KxM, B: KxN.
  void (*gemm_tn)(std::size_t m, std::size_t n, std::size_t k, const double* a, std::size_t lda,
                  const double* b, std::size_t ldb, double* c, std::size_t ldc);

  /// Bias-corrected Adam update over n contiguous parameters. Bitwise
  /// identical across variants (no fused operations).
  void (*adam_update)(std::size_t n, double* param, const double* grad, double* m, double* v,
                      const AdamParams& p);

  /// out[x] = keep * center[x] + scale * (up[x] + down[x] + center[x-1] + center[x+1] - 4 center[x])
  /// for x in [1, n-1). Endpoints are left to the caller. Bitwise identical
  /// across variants.
  void (*stencil5_row)(std::size_t n, const double* up, const double* center, const double* down,
                       double keep, double scale, double* out);
};

const KernelTable& scalar_kernels();

/// AVX2/FMA table, or nullptr when not compiled in or not supported by the CPU.
const KernelTable* avx2_kernels();

/// The table selected for this process.
const KernelTable& kernels();

}  // namespace thermalsplat::simd
