#include <cmath>

#include "thermalsplat/simd.hpp"

namespace thermalsplat::simd {
namespace {

void gemm_nt(std::size_t m, std::size_t n, std::size_t k, const double* a, std::size_t lda, const double* b,
             std::size_t ldb, double* c, std::size_t ldc, bool accumulate) {
  for (std::size_t i = 0; i < m; ++i) {
    const double* ai = a + i * lda;
    for (std::size_t j = 0; j < n; ++j) {
      const double* bj = b + j * ldb;
      double s = 0.0;
      for (std::size_t p = 0; p < k; ++p) s += ai[p] * bj[p];
      c[i * ldc + j] = accumulate ? c[i * ldc + j] + s : s;
    }
  }
}

void gemm_nn(std::size_t m, std::size_t n, std::size_t k, const double* a, std::size_t lda, const double* b,
             std::size_t ldb, double* c, std::size_t ldc) {
  for (std::size_t i = 0; i < m; ++i) {
    double* ci = c + i * ldc;
    for (std::size_t p = 0; p < k; ++p) {
      const double aip = a[i * lda + p];
      if (aip == 0.0) continue;
      const double* bp = b + p * ldb;
      for (std::size_t j = 0; j < n; ++j) ci[j] += aip * bp[j];
    }
  }
}

void gemm_tn(std::size_t m, std::size_t n, std::size_t k, const double* a, std::size_t lda, const double* b,
             std::size_t ldb, double* c, std::size_t ldc) {
  for (std::size_t i = 0; i < m; ++i) {
    double* ci = c + i * ldc;
    for (std::size_t p = 0; p < k; ++p) {
      const double api = a[p * lda + i];
      if (api == 0.0) continue;
      const double* bp = b + p * ldb;
      for (std::size_t j = 0; j < n; ++j) ci[j] += api * bp[j];
    }
  }
}

void adam_update(std::size_t n, double* param, const double* grad, double* m, double* v, const AdamParams& p) {
  const double one_minus_b1 = 1.0 - p.beta1;
  const double one_minus_b2 = 1.0 - p.beta2;
  for (std::size_t i = 0; i < n; ++i) {
    const double g = grad[i];
    const double mi = p.beta1 * m[i] + one_minus_b1 * g;
    const double vi = p.beta2 * v[i] + one_minus_b2 * (g * g);
    m[i] = mi;
    v[i] = vi;
    const double m_hat = mi / p.bias_correction1;
    const double v_hat = vi / p.bias_correction2;
    param[i] = param[i] - p.lr * m_hat / (std::sqrt(v_hat) + p.eps);
  }
}

void stencil5_row(std::size_t n, const double* up, const double* center, const double* down, double keep,
                  double scale, double* out) {
  for (std::size_t x = 1; x + 1 < n; ++x) {
    const double lap = ((up[x] + down[x]) + (center[x - 1] + center[x + 1])) - 4.0 * center[x];
    out[x] = keep * center[x] + scale * lap;
  }
}

}  // namespace

const KernelTable& scalar_kernels() {
  static const KernelTable table{"scalar", gemm_nt, gemm_nn, gemm_tn, adam_update, stencil5_row};
  return table;
}

}  // namespace thermalsplat::simd
