#include <immintrin.h>

#include <algorithm>
#include <cmath>
#include <vector>

#include "thermalsplat/simd.hpp"

namespace thermalsplat::simd {
namespace {

// Shared body of gemm_nn/gemm_tn: C[i, :] += sum_p coef(i, p) * B[p, :].
// R rows of C by 12 columns are held in registers while p runs over a chunk
// sized to keep the touched rows of B in L2. Every C entry still sees its
// FMAs in ascending p order, so the chunking does not change the result.
constexpr std::size_t kChunkP = 64;

template <int R, typename Coef>
inline void rank_update_block(std::size_t i, std::size_t p0, std::size_t p1, std::size_t n, Coef coef,
                              const double* b, std::size_t ldb, double* c, std::size_t ldc) {
  std::size_t j = 0;
  for (; j + 12 <= n; j += 12) {
    __m256d r[R][3];
    for (int q = 0; q < R; ++q)
      for (int v = 0; v < 3; ++v) r[q][v] = _mm256_loadu_pd(c + (i + q) * ldc + j + 4 * v);
    for (std::size_t p = p0; p < p1; ++p) {
      const double* bp = b + p * ldb + j;
      const __m256d y0 = _mm256_loadu_pd(bp), y1 = _mm256_loadu_pd(bp + 4), y2 = _mm256_loadu_pd(bp + 8);
      for (int q = 0; q < R; ++q) {
        const __m256d w = _mm256_set1_pd(coef(i + q, p));
        r[q][0] = _mm256_fmadd_pd(w, y0, r[q][0]);
        r[q][1] = _mm256_fmadd_pd(w, y1, r[q][1]);
        r[q][2] = _mm256_fmadd_pd(w, y2, r[q][2]);
      }
    }
    for (int q = 0; q < R; ++q)
      for (int v = 0; v < 3; ++v) _mm256_storeu_pd(c + (i + q) * ldc + j + 4 * v, r[q][v]);
  }
  for (; j + 4 <= n; j += 4) {
    __m256d r[R];
    for (int q = 0; q < R; ++q) r[q] = _mm256_loadu_pd(c + (i + q) * ldc + j);
    for (std::size_t p = p0; p < p1; ++p) {
      const __m256d y = _mm256_loadu_pd(b + p * ldb + j);
      for (int q = 0; q < R; ++q) r[q] = _mm256_fmadd_pd(_mm256_set1_pd(coef(i + q, p)), y, r[q]);
    }
    for (int q = 0; q < R; ++q) _mm256_storeu_pd(c + (i + q) * ldc + j, r[q]);
  }
  for (; j < n; ++j)
    for (int q = 0; q < R; ++q) {
      double acc = c[(i + q) * ldc + j];
      for (std::size_t p = p0; p < p1; ++p) acc = std::fma(coef(i + q, p), b[p * ldb + j], acc);
      c[(i + q) * ldc + j] = acc;
    }
}

template <typename Coef>
inline void rank_update_rows(std::size_t m, std::size_t n, std::size_t k, Coef coef, const double* b,
                             std::size_t ldb, double* c, std::size_t ldc) {
  for (std::size_t p0 = 0; p0 < k; p0 += kChunkP) {
    const std::size_t p1 = std::min(k, p0 + kChunkP);
    std::size_t i = 0;
    for (; i + 4 <= m; i += 4) rank_update_block<4>(i, p0, p1, n, coef, b, ldb, c, ldc);
    for (; i < m; ++i) rank_update_block<1>(i, p0, p1, n, coef, b, ldb, c, ldc);
  }
}

// Transposes B once and reuses the rank-update kernel; each C row still
// depends only on its own row of A, so results do not vary with batch size.
void gemm_nt(std::size_t m, std::size_t n, std::size_t k, const double* a, std::size_t lda, const double* b,
             std::size_t ldb, double* c, std::size_t ldc, bool accumulate) {
  std::vector<double> bt(k * n);
  for (std::size_t j = 0; j < n; ++j)
    for (std::size_t p = 0; p < k; ++p) bt[p * n + j] = b[j * ldb + p];
  if (!accumulate)
    for (std::size_t i = 0; i < m; ++i) std::fill(c + i * ldc, c + i * ldc + n, 0.0);
  rank_update_rows(m, n, k, [a, lda](std::size_t i, std::size_t p) { return a[i * lda + p]; }, bt.data(), n, c, ldc);
}

void gemm_nn(std::size_t m, std::size_t n, std::size_t k, const double* a, std::size_t lda, const double* b,
             std::size_t ldb, double* c, std::size_t ldc) {
  rank_update_rows(m, n, k, [a, lda](std::size_t i, std::size_t p) { return a[i * lda + p]; }, b, ldb, c, ldc);
}

void gemm_tn(std::size_t m, std::size_t n, std::size_t k, const double* a, std::size_t lda, const double* b,
             std::size_t ldb, double* c, std::size_t ldc) {
  rank_update_rows(m, n, k, [a, lda](std::size_t i, std::size_t p) { return a[p * lda + i]; }, b, ldb, c, ldc);
}

void adam_update(std::size_t n, double* param, const double* grad, double* m, double* v, const AdamParams& p) {
  const double one_minus_b1 = 1.0 - p.beta1;
  const double one_minus_b2 = 1.0 - p.beta2;
  const __m256d b1 = _mm256_set1_pd(p.beta1), b2 = _mm256_set1_pd(p.beta2);
  const __m256d ob1 = _mm256_set1_pd(one_minus_b1), ob2 = _mm256_set1_pd(one_minus_b2);
  const __m256d bc1 = _mm256_set1_pd(p.bias_correction1), bc2 = _mm256_set1_pd(p.bias_correction2);
  const __m256d lr = _mm256_set1_pd(p.lr), eps = _mm256_set1_pd(p.eps);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    const __m256d g = _mm256_loadu_pd(grad + i);
    const __m256d mi = _mm256_add_pd(_mm256_mul_pd(b1, _mm256_loadu_pd(m + i)), _mm256_mul_pd(ob1, g));
    const __m256d vi =
        _mm256_add_pd(_mm256_mul_pd(b2, _mm256_loadu_pd(v + i)), _mm256_mul_pd(ob2, _mm256_mul_pd(g, g)));
    _mm256_storeu_pd(m + i, mi);
    _mm256_storeu_pd(v + i, vi);
    const __m256d m_hat = _mm256_div_pd(mi, bc1);
    const __m256d v_hat = _mm256_div_pd(vi, bc2);
    const __m256d step = _mm256_div_pd(_mm256_mul_pd(lr, m_hat), _mm256_add_pd(_mm256_sqrt_pd(v_hat), eps));
    _mm256_storeu_pd(param + i, _mm256_sub_pd(_mm256_loadu_pd(param + i), step));
  }
  for (; i < n; ++i) {
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
  if (n < 3) return;
  const __m256d vkeep = _mm256_set1_pd(keep), vscale = _mm256_set1_pd(scale), four = _mm256_set1_pd(4.0);
  std::size_t x = 1;
  for (; x + 4 < n; x += 4) {
    const __m256d c = _mm256_loadu_pd(center + x);
    const __m256d vert = _mm256_add_pd(_mm256_loadu_pd(up + x), _mm256_loadu_pd(down + x));
    const __m256d horiz = _mm256_add_pd(_mm256_loadu_pd(center + x - 1), _mm256_loadu_pd(center + x + 1));
    const __m256d lap = _mm256_sub_pd(_mm256_add_pd(vert, horiz), _mm256_mul_pd(four, c));
    _mm256_storeu_pd(out + x, _mm256_add_pd(_mm256_mul_pd(vkeep, c), _mm256_mul_pd(vscale, lap)));
  }
  for (; x + 1 < n; ++x) {
    const double lap = ((up[x] + down[x]) + (center[x - 1] + center[x + 1])) - 4.0 * center[x];
    out[x] = keep * center[x] + scale * lap;
  }
}

}  // namespace

const KernelTable& avx2_table() {
  static const KernelTable table{"avx2", gemm_nt, gemm_nn, gemm_tn, adam_update, stencil5_row};
  return table;
}

}  // namespace thermalsplat::simd
