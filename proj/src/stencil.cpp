#include "thermalsplat/stencil.hpp"

#include <cstddef>

#include "thermalsplat/parallel.hpp"
#include "thermalsplat/simd.hpp"

namespace thermalsplat {
namespace {

inline int neighbor(int i, int n, Boundary b) {
  if (i < 0) return b == Boundary::periodic ? i + n : 0;
  if (i >= n) return b == Boundary::periodic ? i - n : n - 1;
  return i;
}

}  // namespace

void stencil5(std::span<const double> u, int width, int height, Boundary boundary, double keep, double scale,
              std::span<double> out) {
  const auto& k = simd::kernels();
  const std::size_t w = static_cast<std::size_t>(width);
  parallel_for(0, static_cast<std::size_t>(height), [&](std::size_t yy) {
    const int y = static_cast<int>(yy);
    const double* up = u.data() + neighbor(y - 1, height, boundary) * w;
    const double* row = u.data() + y * w;
    const double* down = u.data() + neighbor(y + 1, height, boundary) * w;
    double* dst = out.data() + y * w;
    k.stencil5_row(w, up, row, down, keep, scale, dst);
    // Edge columns, same expression order as the row kernel.
    for (int x : {0, width - 1}) {
      if (x > 0 && x < width - 1) continue;
      const double left = row[neighbor(x - 1, width, boundary)];
      const double right = row[neighbor(x + 1, width, boundary)];
      const double lap = ((up[x] + down[x]) + (left + right)) - 4.0 * row[x];
      dst[x] = keep * row[x] + scale * lap;
    }
  });
}

void laplacian_adjoint_add(std::span<const double> v, int width, int height, Boundary boundary,
                           std::span<double> out) {
  const std::size_t w = static_cast<std::size_t>(width);
  for (int y = 0; y < height; ++y) {
    for (int x = 0; x < width; ++x) {
      const double g = v[y * w + x];
      if (g == 0.0) continue;
      out[y * w + x] -= 4.0 * g;
      out[neighbor(y - 1, height, boundary) * w + x] += g;
      out[neighbor(y + 1, height, boundary) * w + x] += g;
      out[y * w + neighbor(x - 1, width, boundary)] += g;
      out[y * w + neighbor(x + 1, width, boundary)] += g;
    }
  }
}

}  // namespace thermalsplat
