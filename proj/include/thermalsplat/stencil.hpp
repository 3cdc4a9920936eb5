#pragma once

#include <span>

namespace thermalsplat {

enum class Boundary {
  periodic,
  replicate,  // clamp-to-edge; equals the zero-flux (insulated) condition for diffusion
};

/// out = keep * u + scale * L(u), where L is the 5-point Laplacian
/// u(x+1,y) + u(x-1,y) + u(x,y+1) + u(x,y-1) - 4 u(x,y) under `boundary`.
/// `out` must not alias `u`.
void stencil5(std::span<const double> u, int width, int height, Boundary boundary, double keep, double scale,
              std::span<double> out);

/// Adjoint of stencil5 with keep = 0, scale = 1: accumulates L^T(v) into out.
void laplacian_adjoint_add(std::span<const double> v, int width, int height, Boundary boundary,
                           std::span<double> out);

}  // namespace thermalsplat
