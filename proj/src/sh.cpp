#include "thermalsplat/sh.hpp"

#include <stdexcept>
#include <string>

namespace thermalsplat {
namespace {

constexpr double kC1 = 0.4886025119029199;
constexpr double kC2[] = {1.0925484305920792, -1.0925484305920792, 0.31539156525252005, -1.0925484305920792,
                          0.5462742152960396};
constexpr double kC3[] = {-0.5900435899266435, 2.890611442640554, -0.4570457994644658, 0.3731763325901154,
                          -0.4570457994644658, 1.445305721320277, -0.5900435899266435};

}  // namespace

void sh_basis(const Vec3& dir, int degree, std::span<double> y, std::span<Vec3> dy) {
  const bool grad = !dy.empty();
  const double x = dir.x, yy_ = dir.y, z = dir.z;
  y[0] = kShC0;
  if (grad) dy[0] = {};
  if (degree < 1) return;

  y[1] = -kC1 * yy_;
  y[2] = kC1 * z;
  y[3] = -kC1 * x;
  if (grad) {
    dy[1] = {0, -kC1, 0};
    dy[2] = {0, 0, kC1};
    dy[3] = {-kC1, 0, 0};
  }
  if (degree < 2) return;

  const double xx = x * x, yy = yy_ * yy_, zz = z * z;
  const double xy = x * yy_, yz = yy_ * z, xz = x * z;
  y[4] = kC2[0] * xy;
  y[5] = kC2[1] * yz;
  y[6] = kC2[2] * (2.0 * zz - xx - yy);
  y[7] = kC2[3] * xz;
  y[8] = kC2[4] * (xx - yy);
  if (grad) {
    dy[4] = {kC2[0] * yy_, kC2[0] * x, 0};
    dy[5] = {0, kC2[1] * z, kC2[1] * yy_};
    dy[6] = {-2.0 * kC2[2] * x, -2.0 * kC2[2] * yy_, 4.0 * kC2[2] * z};
    dy[7] = {kC2[3] * z, 0, kC2[3] * x};
    dy[8] = {2.0 * kC2[4] * x, -2.0 * kC2[4] * yy_, 0};
  }
  if (degree < 3) return;

  y[9] = kC3[0] * yy_ * (3.0 * xx - yy);
  y[10] = kC3[1] * xy * z;
  y[11] = kC3[2] * yy_ * (4.0 * zz - xx - yy);
  y[12] = kC3[3] * z * (2.0 * zz - 3.0 * xx - 3.0 * yy);
  y[13] = kC3[4] * x * (4.0 * zz - xx - yy);
  y[14] = kC3[5] * z * (xx - yy);
  y[15] = kC3[6] * x * (xx - 3.0 * yy);
  if (grad) {
    dy[9] = {6.0 * kC3[0] * xy, kC3[0] * (3.0 * xx - 3.0 * yy), 0};
    dy[10] = {kC3[1] * yz, kC3[1] * xz, kC3[1] * xy};
    dy[11] = {-2.0 * kC3[2] * xy, kC3[2] * (4.0 * zz - xx - 3.0 * yy), 8.0 * kC3[2] * yz};
    dy[12] = {-6.0 * kC3[3] * xz, -6.0 * kC3[3] * yz, kC3[3] * (6.0 * zz - 3.0 * xx - 3.0 * yy)};
    dy[13] = {kC3[4] * (4.0 * zz - 3.0 * xx - yy), -2.0 * kC3[4] * xy, 8.0 * kC3[4] * xz};
    dy[14] = {2.0 * kC3[5] * xz, -2.0 * kC3[5] * yz, kC3[5] * (xx - yy)};
    dy[15] = {kC3[6] * (3.0 * xx - 3.0 * yy), -6.0 * kC3[6] * xy, 0};
  }
}

double eval_sh(std::span<const double> coeffs, const Vec3& view_dir, int degree) {
  if (degree < 0 || degree > 3) throw std::invalid_argument("SH degree " + std::to_string(degree) + " out of range");
  const int n = sh_coeff_count(degree);
  if (coeffs.size() < static_cast<std::size_t>(n)) throw std::invalid_argument("too few SH coefficients");
  if (std::abs(norm(view_dir) - 1.0) > 1e-6) throw std::invalid_argument("view direction is not unit length");
  std::array<double, 16> y{};
  sh_basis(view_dir, degree, y);
  double s = 0.0;
  for (int k = 0; k < n; ++k) s += coeffs[k] * y[k];
  return s + kShDcOffset;
}

}  // namespace thermalsplat
