#pragma once

#include <optional>

#include "thermalsplat/math.hpp"
#include "thermalsplat/scene.hpp"

namespace thermalsplat {

inline constexpr double kNearPlane = 0.01;
inline constexpr double kCovarianceDilation = 0.3;

/// Sigma = R S S^T R^T with S = diag(scale), R from the (normalized) rotation.
Mat3 covariance_3d(const Vec3& scale, const Quat& rotation);

struct Projection {
  double u = 0.0, v = 0.0;  // pixel-space mean
  Sym2 cov2d;               // includes the dilation
  double depth = 0.0;       // camera-space z
  Vec3 cam_point;
};

/// EWA projection of one Gaussian. std::nullopt when the center is at or
/// behind the near plane.
std::optional<Projection> project_gaussian(const Gaussian& g, const Camera& camera);

/// Gradients of a scalar loss w.r.t. a Gaussian's storage parameters.
struct ProjectionGrad {
  Vec3 d_position;
  Vec3 d_log_scale;
  Quat d_rotation{0, 0, 0, 0};  // w.r.t. the stored (un-normalized) quaternion
};

/// Chains d/d(mean2d) and d/d(cov2d) back to position, log-scale and
/// rotation. `d_cov` holds per-entry partials of the full 2x2 matrix:
/// {dL/dC00, dL/dC01 (= dL/dC10), dL/dC11}.
ProjectionGrad project_gaussian_backward(const Gaussian& g, const Camera& camera, const Projection& proj,
                                         double d_u, double d_v, const Sym2& d_cov);

}  // namespace thermalsplat
