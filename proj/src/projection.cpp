#include "thermalsplat/projection.hpp"

namespace thermalsplat {
namespace {

struct Mat23 {
  double m[2][3]{};
};

Mat23 projection_jacobian(const Camera& cam, const Vec3& pc) {
  const double iz = 1.0 / pc.z;
  Mat23 j;
  j.m[0][0] = cam.fx * iz;
  j.m[0][2] = -cam.fx * pc.x * iz * iz;
  j.m[1][1] = cam.fy * iz;
  j.m[1][2] = -cam.fy * pc.y * iz * iz;
  return j;
}

Mat23 mul(const Mat23& a, const Mat3& b) {
  Mat23 r;
  for (int i = 0; i < 2; ++i)
    for (int j = 0; j < 3; ++j) {
      double s = 0.0;
      for (int k = 0; k < 3; ++k) s += a.m[i][k] * b(k, j);
      r.m[i][j] = s;
    }
  return r;
}

// Gradient of a unit quaternion's rotation matrix contracted with dR.
Quat rotation_vjp(const Quat& q, const Mat3& dr) {
  const double w = q.w, x = q.x, y = q.y, z = q.z;
  Quat g{0, 0, 0, 0};
  g.w = 2.0 * (-z * dr(0, 1) + y * dr(0, 2) + z * dr(1, 0) - x * dr(1, 2) - y * dr(2, 0) + x * dr(2, 1));
  g.x = 2.0 * (y * dr(0, 1) + z * dr(0, 2) + y * dr(1, 0) - w * dr(1, 2) + z * dr(2, 0) + w * dr(2, 1)) -
        4.0 * x * (dr(1, 1) + dr(2, 2));
  g.y = 2.0 * (x * dr(0, 1) + w * dr(0, 2) + x * dr(1, 0) + z * dr(1, 2) - w * dr(2, 0) + z * dr(2, 1)) -
        4.0 * y * (dr(0, 0) + dr(2, 2));
  g.z = 2.0 * (-w * dr(0, 1) + x * dr(0, 2) + w * dr(1, 0) + y * dr(1, 2) + x * dr(2, 0) + y * dr(2, 1)) -
        4.0 * z * (dr(0, 0) + dr(1, 1));
  return g;
}

}  // namespace

Mat3 covariance_3d(const Vec3& scale, const Quat& rotation) {
  const Mat3 r = rotation_matrix(normalized(rotation));
  const Mat3 m = r * Mat3::diag(scale.x, scale.y, scale.z);
  return m * m.transposed();
}

std::optional<Projection> project_gaussian(const Gaussian& g, const Camera& cam) {
  const Vec3 pc = cam.to_camera(g.position);
  if (pc.z <= kNearPlane) return std::nullopt;

  Projection p;
  p.cam_point = pc;
  p.depth = pc.z;
  p.u = cam.fx * pc.x / pc.z + cam.cx;
  p.v = cam.fy * pc.y / pc.z + cam.cy;

  const Mat3 sigma = covariance_3d(g.scale(), g.rotation);
  const Mat23 t = mul(projection_jacobian(cam, pc), cam.rotation);
  // cov = T Sigma T^T
  double ts[2][3]{};
  for (int i = 0; i < 2; ++i)
    for (int j = 0; j < 3; ++j)
      for (int k = 0; k < 3; ++k) ts[i][j] += t.m[i][k] * sigma(k, j);
  double cov[2][2]{};
  for (int i = 0; i < 2; ++i)
    for (int j = 0; j < 2; ++j)
      for (int k = 0; k < 3; ++k) cov[i][j] += ts[i][k] * t.m[j][k];
  p.cov2d = {cov[0][0] + kCovarianceDilation, 0.5 * (cov[0][1] + cov[1][0]), cov[1][1] + kCovarianceDilation};
  return p;
}

ProjectionGrad project_gaussian_backward(const Gaussian& g, const Camera& cam, const Projection& proj,
                                         double d_u, double d_v, const Sym2& d_cov) {
  const Vec3& pc = proj.cam_point;
  const Vec3 scale = g.scale();
  const double qn = norm(g.rotation);
  const Quat q = {g.rotation.w / qn, g.rotation.x / qn, g.rotation.y / qn, g.rotation.z / qn};
  const Mat3 r = rotation_matrix(q);
  const Mat3 m = r * Mat3::diag(scale.x, scale.y, scale.z);
  const Mat3 sigma = m * m.transposed();
  const Mat23 t = mul(projection_jacobian(cam, pc), cam.rotation);
  const double gm[2][2] = {{d_cov.a, d_cov.b}, {d_cov.b, d_cov.c}};

  // d Sigma = T^T G T
  Mat3 d_sigma;
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) {
      double s = 0.0;
      for (int a = 0; a < 2; ++a)
        for (int b = 0; b < 2; ++b) s += t.m[a][i] * gm[a][b] * t.m[b][j];
      d_sigma(i, j) = s;
    }

  // dT = 2 G T Sigma, dJ = dT W^T
  double gt[2][3]{};
  for (int a = 0; a < 2; ++a)
    for (int j = 0; j < 3; ++j)
      for (int b = 0; b < 2; ++b) gt[a][j] += gm[a][b] * t.m[b][j];
  double d_t[2][3]{};
  for (int a = 0; a < 2; ++a)
    for (int j = 0; j < 3; ++j) {
      double s = 0.0;
      for (int k = 0; k < 3; ++k) s += gt[a][k] * sigma(k, j);
      d_t[a][j] = 2.0 * s;
    }
  double d_j[2][3]{};
  for (int a = 0; a < 2; ++a)
    for (int j = 0; j < 3; ++j)
      for (int k = 0; k < 3; ++k) d_j[a][j] += d_t[a][k] * cam.rotation(j, k);

  const double iz = 1.0 / pc.z, iz2 = iz * iz, iz3 = iz2 * iz;
  Vec3 d_pc;
  d_pc.x = d_u * cam.fx * iz - d_j[0][2] * cam.fx * iz2;
  d_pc.y = d_v * cam.fy * iz - d_j[1][2] * cam.fy * iz2;
  d_pc.z = -d_u * cam.fx * pc.x * iz2 - d_v * cam.fy * pc.y * iz2 - d_j[0][0] * cam.fx * iz2 -
           d_j[1][1] * cam.fy * iz2 + d_j[0][2] * 2.0 * cam.fx * pc.x * iz3 + d_j[1][2] * 2.0 * cam.fy * pc.y * iz3;

  ProjectionGrad out;
  out.d_position = cam.rotation.transposed() * d_pc;

  // Sigma = M M^T, M = R S
  const Mat3 d_m = (d_sigma + d_sigma.transposed()) * m;
  Mat3 d_r;
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) d_r(i, j) = d_m(i, j) * scale[j];
  for (int j = 0; j < 3; ++j) {
    double ds = 0.0;
    for (int i = 0; i < 3; ++i) ds += r(i, j) * d_m(i, j);
    out.d_log_scale[j] = ds * scale[j];
  }

  const Quat d_qn = rotation_vjp(q, d_r);
  const double proj_len = q.w * d_qn.w + q.x * d_qn.x + q.y * d_qn.y + q.z * d_qn.z;
  out.d_rotation = {(d_qn.w - q.w * proj_len) / qn, (d_qn.x - q.x * proj_len) / qn, (d_qn.y - q.y * proj_len) / qn,
                    (d_qn.z - q.z * proj_len) / qn};
  return out;
}

}  // namespace thermalsplat
