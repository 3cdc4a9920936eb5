#include <doctest.h>

#include <Eigen/Dense>
#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>
#include <vector>

#include "support.hpp"
#include "thermalsplat/projection.hpp"
#include "thermalsplat/sh.hpp"

using namespace thermalsplat;

namespace {

// Gauss-Legendre nodes and weights on [-1, 1] by Newton iteration.
void gauss_legendre(int n, std::vector<double>& x, std::vector<double>& w) {
  x.resize(n);
  w.resize(n);
  for (int i = 0; i < n; ++i) {
    double z = std::cos(std::numbers::pi * (i + 0.75) / (n + 0.5));
    double dp = 0.0;
    for (int it = 0; it < 100; ++it) {
      double p0 = 1.0, p1 = z;
      for (int k = 2; k <= n; ++k) {
        const double p2 = ((2 * k - 1) * z * p1 - (k - 1) * p0) / k;
        p0 = p1;
        p1 = p2;
      }
      dp = n * (z * p1 - p0) / (z * z - 1);
      const double dz = p1 / dp;
      z -= dz;
      if (std::abs(dz) < 1e-16) break;
    }
    x[i] = z;
    w[i] = 2.0 / ((1 - z * z) * dp * dp);
  }
}

Vec3 random_unit(Rng& rng) {
  return normalized(Vec3{rng.normal(), rng.normal(), rng.normal()});
}

}  // namespace

TEST_CASE("SH basis is orthonormal on the sphere") {
  // Product rule: Gauss-Legendre in cos(theta), uniform in phi; exact for
  // the degree-6 products of degree-3 harmonics.
  std::vector<double> xs, ws;
  gauss_legendre(8, xs, ws);
  const int nphi = 16;
  std::array<std::array<double, 16>, 16> gram{};
  for (std::size_t i = 0; i < xs.size(); ++i)
    for (int j = 0; j < nphi; ++j) {
      const double phi = 2.0 * std::numbers::pi * j / nphi;
      const double s = std::sqrt(1 - xs[i] * xs[i]);
      std::array<double, 16> y{};
      sh_basis({s * std::cos(phi), s * std::sin(phi), xs[i]}, 3, y);
      const double wt = ws[i] * 2.0 * std::numbers::pi / nphi;
      for (int a = 0; a < 16; ++a)
        for (int b = 0; b < 16; ++b) gram[a][b] += wt * y[a] * y[b];
    }
  for (int a = 0; a < 16; ++a)
    for (int b = 0; b < 16; ++b) CHECK(std::abs(gram[a][b] - (a == b ? 1.0 : 0.0)) < 1e-12);
}

TEST_CASE("SH evaluation") {
  std::array<double, 16> c{};
  CHECK(eval_sh(c, {0, 0, 1}, 3) == 0.5);
  c[0] = 1.0;
  CHECK(eval_sh(c, {0.6, 0, 0.8}, 0) == doctest::Approx(kShC0 + 0.5));
  CHECK_THROWS(eval_sh(c, {1, 1, 0}, 1));
  CHECK_THROWS(eval_sh(c, {1, 0, 0}, 4));
}

TEST_CASE("SH basis gradient matches finite differences") {
  Rng rng(2);
  for (int trial = 0; trial < 5; ++trial) {
    Vec3 d = random_unit(rng);
    std::array<double, 16> y{};
    std::array<Vec3, 16> dy{};
    sh_basis(d, 3, y, dy);
    for (int k = 0; k < 16; ++k)
      for (int a = 0; a < 3; ++a) {
        const double num = test::central_diff(d[a], [&] {
          std::array<double, 16> yy{};
          sh_basis(d, 3, yy);
          return yy[k];
        });
        CHECK(std::abs(num - dy[k][a]) < 1e-9);
      }
  }
}

TEST_CASE("3D covariance has the scales as eigenvalues (Eigen oracle)") {
  Rng rng(7);
  for (int trial = 0; trial < 10; ++trial) {
    const Quat q{rng.normal(), rng.normal(), rng.normal(), rng.normal()};
    const Vec3 s{rng.uniform(0.01, 2), rng.uniform(0.01, 2), rng.uniform(0.01, 2)};
    const Mat3 cov = covariance_3d(s, q);

    Eigen::Quaterniond eq(q.w, q.x, q.y, q.z);
    eq.normalize();
    const Eigen::Matrix3d r = eq.toRotationMatrix();
    const Eigen::Matrix3d ref = r * Eigen::Vector3d(s.x * s.x, s.y * s.y, s.z * s.z).asDiagonal() * r.transpose();
    Eigen::Matrix3d mine;
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j) mine(i, j) = cov(i, j);
    CHECK((mine - ref).cwiseAbs().maxCoeff() < 1e-12);

    Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> es(mine);
    std::array<double, 3> want{s.x * s.x, s.y * s.y, s.z * s.z};
    std::sort(want.begin(), want.end());
    for (int i = 0; i < 3; ++i) CHECK(es.eigenvalues()(i) == doctest::Approx(want[i]).epsilon(1e-10));
  }
}

TEST_CASE("projection of the mean follows the pinhole model") {
  const Camera cam = test::camera(64, 48, 50.0);
  Gaussian g;
  g.position = {0.3, -0.2, 2.0};
  const auto p = project_gaussian(g, cam);
  REQUIRE(p);
  CHECK(p->u == doctest::Approx(50.0 * 0.15 + 32.0));
  CHECK(p->v == doctest::Approx(50.0 * -0.1 + 24.0));
  CHECK(p->depth == 2.0);
  g.position.z = 0.005;
  CHECK_FALSE(project_gaussian(g, cam));
}

TEST_CASE("projected covariance of an isotropic Gaussian on axis") {
  const Camera cam = test::camera(64, 64, 50.0);
  Gaussian g;
  g.position = {0, 0, 4.0};
  const double s = 0.2;
  g.log_scale = {std::log(s), std::log(s), std::log(s)};
  const auto p = project_gaussian(g, cam);
  REQUIRE(p);
  const double sigma_px = 50.0 * s / 4.0;
  CHECK(p->cov2d.a == doctest::Approx(sigma_px * sigma_px + kCovarianceDilation));
  CHECK(p->cov2d.c == doctest::Approx(sigma_px * sigma_px + kCovarianceDilation));
  CHECK(std::abs(p->cov2d.b) < 1e-12);
}

TEST_CASE("projection backward matches finite differences") {
  Rng rng(11);
  Camera cam = test::camera(40, 30, 35.0);
  cam.rotation = rotation_matrix(normalized(Quat{1.0, 0.1, -0.2, 0.05}));
  cam.translation = {0.1, 0.2, 0.3};
  for (int trial = 0; trial < 5; ++trial) {
    Gaussian g;
    g.position = {rng.uniform(-0.5, 0.5), rng.uniform(-0.5, 0.5), rng.uniform(2, 4)};
    g.log_scale = {std::log(rng.uniform(0.05, 0.4)), std::log(rng.uniform(0.05, 0.4)), std::log(rng.uniform(0.05, 0.4))};
    g.rotation = {rng.normal(), rng.normal(), rng.normal(), rng.normal()};
    const double wu = rng.normal(), wv = rng.normal();
    const Sym2 wc{rng.normal(), rng.normal(), rng.normal()};
    auto loss = [&] {
      const auto p = project_gaussian(g, cam);
      return wu * p->u + wv * p->v + wc.a * p->cov2d.a + 2 * wc.b * p->cov2d.b + wc.c * p->cov2d.c;
    };
    const auto p = project_gaussian(g, cam);
    const ProjectionGrad gr = project_gaussian_backward(g, cam, *p, wu, wv, wc);
    for (int a = 0; a < 3; ++a) {
      CHECK(test::rel_err(gr.d_position[a], test::central_diff(g.position[a], loss)) < 1e-7);
      CHECK(test::rel_err(gr.d_log_scale[a], test::central_diff(g.log_scale[a], loss)) < 1e-7);
    }
    for (int a = 0; a < 4; ++a) CHECK(test::rel_err(gr.d_rotation[a], test::central_diff(g.rotation[a], loss)) < 1e-7);
  }
}
