#include <doctest.h>

#include <cmath>
#include <vector>

#include "support.hpp"
#include "thermalsplat/parallel.hpp"
#include "thermalsplat/render.hpp"

using namespace thermalsplat;

namespace {

// Optical axis through the center of pixel (16, 16).
Camera centered32() {
  Camera c = test::camera(32, 32, 40);
  c.cx = c.cy = 16.5;
  return c;
}

Gaussian blob(Vec3 p, double scale, double opacity) {
  Gaussian g;
  g.position = p;
  g.log_scale = {std::log(scale), std::log(scale), std::log(scale)};
  g.opacity_raw = logit(opacity);
  return g;
}

GaussianCloud random_cloud(Rng& rng, int n) {
  GaussianCloud c;
  for (int i = 0; i < n; ++i) {
    Gaussian g = blob({rng.uniform(-0.6, 0.6), rng.uniform(-0.6, 0.6), rng.uniform(2.5, 4)}, 0.1, rng.uniform(0.2, 0.9));
    g.log_scale = {std::log(rng.uniform(0.05, 0.3)), std::log(rng.uniform(0.05, 0.3)), std::log(rng.uniform(0.05, 0.3))};
    g.rotation = normalized(Quat{rng.normal(), rng.normal(), rng.normal(), rng.normal()});
    c.push_back(g);
  }
  return c;
}

}  // namespace

TEST_CASE("empty scene renders the background") {
  GaussianCloud c;
  RenderSettings s;
  s.background = 0.25;
  const RenderResult r = render_forward(c, test::camera(20, 10, 20), {}, s);
  CHECK(r.image.width == 20);
  CHECK(r.image.height == 10);
  for (double v : r.image.data) CHECK(v == 0.25);
}

TEST_CASE("single Gaussian at the pixel center composites alpha * radiance") {
  GaussianCloud c;
  c.push_back(blob({0, 0, 2}, 0.05, 0.6));
  const Camera cam = centered32();
  const std::vector<double> rad{0.8};
  RenderSettings s;
  s.background = 0.1;
  const RenderResult r = render_forward(c, cam, rad, s);
  CHECK(r.image.at(16, 16) == doctest::Approx(0.6 * 0.8 + 0.4 * 0.1).epsilon(1e-12));
  // Far corner: below the alpha threshold, background only.
  CHECK(r.image.at(0, 0) == 0.1);
}

TEST_CASE("opacity is clamped at 0.99") {
  GaussianCloud c;
  c.push_back(blob({0, 0, 2}, 0.05, 0.999999));
  const RenderResult r = render_forward(c, centered32(), std::vector<double>{1.0});
  CHECK(r.image.at(16, 16) == doctest::Approx(kAlphaMax).epsilon(1e-12));
}

TEST_CASE("front Gaussian occludes the back one") {
  GaussianCloud c;
  c.push_back(blob({0, 0, 4}, 0.1, 0.9));  // back, listed first
  c.push_back(blob({0, 0, 2}, 0.05, 0.9));  // front
  const RenderResult r = render_forward(c, centered32(), std::vector<double>{0.0, 1.0});
  CHECK(r.image.at(16, 16) == doctest::Approx(0.9).epsilon(1e-12));
}

TEST_CASE("Gaussians behind the camera are culled") {
  GaussianCloud c;
  c.push_back(blob({0, 0, -2}, 0.5, 0.9));
  const RenderResult r = render_forward(c, test::camera(16, 16, 20), std::vector<double>{1.0});
  CHECK(r.aux.stats.culled_near == 1);
  for (double v : r.image.data) CHECK(v == 0.0);
}

TEST_CASE("radiance length mismatch throws") {
  GaussianCloud c;
  c.push_back(blob({0, 0, 2}, 0.1, 0.5));
  CHECK_THROWS_AS(render_forward(c, test::camera(8, 8, 10), std::vector<double>{}), std::invalid_argument);
}

TEST_CASE("replay reproduces the forward image and rendering is thread-count invariant") {
  Rng rng(1);
  const GaussianCloud c = random_cloud(rng, 60);
  std::vector<double> rad(c.size());
  for (double& v : rad) v = rng.uniform();
  const Camera cam = test::camera(50, 37, 45);
  const int before = thread_count();
  set_thread_count(1);
  const RenderResult one = render_forward(c, cam, rad);
  set_thread_count(4);
  const RenderResult four = render_forward(c, cam, rad);
  CHECK(one.image == four.image);
  CHECK(replay_forward(one.aux) == one.image);

  RadianceImage w(50, 37);
  for (double& v : w.data) v = rng.normal();
  const GaussianGradients g4 = render_backward(four.aux, w);
  set_thread_count(1);
  const GaussianGradients g1 = render_backward(one.aux, w);
  set_thread_count(before);
  CHECK(g1.d_position == g4.d_position);
  CHECK(g1.d_opacity_raw == g4.d_opacity_raw);
  CHECK(g1.d_radiance == g4.d_radiance);
}

TEST_CASE("render backward matches finite differences") {
  Rng rng(9);
  GaussianCloud c = random_cloud(rng, 12);
  // Wide splats so every probe sits on a smooth piece of the image.
  for (auto& s : c.log_scales) s = {std::log(0.4), std::log(0.3), std::log(0.5)};
  std::vector<double> rad(c.size());
  for (double& v : rad) v = rng.uniform(0.2, 0.9);
  const Camera cam = test::camera(24, 20, 25);
  RadianceImage w(24, 20);
  for (double& v : w.data) v = rng.normal();
  auto loss = [&] {
    const RadianceImage img = render_forward(c, cam, rad).image;
    double s = 0.0;
    for (std::size_t i = 0; i < img.data.size(); ++i) s += w.data[i] * img.data[i];
    return s;
  };
  const RenderResult r = render_forward(c, cam, rad);
  const GaussianGradients g = render_backward(r.aux, w);
  int checked = 0;
  for (std::size_t i = 0; i < c.size(); ++i) {
    if (!r.aux.splats[i].visible) continue;
    ++checked;
    CHECK(test::rel_err(g.d_radiance[i], test::central_diff(rad[i], loss)) < 1e-6);
    CHECK(test::rel_err(g.d_opacity_raw[i], test::central_diff(c.opacity_raw[i], loss)) < 1e-6);
    for (int a = 0; a < 3; ++a) {
      CHECK(test::rel_err(g.d_position[i][a], test::central_diff(c.positions[i][a], loss)) < 1e-6);
      CHECK(test::rel_err(g.d_log_scale[i][a], test::central_diff(c.log_scales[i][a], loss)) < 1e-6);
    }
    for (int a = 0; a < 4; ++a)
      CHECK(test::rel_err(g.d_rotation[i][a], test::central_diff(c.rotations[i][a], loss)) < 1e-6);
  }
  CHECK(checked > 0);
}

TEST_CASE("tile binning lists each splat in every tile its 3-sigma box touches") {
  GaussianCloud c;
  c.push_back(blob({0, 0, 2}, 0.05, 0.9));
  const RenderResult r = render_forward(c, test::camera(64, 64, 40), std::vector<double>{1.0});
  // 3 sigma of ~1 px around (32, 32) lies inside the four tiles meeting there.
  int listed = 0;
  for (const auto& t : r.aux.tiles) listed += static_cast<int>(t.size());
  CHECK(listed == 4);
}
