#include <doctest.h>

#include <cmath>

#include "support.hpp"
#include "thermalsplat/pipeline.hpp"
#include "thermalsplat/sh.hpp"
#include "thermalsplat/verify/gradcheck.hpp"

using namespace thermalsplat;

TEST_CASE("full chain gradient on the smooth check scene") {
  Rng rng(31);
  verify::FdScene scene = verify::make_fd_scene(rng);
  CHECK(scene.model.cloud.size() == 20);
  const verify::GradCheckReport r = verify::check_gradients(scene, 70, rng);
  CHECK(r.probes.size() == 70);
  CHECK(r.max_rel_error < 1e-5);
}

TEST_CASE("gradient check without the optional modules") {
  Rng rng(32);
  verify::FdSceneOptions o;
  o.atf = o.tcm = false;
  o.gaussians = 6;
  o.sh_degree = 1;
  verify::FdScene scene = verify::make_fd_scene(rng, o);
  scene.use_dis = false;
  const verify::GradCheckReport r = verify::check_gradients(scene, 30, rng);
  CHECK(r.max_rel_error < 1e-5);
}

TEST_CASE("fresh modules leave the baseline render unchanged") {
  Rng rng(33);
  verify::FdScene scene = verify::make_fd_scene(rng);
  Model m = scene.model;
  m.atf = AtfNetwork::create(rng, 4, 32, 6);
  m.tcm = TcmNetwork::create(rng);
  PipelineOptions off;
  off.use_atf = off.use_tcm = false;
  const RadianceImage a = render_view(m, scene.camera, 0.7);
  const RadianceImage b = render_view(m, scene.camera, 0.7, off);
  CHECK(a == b);
}

TEST_CASE("negative SH radiance is clamped to zero") {
  Model m;
  Gaussian g;
  g.position = {0, 0, 3};
  g.log_scale = {std::log(0.2), std::log(0.2), std::log(0.2)};
  g.opacity_raw = logit(0.9);
  g.sh[0] = -1.0 / kShC0;  // 0.5 - 1 < 0
  m.cloud.push_back(g);
  m.box = SceneBox::around(m.cloud.positions);
  PipelineOptions o;
  o.use_atf = o.use_tcm = false;
  const PipelineForward f = pipeline_forward(m, test::camera(16, 16, 20), 0.0, o);
  CHECK(f.raw_radiance[0] < 0.0);
  CHECK(f.radiance[0] == 0.0);
  for (double v : f.output.data) CHECK(v == 0.0);
  // No gradient flows through the clamp.
  RadianceImage d(16, 16, 1.0);
  const ModelGradients gr = pipeline_backward(m, f, d);
  for (double v : gr.gaussians.d_sh[0]) CHECK(v == 0.0);
}

TEST_CASE("pipeline output equals render_view") {
  Rng rng(34);
  verify::FdScene scene = verify::make_fd_scene(rng);
  const PipelineForward f = pipeline_forward(scene.model, scene.camera, 0.4, scene.options, scene.model.cloud.positions);
  CHECK(f.output == render_view(scene.model, scene.camera, 0.4, scene.options));
}
