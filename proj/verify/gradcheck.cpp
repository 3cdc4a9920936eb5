#include "thermalsplat/verify/gradcheck.hpp"

#include <algorithm>
#include <cmath>
#include <functional>

#include "thermalsplat/sh.hpp"

namespace thermalsplat::verify {

namespace {

Quat random_quat(Rng& rng) {
  Quat q{rng.normal(), rng.normal(), rng.normal(), rng.normal()};
  return normalized(q);
}

// Minimum alpha over the image of one splat (attained at an image corner).
double min_alpha(const Splat& s, int w, int h) {
  double lo = 1.0;
  for (double x : {0.0, static_cast<double>(w - 1)})
    for (double y : {0.0, static_cast<double>(h - 1)}) {
      const double dx = x - s.proj.u, dy = y - s.proj.v;
      const double power = -0.5 * (s.conic.a * dx * dx + s.conic.c * dy * dy) - s.conic.b * dx * dy;
      lo = std::min(lo, s.opacity * std::exp(power));
    }
  return lo;
}

std::vector<std::uint32_t> signature(const FdScene& sc, const PipelineForward& f) {
  std::vector<std::uint32_t> sig;
  if (f.atf)
    for (std::size_t l = 1; l + 1 < f.atf->activations.size(); ++l)
      for (double a : f.atf->activations[l]) sig.push_back(a > 0.0);
  for (double r : f.raw_radiance) sig.push_back(r > 0.0);
  for (const auto& s : f.render.aux.splats) sig.push_back(s.visible);
  for (const auto& tile : f.render.aux.tiles) {
    sig.push_back(static_cast<std::uint32_t>(tile.size()));
    sig.insert(sig.end(), tile.begin(), tile.end());
  }
  sig.insert(sig.end(), f.render.aux.contributor_end.begin(), f.render.aux.contributor_end.end());
  if (f.tcm) {
    for (double v : f.tcm->cache.pre1.data) sig.push_back(v > 0.0);
    for (double v : f.tcm->cache.pre2.data) sig.push_back(v > 0.0);
  }
  for (std::size_t i = 0; i < f.output.size(); ++i) {
    const double p = f.output.data[i];
    sig.push_back((p < 0.0) | ((p > 1.0) << 1) | ((p > sc.gt.data[i]) << 2) | ((p < sc.gt.data[i]) << 3));
  }
  return sig;
}

struct Evaluated {
  double loss;
  std::vector<std::uint32_t> sig;
};

Evaluated evaluate(const FdScene& sc) {
  const PipelineForward f = pipeline_forward(sc.model, sc.camera, sc.time_norm, sc.options, sc.atf_anchor);
  const TotalLoss l = total_loss(f.output, sc.gt, sc.iteration, sc.weights, sc.use_dis);
  return {l.terms.total, signature(sc, f)};
}

struct ParamGroup {
  std::string name;
  std::vector<double*> values;
  std::vector<double> grads;
};

std::vector<ParamGroup> parameter_groups(FdScene& sc, const ModelGradients& g) {
  std::vector<ParamGroup> groups;
  GaussianCloud& c = sc.model.cloud;
  const GaussianGradients& gg = g.gaussians;
  const std::size_t n = c.size();
  ParamGroup pos{"position", {}, {}}, scl{"log_scale", {}, {}}, rot{"rotation", {}, {}}, opa{"opacity", {}, {}}, sh{"sh", {}, {}};
  const int nc = sh_coeff_count(c.sh_degree_active);
  for (std::size_t i = 0; i < n; ++i) {
    for (int a = 0; a < 3; ++a) {
      pos.values.push_back(&c.positions[i][a]);
      pos.grads.push_back(gg.d_position[i][a]);
      scl.values.push_back(&c.log_scales[i][a]);
      scl.grads.push_back(gg.d_log_scale[i][a]);
    }
    for (int a = 0; a < 4; ++a) {
      rot.values.push_back(&c.rotations[i][a]);
      rot.grads.push_back(gg.d_rotation[i][a]);
    }
    opa.values.push_back(&c.opacity_raw[i]);
    opa.grads.push_back(gg.d_opacity_raw[i]);
    for (int k = 0; k < nc; ++k) {
      sh.values.push_back(&c.sh[i][k]);
      sh.grads.push_back(gg.d_sh[i][k]);
    }
  }
  for (auto* p : {&pos, &scl, &rot, &opa, &sh}) groups.push_back(std::move(*p));
  auto add_net = [&](const std::string& name, std::vector<std::span<double>> blocks,
                     std::vector<std::span<const double>> grad_blocks) {
    ParamGroup pg{name, {}, {}};
    for (std::size_t b = 0; b < blocks.size(); ++b)
      for (std::size_t k = 0; k < blocks[b].size(); ++k) {
        pg.values.push_back(&blocks[b][k]);
        pg.grads.push_back(grad_blocks[b][k]);
      }
    groups.push_back(std::move(pg));
  };
  if (sc.model.atf && g.atf) add_net("atf", sc.model.atf->parameter_blocks(), std::as_const(*g.atf).parameter_blocks());
  if (sc.model.tcm && g.tcm) add_net("tcm", sc.model.tcm->parameter_blocks(), std::as_const(*g.tcm).parameter_blocks());
  return groups;
}

}  // namespace

double relative_error(double a, double b) { return std::abs(a - b) / std::max(1e-8, std::abs(a) + std::abs(b)); }

FdScene make_fd_scene(Rng& rng, const FdSceneOptions& o) {
  FdScene sc;
  const double f = 1.25 * o.size;
  sc.camera.fx = sc.camera.fy = f;
  sc.camera.cx = sc.camera.cy = 0.5 * o.size;
  sc.camera.width = sc.camera.height = o.size;

  GaussianCloud& cloud = sc.model.cloud;
  cloud.sh_degree_active = o.sh_degree;
  std::vector<double> depths;
  while (static_cast<int>(cloud.size()) < o.gaussians) {
    Gaussian g;
    const double z = rng.uniform(3.0, 5.0);
    bool close = false;
    for (double d : depths) close = close || std::abs(d - z) < 2e-3;
    if (close) continue;
    const double u = rng.uniform(0.3, 0.7) * o.size, v = rng.uniform(0.3, 0.7) * o.size;
    g.position = {(u - sc.camera.cx) * z / f, (v - sc.camera.cy) * z / f, z};
    const double sigma_px = rng.uniform(0.8, 1.1) * o.size;
    const double s = sigma_px * z / f;
    g.log_scale = {std::log(s * rng.uniform(0.6, 1.6)), std::log(s * rng.uniform(0.6, 1.6)),
                   std::log(s * rng.uniform(0.6, 1.6))};
    g.rotation = random_quat(rng);
    // Stored quaternions need not be unit length.
    const double qs = rng.uniform(0.8, 1.2);
    g.rotation = {g.rotation.w * qs, g.rotation.x * qs, g.rotation.y * qs, g.rotation.z * qs};
    g.opacity_raw = logit(rng.uniform(0.05, 0.3));
    g.sh[0] = (rng.uniform(0.25, 0.55) - kShDcOffset) / kShC0;
    for (int k = 1; k < sh_coeff_count(o.sh_degree); ++k) g.sh[k] = rng.uniform(-0.05, 0.05);

    GaussianCloud one;
    one.push_back(g);
    const auto proj = project_gaussian(g, sc.camera);
    if (!proj) continue;
    const RenderResult rr = render_forward(one, sc.camera, std::vector<double>{0.5});
    const Splat& sp = rr.aux.splats[0];
    if (!sp.visible || min_alpha(sp, o.size, o.size) < 1.5 / 255.0) continue;
    cloud.push_back(g);
    depths.push_back(z);
  }
  sc.atf_anchor = cloud.positions;
  sc.model.box = SceneBox::around(cloud.positions);

  if (o.atf) {
    AtfNetwork net = AtfNetwork::create(rng, o.atf_depth, o.atf_width, o.atf_frequencies);
    DenseLayer& head = net.layers.back();
    for (double& w : head.weight) w = rng.uniform(-0.1, 0.1);
    head.bias = {rng.uniform(-0.2, 0.2), rng.uniform(-0.2, 0.2), rng.uniform(0.5, 1.5)};
    for (auto& l : net.layers)
      for (double& b : l.bias) b += rng.uniform(-0.05, 0.05);
    sc.model.atf = std::move(net);
  }
  if (o.tcm) {
    TcmNetwork net = TcmNetwork::create(rng);
    for (double& w : net.layers.back().weight) w = rng.uniform(-0.2, 0.2);
    net.layers.back().bias[0] = rng.uniform(-0.05, 0.05);
    sc.model.tcm = std::move(net);
  }
  sc.options.use_atf = o.atf;
  sc.options.use_tcm = o.tcm;
  sc.time_norm = rng.uniform(0.0, 1.0);
  sc.gt = RadianceImage(o.size, o.size);
  for (double& v : sc.gt.data) v = rng.uniform(0.05, 0.95);
  return sc;
}

double fd_loss(const FdScene& sc) { return evaluate(sc).loss; }

GradCheckReport check_gradients(FdScene& sc, int probes, Rng& rng, double h) {
  const PipelineForward f = pipeline_forward(sc.model, sc.camera, sc.time_norm, sc.options, sc.atf_anchor);
  const TotalLoss l = total_loss(f.output, sc.gt, sc.iteration, sc.weights, sc.use_dis);
  const ModelGradients g = pipeline_backward(sc.model, f, l.d_pred);
  const std::vector<std::uint32_t> base_sig = signature(sc, f);
  std::vector<ParamGroup> groups = parameter_groups(sc, g);

  GradCheckReport report;
  int done = 0, attempts = 0;
  while (done < probes && attempts < probes * 20) {
    ++attempts;
    ParamGroup& pg = groups[static_cast<std::size_t>(done) % groups.size()];
    const std::size_t k = static_cast<std::size_t>(rng.below(pg.values.size()));
    double* p = pg.values[k];
    const double x0 = *p;
    double fv[4];
    bool smooth = true;
    const double steps[4] = {2 * h, h, -h, -2 * h};
    for (int s = 0; s < 4; ++s) {
      *p = x0 + steps[s];
      const Evaluated e = evaluate(sc);
      fv[s] = e.loss;
      smooth = smooth && e.sig == base_sig;
    }
    *p = x0;
    if (!smooth) {
      ++report.redrawn;
      continue;
    }
    const double numeric = (-fv[0] + 8.0 * fv[1] - 8.0 * fv[2] + fv[3]) / (12.0 * h);
    ProbeResult r{pg.name + "[" + std::to_string(k) + "]", pg.grads[k], numeric, relative_error(pg.grads[k], numeric)};
    if (r.rel_error >= report.max_rel_error) {
      report.max_rel_error = r.rel_error;
      report.worst = r.parameter;
    }
    report.probes.push_back(r);
    ++done;
  }
  return report;
}

}  // namespace thermalsplat::verify
