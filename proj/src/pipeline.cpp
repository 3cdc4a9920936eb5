#include "thermalsplat/pipeline.hpp"

#include <algorithm>
#include <stdexcept>

#include "thermalsplat/parallel.hpp"
#include "thermalsplat/sh.hpp"

namespace thermalsplat {

PipelineForward pipeline_forward(const Model& model, const Camera& camera, double time_norm,
                                 const PipelineOptions& options, std::span<const Vec3> atf_positions) {
  const GaussianCloud& cloud = model.cloud;
  const std::size_t n = cloud.size();
  const int degree = cloud.sh_degree_active;
  PipelineForward f;

  if (options.use_atf && model.atf) {
    std::span<const Vec3> source = atf_positions.empty() ? std::span<const Vec3>(cloud.positions) : atf_positions;
    if (source.size() != n) throw std::invalid_argument("pipeline: ATF position count mismatch");
    std::vector<Vec3> normalized(n);
    for (std::size_t i = 0; i < n; ++i) normalized[i] = model.box.normalize(source[i]);
    f.atf = atf_apply(*model.atf, normalized, time_norm, cloud.sh);
    f.sh = f.atf->sh;
  } else {
    f.sh = cloud.sh;
  }

  const Vec3 eye = camera.center();
  f.view_dirs.resize(n);
  f.view_dist.resize(n);
  f.raw_radiance.resize(n);
  f.radiance.resize(n);
  parallel_for(0, n, [&](std::size_t i) {
    const Vec3 d = cloud.positions[i] - eye;
    const double len = norm(d);
    const Vec3 dir = len > 0.0 ? d * (1.0 / len) : Vec3{0, 0, 1};
    std::array<double, kMaxShCoeffs> y{};
    sh_basis(dir, degree, y);
    // Same summation order as eval_sh.
    double s = 0.0;
    for (int k = 0; k < sh_coeff_count(degree); ++k) s += f.sh[i][k] * y[k];
    const double r = s + kShDcOffset;
    f.view_dirs[i] = dir;
    f.view_dist[i] = len;
    f.raw_radiance[i] = r;
    f.radiance[i] = std::max(r, 0.0);
  });

  f.render = render_forward(cloud, camera, f.radiance, options.render);
  if (options.use_tcm && model.tcm) {
    f.tcm = tcm_forward(f.render.image, *model.tcm);
    f.output = f.tcm->refined;
  } else {
    f.output = f.render.image;
  }
  return f;
}

ModelGradients pipeline_backward(const Model& model, const PipelineForward& fwd, const RadianceImage& d_output) {
  if (!d_output.same_shape(fwd.output)) throw std::invalid_argument("pipeline: gradient image shape mismatch");
  ModelGradients out;
  RadianceImage d_render;
  if (fwd.tcm) {
    TcmBackward tb = tcm_backward(*model.tcm, fwd.tcm->cache, d_output);
    out.tcm = std::move(tb.d_net);
    d_render = std::move(tb.d_image);
  } else {
    d_render = d_output;
  }

  out.gaussians = render_backward(fwd.render.aux, d_render);
  GaussianGradients& g = out.gaussians;
  const GaussianCloud& cloud = model.cloud;
  const std::size_t n = cloud.size();
  const int degree = cloud.sh_degree_active;
  const int nc = sh_coeff_count(degree);

  std::vector<ShCoeffs> d_sh(n, ShCoeffs{});
  parallel_for(0, n, [&](std::size_t i) {
    const double dr = g.d_radiance[i];
    if (dr == 0.0 || !(fwd.raw_radiance[i] > 0.0)) return;
    std::array<double, kMaxShCoeffs> y{};
    std::array<Vec3, kMaxShCoeffs> dy{};
    sh_basis(fwd.view_dirs[i], degree, y, dy);
    Vec3 d_dir;
    for (int k = 0; k < nc; ++k) {
      d_sh[i][k] = dr * y[k];
      d_dir += dy[k] * (dr * fwd.sh[i][k]);
    }
    // dir = (p - eye) / |p - eye|
    const Vec3& u = fwd.view_dirs[i];
    const Vec3 tangential = d_dir - u * dot(u, d_dir);
    g.d_position[i] += tangential * (1.0 / fwd.view_dist[i]);
  });

  if (fwd.atf) {
    AtfBackward ab = atf_backward(*model.atf, *fwd.atf, d_sh);
    out.atf = std::move(ab.d_net);
    g.d_sh = std::move(ab.d_sh0);
  } else {
    g.d_sh = std::move(d_sh);
  }
  return out;
}

RadianceImage render_view(const Model& model, const Camera& camera, double time_norm, const PipelineOptions& options) {
  return pipeline_forward(model, camera, time_norm, options).output;
}

}  // namespace thermalsplat
