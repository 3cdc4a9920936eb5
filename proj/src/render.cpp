#include "thermalsplat/render.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "thermalsplat/parallel.hpp"

namespace thermalsplat {
namespace {

struct PixelRange {
  int x0, x1, y0, y1;  // inclusive
  bool empty() const { return x0 > x1 || y0 > y1; }
};

PixelRange splat_extent(const Splat& s, int width, int height) {
  const double ex = 3.0 * std::sqrt(s.proj.cov2d.a);
  const double ey = 3.0 * std::sqrt(s.proj.cov2d.c);
  PixelRange r;
  // Pixel x has its center at x + 0.5.
  r.x0 = std::max(0, static_cast<int>(std::ceil(s.proj.u - ex - 0.5)));
  r.x1 = std::min(width - 1, static_cast<int>(std::floor(s.proj.u + ex - 0.5)));
  r.y0 = std::max(0, static_cast<int>(std::ceil(s.proj.v - ey - 0.5)));
  r.y1 = std::min(height - 1, static_cast<int>(std::floor(s.proj.v + ey - 0.5)));
  return r;
}

// Gaussian falloff of splat s at the center of pixel (px, py); returns the offset too.
inline double falloff(const Splat& s, int px, int py, double& dx, double& dy) {
  dx = px + 0.5 - s.proj.u;
  dy = py + 0.5 - s.proj.v;
  const double power = -0.5 * (s.conic.a * dx * dx + s.conic.c * dy * dy) - s.conic.b * dx * dy;
  return std::exp(power);
}

struct TileBounds {
  int x0, x1, y0, y1;  // half-open pixel bounds
};

TileBounds tile_bounds(const RenderAux& aux, std::size_t tile) {
  const int ts = aux.settings.tile_size;
  const int tx = static_cast<int>(tile) % aux.tiles_x;
  const int ty = static_cast<int>(tile) / aux.tiles_x;
  return {tx * ts, std::min(aux.camera.width, (tx + 1) * ts), ty * ts, std::min(aux.camera.height, (ty + 1) * ts)};
}

// Composites every pixel of one tile. Fills image/final_T/contributor_end.
void composite_tile(const RenderAux& aux, std::size_t tile, RadianceImage& image, std::vector<double>* final_t,
                    std::vector<std::uint32_t>* contrib_end, std::size_t* skipped, std::size_t* max_contrib) {
  const TileBounds b = tile_bounds(aux, tile);
  const auto& list = aux.tiles[tile];
  for (int y = b.y0; y < b.y1; ++y) {
    for (int x = b.x0; x < b.x1; ++x) {
      double t = 1.0;
      double c = 0.0;
      std::uint32_t end = 0;
      std::size_t count = 0;
      for (std::uint32_t k = 0; k < list.size(); ++k) {
        const Splat& s = aux.splats[list[k]];
        double dx, dy;
        const double alpha = std::min(kAlphaMax, s.opacity * falloff(s, x, y, dx, dy));
        if (alpha < kAlphaMin) {
          if (skipped) ++*skipped;
          continue;
        }
        const double next_t = t * (1.0 - alpha);
        if (next_t < kTransmittanceStop) break;
        c += s.radiance * alpha * t;
        t = next_t;
        end = k + 1;
        ++count;
      }
      const std::size_t pix = static_cast<std::size_t>(y) * image.width + x;
      image.data[pix] = c + t * aux.settings.background;
      if (final_t) (*final_t)[pix] = t;
      if (contrib_end) (*contrib_end)[pix] = end;
      if (max_contrib) *max_contrib = std::max(*max_contrib, count);
    }
  }
}

}  // namespace

TileLists tile_bin(std::span<const Splat> splats, int width, int height, int tile_size, int* tiles_x_out,
                   int* tiles_y_out) {
  const int tiles_x = (width + tile_size - 1) / tile_size;
  const int tiles_y = (height + tile_size - 1) / tile_size;
  if (tiles_x_out) *tiles_x_out = tiles_x;
  if (tiles_y_out) *tiles_y_out = tiles_y;

  std::vector<std::uint32_t> order;
  order.reserve(splats.size());
  for (std::uint32_t i = 0; i < splats.size(); ++i)
    if (splats[i].visible) order.push_back(i);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::uint32_t a, std::uint32_t b) { return splats[a].proj.depth < splats[b].proj.depth; });

  TileLists tiles(static_cast<std::size_t>(tiles_x) * tiles_y);
  for (std::uint32_t idx : order) {
    const PixelRange r = splat_extent(splats[idx], width, height);
    if (r.empty()) continue;
    for (int ty = r.y0 / tile_size; ty <= r.y1 / tile_size; ++ty)
      for (int tx = r.x0 / tile_size; tx <= r.x1 / tile_size; ++tx)
        tiles[static_cast<std::size_t>(ty) * tiles_x + tx].push_back(idx);
  }
  return tiles;
}

RenderResult render_forward(const GaussianCloud& cloud, const Camera& camera, std::span<const double> radiance,
                            const RenderSettings& settings) {
  if (radiance.size() != cloud.size()) throw std::invalid_argument("radiance length does not match cloud size");

  RenderResult out;
  RenderAux& aux = out.aux;
  aux.camera = camera;
  aux.settings = settings;
  aux.cloud = cloud;
  aux.splats.resize(cloud.size());

  for (std::size_t i = 0; i < cloud.size(); ++i) {
    Splat& s = aux.splats[i];
    const auto proj = project_gaussian(cloud.gaussian(i), camera);
    if (!proj) {
      ++aux.stats.culled_near;
      continue;
    }
    const double det = proj->cov2d.det();
    if (!(det > 0.0)) {
      ++aux.stats.culled_degenerate;
      continue;
    }
    s.visible = true;
    s.proj = *proj;
    s.conic = {proj->cov2d.c / det, -proj->cov2d.b / det, proj->cov2d.a / det};
    s.opacity = sigmoid(cloud.opacity_raw[i]);
    s.radiance = radiance[i];
  }

  aux.tiles = tile_bin(aux.splats, camera.width, camera.height, settings.tile_size, &aux.tiles_x, &aux.tiles_y);

  const std::size_t npix = static_cast<std::size_t>(camera.width) * camera.height;
  out.image = RadianceImage(camera.width, camera.height);
  aux.final_transmittance.assign(npix, 1.0);
  aux.contributor_end.assign(npix, 0);

  const std::size_t ntiles = aux.tiles.size();
  std::vector<std::size_t> skipped(ntiles, 0), max_contrib(ntiles, 0);
  parallel_for(0, ntiles, [&](std::size_t t) {
    composite_tile(aux, t, out.image, &aux.final_transmittance, &aux.contributor_end, &skipped[t], &max_contrib[t]);
  });
  for (std::size_t t = 0; t < ntiles; ++t) {
    aux.stats.skipped_low_alpha += skipped[t];
    aux.stats.max_contributors = std::max(aux.stats.max_contributors, max_contrib[t]);
  }
  return out;
}

RadianceImage replay_forward(const RenderAux& aux) {
  RadianceImage image(aux.camera.width, aux.camera.height);
  parallel_for(0, aux.tiles.size(),
               [&](std::size_t t) { composite_tile(aux, t, image, nullptr, nullptr, nullptr, nullptr); });
  return image;
}

void GaussianGradients::resize(std::size_t n) {
  d_position.resize(n);
  d_log_scale.resize(n);
  d_rotation.resize(n);
  d_opacity_raw.resize(n);
  d_sh.resize(n);
  d_radiance.resize(n);
  d_mean2d_x.resize(n);
  d_mean2d_y.resize(n);
  set_zero();
}

void GaussianGradients::set_zero() {
  std::fill(d_position.begin(), d_position.end(), Vec3{});
  std::fill(d_log_scale.begin(), d_log_scale.end(), Vec3{});
  std::fill(d_rotation.begin(), d_rotation.end(), Quat{0, 0, 0, 0});
  std::fill(d_opacity_raw.begin(), d_opacity_raw.end(), 0.0);
  std::fill(d_sh.begin(), d_sh.end(), ShCoeffs{});
  std::fill(d_radiance.begin(), d_radiance.end(), 0.0);
  std::fill(d_mean2d_x.begin(), d_mean2d_x.end(), 0.0);
  std::fill(d_mean2d_y.begin(), d_mean2d_y.end(), 0.0);
}

namespace {

// Per-splat screen-space gradient accumulators.
struct SplatGrad {
  double u = 0, v = 0;
  double conic00 = 0, conic01 = 0, conic11 = 0;  // per-entry partials of the full conic matrix
  double opacity = 0;                            // w.r.t. activated opacity
  double radiance = 0;

  void add(const SplatGrad& o) {
    u += o.u;
    v += o.v;
    conic00 += o.conic00;
    conic01 += o.conic01;
    conic11 += o.conic11;
    opacity += o.opacity;
    radiance += o.radiance;
  }
};

struct Contribution {
  std::uint32_t slot;
  double alpha;
  double t_before;
  double g;  // falloff
  double dx, dy;
  bool clamped;
};

void backward_tile(const RenderAux& aux, std::size_t tile, const RadianceImage& d_image,
                   std::vector<SplatGrad>& local) {
  const TileBounds b = tile_bounds(aux, tile);
  const auto& list = aux.tiles[tile];
  local.assign(list.size(), SplatGrad{});
  std::vector<Contribution> contribs;
  for (int y = b.y0; y < b.y1; ++y) {
    for (int x = b.x0; x < b.x1; ++x) {
      const std::size_t pix = static_cast<std::size_t>(y) * aux.camera.width + x;
      const double grad = d_image.data[pix];
      if (grad == 0.0) continue;

      contribs.clear();
      double t = 1.0;
      const std::uint32_t end = aux.contributor_end[pix];
      for (std::uint32_t k = 0; k < end; ++k) {
        const Splat& s = aux.splats[list[k]];
        double dx, dy;
        const double g = falloff(s, x, y, dx, dy);
        const double raw = s.opacity * g;
        const double alpha = std::min(kAlphaMax, raw);
        if (alpha < kAlphaMin) continue;
        contribs.push_back({k, alpha, t, g, dx, dy, raw > kAlphaMax});
        t *= 1.0 - alpha;
      }

      double after = aux.final_transmittance[pix] * aux.settings.background;
      for (auto it = contribs.rbegin(); it != contribs.rend(); ++it) {
        const Splat& s = aux.splats[list[it->slot]];
        SplatGrad& acc = local[it->slot];
        const double weight = it->alpha * it->t_before;
        acc.radiance += grad * weight;
        const double d_alpha = grad * (s.radiance * it->t_before - after / (1.0 - it->alpha));
        after += s.radiance * weight;
        if (it->clamped) continue;
        acc.opacity += it->g * d_alpha;
        const double d_power = s.opacity * it->g * d_alpha;
        const double dx = it->dx, dy = it->dy;
        acc.u += d_power * (s.conic.a * dx + s.conic.b * dy);
        acc.v += d_power * (s.conic.b * dx + s.conic.c * dy);
        acc.conic00 += -0.5 * d_power * dx * dx;
        acc.conic01 += -0.5 * d_power * dx * dy;
        acc.conic11 += -0.5 * d_power * dy * dy;
      }
    }
  }
}

}  // namespace

GaussianGradients render_backward(const RenderAux& aux, const RadianceImage& d_image) {
  if (d_image.width != aux.camera.width || d_image.height != aux.camera.height ||
      d_image.data.size() != aux.final_transmittance.size())
    throw std::invalid_argument("gradient image does not match render size");

  const std::size_t n = aux.cloud.size();
  GaussianGradients out;
  out.resize(n);

  const std::size_t ntiles = aux.tiles.size();
  std::vector<std::vector<SplatGrad>> per_tile(ntiles);
  parallel_for(0, ntiles, [&](std::size_t t) { backward_tile(aux, t, d_image, per_tile[t]); });

  // Fixed-order reduction keeps the result independent of thread count.
  std::vector<SplatGrad> totals(n);
  for (std::size_t t = 0; t < ntiles; ++t)
    for (std::size_t k = 0; k < aux.tiles[t].size(); ++k) totals[aux.tiles[t][k]].add(per_tile[t][k]);

  for (std::size_t i = 0; i < n; ++i) {
    const Splat& s = aux.splats[i];
    if (!s.visible) continue;
    const SplatGrad& g = totals[i];
    out.d_radiance[i] = g.radiance;
    out.d_opacity_raw[i] = g.opacity * s.opacity * (1.0 - s.opacity);
    out.d_mean2d_x[i] = g.u;
    out.d_mean2d_y[i] = g.v;

    // d cov = -K dK K for K = cov^-1 (all matrices symmetric).
    const double k00 = s.conic.a, k01 = s.conic.b, k11 = s.conic.c;
    const double kb[2][2] = {{g.conic00, g.conic01}, {g.conic01, g.conic11}};
    const double k[2][2] = {{k00, k01}, {k01, k11}};
    double tmp[2][2]{}, dc[2][2]{};
    for (int a = 0; a < 2; ++a)
      for (int c = 0; c < 2; ++c)
        for (int m = 0; m < 2; ++m) tmp[a][c] += k[a][m] * kb[m][c];
    for (int a = 0; a < 2; ++a)
      for (int c = 0; c < 2; ++c)
        for (int m = 0; m < 2; ++m) dc[a][c] -= tmp[a][m] * k[m][c];

    const ProjectionGrad pg =
        project_gaussian_backward(aux.cloud.gaussian(i), aux.camera, s.proj, g.u, g.v, {dc[0][0], dc[0][1], dc[1][1]});
    out.d_position[i] = pg.d_position;
    out.d_log_scale[i] = pg.d_log_scale;
    out.d_rotation[i] = pg.d_rotation;
  }
  return out;
}

}  // namespace thermalsplat
