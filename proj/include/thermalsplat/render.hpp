#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "thermalsplat/projection.hpp"
#include "thermalsplat/scene.hpp"

namespace thermalsplat {

inline constexpr double kAlphaMax = 0.99;
inline constexpr double kAlphaMin = 1.0 / 255.0;
inline constexpr double kTransmittanceStop = 1e-4;
inline constexpr int kTileSize = 16;

struct RenderSettings {
  double background = 0.0;
  int tile_size = kTileSize;
};

/// Screen-space state of one Gaussian for one view.
struct Splat {
  bool visible = false;
  Projection proj;
  Sym2 conic;  // inverse of proj.cov2d
  double opacity = 0.0;
  double radiance = 0.0;
};

struct RenderStats {
  std::size_t culled_near = 0;
  std::size_t culled_degenerate = 0;
  std::size_t skipped_low_alpha = 0;
  std::size_t max_contributors = 0;
};

using TileLists = std::vector<std::vector<std::uint32_t>>;

/// Everything render_backward needs to replay compositing in reverse.
struct RenderAux {
  Camera camera;
  RenderSettings settings;
  GaussianCloud cloud;
  std::vector<Splat> splats;
  TileLists tiles;
  int tiles_x = 0, tiles_y = 0;
  std::vector<double> final_transmittance;    // per pixel
  std::vector<std::uint32_t> contributor_end;  // per pixel: tile-list position one past the last contributor
  RenderStats stats;
};

/// Per-tile lists of visible splat indices. A splat appears in every tile
/// touched by the bounding box of its 3-sigma ellipse, clipped to the image;
/// each list is sorted by ascending depth, ties by ascending index.
TileLists tile_bin(std::span<const Splat> splats, int width, int height, int tile_size, int* tiles_x = nullptr,
                   int* tiles_y = nullptr);

struct RenderResult {
  RadianceImage image;
  RenderAux aux;
};

/// Front-to-back alpha compositing of the cloud, one radiance value per
/// Gaussian. Throws std::invalid_argument on a radiance length mismatch.
RenderResult render_forward(const GaussianCloud& cloud, const Camera& camera, std::span<const double> radiance,
                            const RenderSettings& settings = {});

/// Recomputes the forward image from the auxiliary state alone.
RadianceImage replay_forward(const RenderAux& aux);

struct GaussianGradients {
  std::vector<Vec3> d_position;
  std::vector<Vec3> d_log_scale;
  std::vector<Quat> d_rotation;
  std::vector<double> d_opacity_raw;
  std::vector<ShCoeffs> d_sh;
  std::vector<double> d_radiance;
  /// Pixel-space gradient of the projected mean (densification statistic).
  std::vector<double> d_mean2d_x, d_mean2d_y;

  void resize(std::size_t n);
  void set_zero();
  std::size_t size() const { return d_position.size(); }
};

/// Reverse-mode pass through compositing and projection. d_sh is left zero;
/// radiance is an input here, so the SH chain belongs to the caller.
/// Throws std::invalid_argument when d_image does not match the aux image size.
GaussianGradients render_backward(const RenderAux& aux, const RadianceImage& d_image);

}  // namespace thermalsplat
