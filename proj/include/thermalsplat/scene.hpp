#pragma once

#include <array>
#include <cstddef>
#include <filesystem>
#include <vector>

#include "thermalsplat/math.hpp"

namespace thermalsplat {

inline constexpr int kMaxShDegree = 3;
inline constexpr int kMaxShCoeffs = 16;
using ShCoeffs = std::array<double, kMaxShCoeffs>;

/// Dense single-channel image, row-major.
struct RadianceImage {
  int width = 0;
  int height = 0;
  std::vector<double> data;

  RadianceImage() = default;
  RadianceImage(int w, int h, double fill = 0.0)
      : width(w), height(h), data(static_cast<std::size_t>(w) * static_cast<std::size_t>(h), fill) {}

  std::size_t size() const { return data.size(); }
  double& at(int x, int y) { return data[static_cast<std::size_t>(y) * width + x]; }
  double at(int x, int y) const { return data[static_cast<std::size_t>(y) * width + x]; }
  bool same_shape(const RadianceImage& o) const { return width == o.width && height == o.height; }
  bool operator==(const RadianceImage&) const = default;
};

/// Pinhole camera, COLMAP convention: x right, y down, looking along +z.
/// Pixel (i, j) samples image-plane coordinate (i, j).
struct Camera {
  double fx = 1.0, fy = 1.0;
  double cx = 0.5, cy = 0.5;
  int width = 1, height = 1;
  Mat3 rotation = Mat3::identity();  // world -> camera
  Vec3 translation;                  // world -> camera

  Vec3 to_camera(const Vec3& world) const { return rotation * world + translation; }
  Vec3 center() const { return -(rotation.transposed() * translation); }

  /// Throws DataError when intrinsics or the rotation are invalid.
  void validate() const;
  bool operator==(const Camera&) const = default;
};

/// One Gaussian, storage form: log scales and pre-activation opacity.
struct Gaussian {
  Vec3 position;
  Vec3 log_scale;
  Quat rotation;
  double opacity_raw = 0.0;
  ShCoeffs sh{};

  Vec3 scale() const { return {std::exp(log_scale.x), std::exp(log_scale.y), std::exp(log_scale.z)}; }
  double opacity() const { return sigmoid(opacity_raw); }
};

/// Structure-of-arrays scene.
struct GaussianCloud {
  std::vector<Vec3> positions;
  std::vector<Vec3> log_scales;
  std::vector<Quat> rotations;
  std::vector<double> opacity_raw;
  std::vector<ShCoeffs> sh;
  int sh_degree_active = 0;

  std::size_t size() const { return positions.size(); }
  bool empty() const { return positions.empty(); }
  void push_back(const Gaussian& g);
  Gaussian gaussian(std::size_t i) const;
  void set(std::size_t i, const Gaussian& g);

  /// Keeps only entries with keep[i] true, preserving order.
  void compact(const std::vector<bool>& keep);

  /// Throws DataError on length mismatch or non-finite values.
  void validate() const;
  bool operator==(const GaussianCloud&) const = default;
};

/// Axis-aligned box used to map world positions into [-1, 1]^3.
struct SceneBox {
  Vec3 lo{-1, -1, -1};
  Vec3 hi{1, 1, 1};

  Vec3 normalize(const Vec3& p) const;
  static SceneBox around(const std::vector<Vec3>& points);
  bool operator==(const SceneBox&) const = default;
};

struct ThermalView {
  Camera camera;
  double time_norm = 0.0;
  RadianceImage image;
  int frame_index = 0;
};

/// Binary little-endian PLY. Per-vertex property order: x y z, scale_0..2
/// (log), rot_0..3 (w x y z), opacity (pre-activation), f_dc_0, f_rest_0..14.
void write_ply(const GaussianCloud& cloud, const std::filesystem::path& path);

}  // namespace thermalsplat
