#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "thermalsplat/heat.hpp"
#include "thermalsplat/scene.hpp"

// Synthetic thermal scenes: a planar temperature field (z = 0) holding hot
// and cold emitters, blurred by heat conduction, seen from an orbit of
// cameras whose radiance is scaled per view by exp(a * theta + b * t).
// Each image can additionally conduct on the sensor plane (fixed in pixels,
// so it is not the projection of any single blur on the plane).
//
// Spec files are INI-like: "[section]" headers and "key = value" lines,
// '#' comments. Sections: [scene], [emitter] (repeatable, at least one),
// [orbit] (required), [attenuation], [diffusion].

namespace thermalsplat {

struct EmitterSpec {
  enum class Shape { disk, square };
  Shape shape = Shape::disk;
  double x = 0.0, y = 0.0;  // plane coordinates
  double radius = 0.2;      // disk radius or square half-side
  double temperature = 1.0;
};

struct SynthSpec {
  // [scene]
  int width = 64, height = 64;
  double plane_size = 2.0;  // square side, centered at the origin
  int grid = 128;           // temperature cells per side
  double ambient = 0.2;
  double noise = 0.0;       // uniform per-cell texture amplitude
  int points = 1500;        // seed points
  int supersample = 2;      // per axis, per pixel

  std::vector<EmitterSpec> emitters;

  // [orbit]
  int views = 24;
  double orbit_radius = 3.0;
  double orbit_height = 2.5;
  double height_amplitude = 0.0;  // height varies by amplitude * sin(2 pi i / views)
  double arc_degrees = 360.0;
  double fov_degrees = 50.0;

  // [attenuation]
  double atten_a = 0.0;  // per radian of view zenith angle
  double atten_b = 0.0;  // per unit normalized time

  // [diffusion]
  double alpha = 1.0;
  double diffusion_time = 0.0;  // on the plane, in plane units
  double image_time = 0.0;      // on each image, in pixel units
};

/// Parses a spec file. Throws UsageError naming the file and line for bad
/// syntax, unknown keys or values, and "missing section [orbit]" (or
/// [emitter]) when a required section is absent.
SynthSpec parse_synth_spec(const std::string& text, const std::string& source = "spec");
SynthSpec load_synth_spec(const std::filesystem::path& path);

/// Emitters painted on the grid, before conduction.
TemperatureField emitter_field(const SynthSpec& spec, std::uint64_t seed);
/// emitter_field after heat_simulate for spec.diffusion_time (insulated edges).
TemperatureField conducted_field(const SynthSpec& spec, std::uint64_t seed);

struct SynthView {
  Camera camera;
  double time_norm = 0.0;
  double theta = 0.0;   // angle between the optical axis and the plane normal
  double factor = 1.0;  // exp(a * theta + b * t)
  RadianceImage image;
};

/// Camera orbit. Throws DataError when every camera lies in the scene plane.
std::vector<SynthView> synth_cameras(const SynthSpec& spec);

/// Ray-casts the field through the camera (pixel (i, j) samples image-plane
/// point (i + 0.5, j + 0.5), box-filtered over supersample^2 sub-pixels) and applies the
/// view factor; rays missing the plane see 0.
RadianceImage render_plane(const TemperatureField& field, const SynthSpec& spec, const Camera& camera, double factor);

/// Insulated-edge conduction of a rendered image for spec.image_time, pixel
/// spacing 1.
RadianceImage conduct_image(const RadianceImage& image, const SynthSpec& spec);

/// Writes <out>/images/frame_XXXX.png, <out>/sparse/0 (COLMAP text and
/// binary), <out>/field.png (16-bit conducted field) and <out>/manifest.txt.
/// Deterministic for a fixed (spec, seed).
void synth_scene_generate(const SynthSpec& spec, std::uint64_t seed, const std::filesystem::path& out_dir);

}  // namespace thermalsplat
