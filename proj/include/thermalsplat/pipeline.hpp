#pragma once

#include <optional>
#include <span>
#include <vector>

#include "thermalsplat/atf.hpp"
#include "thermalsplat/render.hpp"
#include "thermalsplat/scene.hpp"
#include "thermalsplat/tcm.hpp"

// Image formation for one view:
//   SH0 --ATF(x, t)--> SH --eval(view dir), clamp >= 0--> radiance
//       --rasterize--> image --TCM--> output

namespace thermalsplat {

/// Everything optimized during training. The networks are absent when the
/// corresponding module is disabled.
struct Model {
  GaussianCloud cloud;
  SceneBox box;
  std::optional<AtfNetwork> atf;
  std::optional<TcmNetwork> tcm;

  bool operator==(const Model&) const = default;
};

struct PipelineOptions {
  bool use_atf = true;
  bool use_tcm = true;
  RenderSettings render;
};

struct PipelineForward {
  std::optional<AtfCache> atf;
  std::vector<ShCoeffs> sh;        // after attenuation (aliases the cloud SH without ATF)
  std::vector<Vec3> view_dirs;     // unit, camera center -> Gaussian
  std::vector<double> view_dist;   // distance camera center -> Gaussian
  std::vector<double> raw_radiance;  // before clamping
  std::vector<double> radiance;
  RenderResult render;
  std::optional<TcmResult> tcm;
  RadianceImage output;
};

/// Renders one view. The ATF sees positions as constants; `atf_positions`
/// overrides the world positions fed to it (defaults to the cloud's own),
/// which lets finite-difference checks hold the ATF input fixed.
PipelineForward pipeline_forward(const Model& model, const Camera& camera, double time_norm,
                                 const PipelineOptions& options = {},
                                 std::span<const Vec3> atf_positions = {});

struct ModelGradients {
  GaussianGradients gaussians;
  std::optional<AtfNetwork> atf;
  std::optional<TcmNetwork> tcm;
};

/// Reverse pass of pipeline_forward given d loss / d output.
ModelGradients pipeline_backward(const Model& model, const PipelineForward& fwd, const RadianceImage& d_output);

/// Output image only.
RadianceImage render_view(const Model& model, const Camera& camera, double time_norm,
                          const PipelineOptions& options = {});

}  // namespace thermalsplat
