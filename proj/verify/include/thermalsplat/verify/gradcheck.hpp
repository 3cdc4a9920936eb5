#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "thermalsplat/losses.hpp"
#include "thermalsplat/pipeline.hpp"
#include "thermalsplat/rng.hpp"

// Finite-difference checks of the full image-formation chain
// (ATF -> SH -> rasterizer -> TCM -> total loss).

namespace thermalsplat::verify {

/// A small scene in which every Gaussian covers the whole image with alpha
/// well above the skip threshold, so the loss is smooth in every parameter
/// away from ReLU, clamp and absolute-value kinks.
struct FdScene {
  Model model;
  Camera camera;
  double time_norm = 0.5;
  RadianceImage gt;
  int iteration = 1000;
  LossWeights weights;
  bool use_dis = true;
  PipelineOptions options;
  std::vector<Vec3> atf_anchor;  // ATF inputs are held here (detached)
};

struct FdSceneOptions {
  int gaussians = 20;
  int size = 32;
  bool atf = true;
  bool tcm = true;
  int sh_degree = 3;
  int atf_depth = 3;
  int atf_width = 16;
  int atf_frequencies = 4;
};

FdScene make_fd_scene(Rng& rng, const FdSceneOptions& options = {});

/// Loss at the scene's current parameters.
double fd_loss(const FdScene& scene);

struct ProbeResult {
  std::string parameter;
  double analytic = 0.0;
  double numeric = 0.0;
  double rel_error = 0.0;
};

struct GradCheckReport {
  std::vector<ProbeResult> probes;
  int redrawn = 0;  // probes whose stencil crossed a kink
  double max_rel_error = 0.0;
  std::string worst;
};

/// |a - b| / max(1e-8, |a| + |b|).
double relative_error(double a, double b);

/// Compares analytic gradients with the 5-point central difference
/// (-f(x+2h) + 8 f(x+h) - 8 f(x-h) + f(x-2h)) / 12h at `probes` randomly
/// chosen parameters, cycling over parameter groups. A probe is redrawn when
/// any evaluation in its stencil changes the pattern of active ReLUs, SH
/// clamps, compositing contributors, SSIM clamps or L1 signs.
GradCheckReport check_gradients(FdScene& scene, int probes, Rng& rng, double h = 3e-3);

}  // namespace thermalsplat::verify
