#pragma once

#include "thermalsplat/scene.hpp"

namespace thermalsplat {

struct LossWeights {
  double lambda_dis = 0.2;
  double lambda_dssim = 0.2;
  int iter_t = 5000;
  double k_harris = 0.04;

  /// Throws std::invalid_argument unless lambda_dis + lambda_dssim < 1 and iter_t > 0.
  void validate() const;
};

/// Mean absolute error. Throws std::invalid_argument on a shape mismatch
/// (as do all binary image functions here).
double l1_loss(const RadianceImage& pred, const RadianceImage& gt);

// SSIM: 11x11 Gaussian window (sigma 1.5, separable, clamp-to-edge padding),
// C1 = 0.01^2, C2 = 0.03^2, inputs clamped to [0, 1].
double ssim(const RadianceImage& pred, const RadianceImage& gt);

struct SsimGrad {
  double value = 0.0;
  RadianceImage d_pred;  // d ssim / d pred
};
SsimGrad ssim_with_grad(const RadianceImage& pred, const RadianceImage& gt);

inline double d_ssim_loss(double ssim_value) { return (1.0 - ssim_value) / 2.0; }

/// Harris response det(M) - k trace(M)^2 of the Sobel structure tensor,
/// smoothed by a normalized 3x3 Gaussian (sigma 1), clamp-to-edge padding.
RadianceImage harris_response(const RadianceImage& image, double k = 0.04);

/// max(R, 0) / max(R) over the ground truth; all zeros when max(R) <= 0.
RadianceImage corner_weights(const RadianceImage& gt, double k = 0.04);

/// max(1 - iteration / iter_t, 0).
double discontinuity_decay(int iteration, int iter_t);

/// decay * mean(w * |pred - gt|) with w = corner_weights(gt).
double discontinuous_loss(const RadianceImage& pred, const RadianceImage& gt, int iteration,
                          const LossWeights& weights = {});

struct LossTerms {
  double dis = 0.0;
  double dssim = 0.0;
  double l1 = 0.0;
  double total = 0.0;
};

/// lambda_dis * dis + lambda_dssim * dssim + (1 - lambda_dis - lambda_dssim) * l1.
double combine_losses(double dis, double dssim, double l1, const LossWeights& weights = {});

struct TotalLoss {
  LossTerms terms;
  RadianceImage d_pred;
};

/// Full training loss and its gradient w.r.t. pred. With use_dis false the
/// corner term is dropped and L1 takes weight 1 - lambda_dssim. `weights_map`
/// may carry precomputed corner_weights(gt) to skip recomputation.
TotalLoss total_loss(const RadianceImage& pred, const RadianceImage& gt, int iteration, const LossWeights& weights = {},
                     bool use_dis = true, const RadianceImage* weights_map = nullptr);

/// 10 log10(1 / MSE); +infinity when MSE = 0.
double psnr(const RadianceImage& pred, const RadianceImage& gt);

/// Copy clamped to [0, 1].
RadianceImage clamp01(const RadianceImage& image);

}  // namespace thermalsplat
