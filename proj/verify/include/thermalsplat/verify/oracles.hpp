#pragma once

// Reference implementations written independently of the library kernels:
// direct nested loops, no separable filters, no shared helpers.

#include "thermalsplat/rng.hpp"
#include "thermalsplat/scene.hpp"
#include "thermalsplat/tcm.hpp"

namespace thermalsplat::verify {

RadianceImage random_image(Rng& rng, int width, int height, double lo = 0.0, double hi = 1.0);

double naive_l1(const RadianceImage& a, const RadianceImage& b);
double naive_psnr(const RadianceImage& a, const RadianceImage& b);

/// SSIM with the full 11x11 2D window evaluated per pixel.
double reference_ssim(const RadianceImage& pred, const RadianceImage& gt);

/// Harris response from the eigenvalues of the per-pixel structure tensor:
/// l1 * l2 - k (l1 + l2)^2.
RadianceImage naive_harris(const RadianceImage& image, double k);

/// 5-point Laplacian, clamp-to-edge, written out per pixel.
RadianceImage naive_laplacian(const RadianceImage& image);

/// Direct 3x3 convolution with clamp-to-edge padding.
FeatureMap naive_conv3x3(const ConvLayer& layer, const FeatureMap& input);

/// Full TCM forward from naive_conv3x3 and naive_laplacian.
RadianceImage naive_tcm(const RadianceImage& image, const TcmNetwork& net);

/// Fundamental solution of u_t = alpha * Laplacian(u) in 2D for a unit mass.
double heat_kernel(double alpha, double time, double r2);

}  // namespace thermalsplat::verify
