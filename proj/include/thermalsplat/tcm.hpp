#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "thermalsplat/rng.hpp"
#include "thermalsplat/scene.hpp"

// Thermal conduction module: a residual block that fuses the rendered image
// with its Laplacian through three 3x3 convolutions,
//   refined = image + C3(relu(C2(relu(C1([image, lap(image)]))))).

namespace thermalsplat {

/// 5-point Laplacian with clamp-to-edge boundary.
RadianceImage laplacian_features(const RadianceImage& image);

struct ConvLayer {
  int in = 0;
  int out = 0;
  std::vector<double> weight;  // [out][in][3][3]
  std::vector<double> bias;    // [out]

  double w(int o, int c, int ky, int kx) const { return weight[((o * in + c) * 3 + ky) * 3 + kx]; }
  bool operator==(const ConvLayer&) const = default;
};

struct TcmNetwork {
  int channels = 1;
  std::vector<ConvLayer> layers;  // in: [2n, n, n], out: [n, n, n]
  std::uint64_t version = 0;

  /// First two layers: weights U(-1/sqrt(fan_in), 1/sqrt(fan_in)), biases 1.
/// Last layer zero.
  static TcmNetwork create(Rng& rng, int channels = 1);
  TcmNetwork zeros_like() const;
  std::size_t parameter_count() const;
  std::vector<std::span<double>> parameter_blocks();
  std::vector<std::span<const double>> parameter_blocks() const;

  bool operator==(const TcmNetwork& o) const { return channels == o.channels && layers == o.layers; }
};

/// Multi-channel planar feature map.
struct FeatureMap {
  int channels = 0, width = 0, height = 0;
  std::vector<double> data;  // [channel][y][x]

  FeatureMap() = default;
  FeatureMap(int c, int w, int h) : channels(c), width(w), height(h), data(static_cast<std::size_t>(c) * w * h) {}
  std::span<double> plane(int c) { return {data.data() + static_cast<std::size_t>(c) * width * height,
                                           static_cast<std::size_t>(width) * height}; }
  std::span<const double> plane(int c) const {
    return {data.data() + static_cast<std::size_t>(c) * width * height, static_cast<std::size_t>(width) * height};
  }
};

/// 3x3 convolution (cross-correlation), stride 1, clamp-to-edge padding.
FeatureMap conv3x3(const ConvLayer& layer, const FeatureMap& input);

struct TcmCache {
  std::uint64_t net_version = 0;
  FeatureMap input;                    // [image, lap(image)]
  FeatureMap pre1, act1, pre2, act2;   // pre-/post-ReLU of layers 1 and 2
};

struct TcmResult {
  RadianceImage refined;
  TcmCache cache;
};

TcmResult tcm_forward(const RadianceImage& image, const TcmNetwork& net);

struct TcmBackward {
  TcmNetwork d_net;
  RadianceImage d_image;
};

/// Throws std::logic_error on a stale cache and std::invalid_argument on a
/// gradient of the wrong size.
TcmBackward tcm_backward(const TcmNetwork& net, const TcmCache& cache, const RadianceImage& d_refined);

}  // namespace thermalsplat
