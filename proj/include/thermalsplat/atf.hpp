#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "thermalsplat/math.hpp"
#include "thermalsplat/rng.hpp"
#include "thermalsplat/scene.hpp"

// Atmospheric transmission field: an MLP over encoded (position, time) that
// predicts per-Gaussian attenuation parameters (mu_abs, mu_sca, d). The SH
// coefficients of each Gaussian are rescaled by exp((mu_abs + mu_sca) * d).
// The exponent sign is positive; a learned negative mu attenuates.

namespace thermalsplat {

/// Per-component (sin(2^k pi p), cos(2^k pi p)) for k = 0..L-1, component-major.
std::vector<double> positional_encoding(std::span<const double> p, int frequencies = 10);
std::vector<double> positional_encoding(double p, int frequencies = 10);

struct DenseLayer {
  int in = 0;
  int out = 0;
  std::vector<double> weight;  // out x in, row-major
  std::vector<double> bias;    // out

  bool operator==(const DenseLayer&) const = default;
};

struct AtfNetwork {
  int frequencies = 10;
  /// `depth` ReLU hidden layers followed by a linear 3-output head.
  std::vector<DenseLayer> layers;
  /// Bumped on every parameter update; caches remember the value they saw.
  std::uint64_t version = 0;

  static constexpr int kDefaultDepth = 8;
  static constexpr int kDefaultWidth = 256;

  /// Hidden layers drawn U(-1/sqrt(in), 1/sqrt(in)); head weights zero and
  /// head bias (0, 0, 1), so every input maps to mu_abs = mu_sca = 0, d = 1.
  static AtfNetwork create(Rng& rng, int depth = kDefaultDepth, int width = kDefaultWidth, int frequencies = 10);

  /// Same shapes, all zeros (used for gradients and optimizer moments).
  AtfNetwork zeros_like() const;

  int input_dim() const { return 2 * frequencies * 3 + 2 * frequencies; }
  std::size_t parameter_count() const;

  /// Flat views over all weights and biases in layer order.
  std::vector<std::span<double>> parameter_blocks();
  std::vector<std::span<const double>> parameter_blocks() const;

  bool operator==(const AtfNetwork& o) const { return frequencies == o.frequencies && layers == o.layers; }
};

struct AttenuationParams {
  double mu_abs = 0.0;
  double mu_sca = 0.0;
  double d = 1.0;

  double factor() const { return std::exp((mu_abs + mu_sca) * d); }
};

/// Encoded network input for a box-normalized position and normalized time.
std::vector<double> atf_input(const Vec3& normalized_position, double time_norm, int frequencies);

/// Evaluates the network at one box-normalized position. Throws
/// std::invalid_argument if the network input width does not match.
AttenuationParams atf_forward(const Vec3& normalized_position, double time_norm, const AtfNetwork& net);

/// SH scaled uniformly by params.factor(). Throws NumericalError when the
/// factor is not finite.
ShCoeffs attenuate_sh(const ShCoeffs& sh0, const AttenuationParams& params);

/// Batched forward over all Gaussians, retaining activations for backward.
struct AtfCache {
  std::uint64_t net_version = 0;
  std::size_t batch = 0;
  std::vector<std::vector<double>> activations;  // [0] = encoded input, [l + 1] = output of layer l
  std::vector<AttenuationParams> params;
  std::vector<double> factors;
  std::vector<ShCoeffs> sh0;
  std::vector<ShCoeffs> sh;  // attenuated
};

AtfCache atf_apply(const AtfNetwork& net, std::span<const Vec3> normalized_positions, double time_norm,
                   std::span<const ShCoeffs> sh0);

struct AtfBackward {
  AtfNetwork d_net;
  std::vector<ShCoeffs> d_sh0;
};

/// Gradients of the loss w.r.t. all network parameters and the original SH,
/// given d loss / d attenuated SH. Positions are treated as constants.
/// Throws std::logic_error when the cache predates the network's last update.
AtfBackward atf_backward(const AtfNetwork& net, const AtfCache& cache, std::span<const ShCoeffs> d_sh);

}  // namespace thermalsplat
