#pragma once

#include <cstdint>
#include <span>
#include <vector>

namespace thermalsplat {

inline constexpr double kAdamBeta1 = 0.9;
inline constexpr double kAdamBeta2 = 0.999;
inline constexpr double kAdamEpsGaussian = 1e-15;
inline constexpr double kAdamEpsNetwork = 1e-8;

/// Moments and step counter for one parameter group.
struct AdamGroup {
  double beta1 = kAdamBeta1;
  double beta2 = kAdamBeta2;
  double eps = kAdamEpsGaussian;
  std::uint64_t step = 0;
  std::uint64_t skipped = 0;  // steps dropped for non-finite gradients
  std::vector<double> m, v;

  AdamGroup() = default;
  explicit AdamGroup(double epsilon) : eps(epsilon) {}
  bool operator==(const AdamGroup&) const = default;
};

/// One bias-corrected Adam update. Moments are sized on first use. When any
/// gradient is non-finite the group is left untouched, `skipped` is
/// incremented and false is returned. Throws std::invalid_argument on a
/// size mismatch or lr <= 0.
bool adam_step(std::span<double> params, std::span<const double> grads, AdamGroup& group, double lr);

/// Same, for a parameter group split over several blocks (network layers).
/// Moments are laid out block after block.
bool adam_step(const std::vector<std::span<double>>& params, const std::vector<std::span<const double>>& grads,
               AdamGroup& group, double lr);

}  // namespace thermalsplat
