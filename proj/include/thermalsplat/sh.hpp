#pragma once

#include <array>
#include <span>

#include "thermalsplat/math.hpp"

namespace thermalsplat {

/// Y00 = 1 / (2 sqrt(pi)).
inline constexpr double kShC0 = 0.28209479177387814;
/// Constant added to the SH sum so all-zero coefficients give mid-grey.
inline constexpr double kShDcOffset = 0.5;

inline constexpr int sh_coeff_count(int degree) { return (degree + 1) * (degree + 1); }

/// Real SH basis values up to `degree` for a unit direction. When `gradient`
/// is non-null it receives dY_k/d(direction) for each basis function.
void sh_basis(const Vec3& dir, int degree, std::span<double> basis, std::span<Vec3> gradient = {});

/// sum_k coeffs[k] * Y_k(dir) + 0.5. No clamping.
/// Throws std::invalid_argument for degree outside [0, 3], too few
/// coefficients, or |dir| differing from 1 by more than 1e-6.
double eval_sh(std::span<const double> coeffs, const Vec3& view_dir, int degree);

}  // namespace thermalsplat
