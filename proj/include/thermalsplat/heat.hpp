#pragma once

#include <vector>

#include "thermalsplat/stencil.hpp"

// Explicit FTCS solver for du/dt = alpha * Laplacian(u) on a uniform 2D grid.

namespace thermalsplat {

struct TemperatureField {
  int width = 0;
  int height = 0;
  std::vector<double> data;  // row-major
  double dx = 1.0;
  Boundary boundary = Boundary::replicate;  // replicate == insulated (zero flux)

  TemperatureField() = default;
  TemperatureField(int w, int h, double cell, Boundary b, double fill = 0.0)
      : width(w), height(h), data(static_cast<std::size_t>(w) * h, fill), dx(cell), boundary(b) {}

  double& at(int x, int y) { return data[static_cast<std::size_t>(y) * width + x]; }
  double at(int x, int y) const { return data[static_cast<std::size_t>(y) * width + x]; }
  double total() const;
};

/// Diffusivity, step and step count for one grid spacing. Construction
/// rejects alpha * dt / dx^2 > 0.25 (2D FTCS stability limit).
class ConductionSpec {
 public:
  ConductionSpec(double alpha, double dt, int steps, double dx);

  /// Largest stable step count splitting `duration` at the given grid spacing.
  static ConductionSpec for_duration(double alpha, double duration, double dx, double max_ratio = 0.25);

  double alpha() const { return alpha_; }
  double dt() const { return dt_; }
  int steps() const { return steps_; }
  double dx() const { return dx_; }
  double ratio() const { return alpha_ * dt_ / (dx_ * dx_); }

 private:
  double alpha_, dt_;
  int steps_;
  double dx_;
};

/// u' = u + (alpha dt / dx^2) * Laplacian(u). Throws std::invalid_argument
/// when field.dx differs from the spec's grid spacing.
TemperatureField heat_step(const TemperatureField& field, const ConductionSpec& spec);

/// spec.steps() applications of heat_step.
TemperatureField heat_simulate(const TemperatureField& field, const ConductionSpec& spec);

}  // namespace thermalsplat
