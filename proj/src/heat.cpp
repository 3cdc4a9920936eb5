#include "thermalsplat/heat.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace thermalsplat {

double TemperatureField::total() const {
  double s = 0.0;
  for (double v : data) s += v;
  return s;
}

ConductionSpec::ConductionSpec(double alpha, double dt, int steps, double dx)
    : alpha_(alpha), dt_(dt), steps_(steps), dx_(dx) {
  if (!(alpha >= 0.0) || !(dt >= 0.0) || steps < 0 || !(dx > 0.0))
    throw std::invalid_argument("conduction spec requires alpha >= 0, dt >= 0, steps >= 0, dx > 0");
  const double r = ratio();
  if (r > 0.25 * (1.0 + 1e-12))
    throw std::invalid_argument("FTCS unstable: alpha*dt/dx^2 = " + std::to_string(r) + " exceeds 0.25");
}

ConductionSpec ConductionSpec::for_duration(double alpha, double duration, double dx, double max_ratio) {
  if (duration <= 0.0 || alpha <= 0.0) return ConductionSpec(alpha, 0.0, 0, dx);
  const double dt_max = max_ratio * dx * dx / alpha;
  const int steps = static_cast<int>(std::ceil(duration / dt_max - 1e-12));
  return ConductionSpec(alpha, duration / steps, steps, dx);
}

TemperatureField heat_step(const TemperatureField& field, const ConductionSpec& spec) {
  if (field.dx != spec.dx()) throw std::invalid_argument("field grid spacing does not match conduction spec");
  TemperatureField out = field;
  stencil5(field.data, field.width, field.height, field.boundary, 1.0, spec.ratio(), out.data);
  return out;
}

TemperatureField heat_simulate(const TemperatureField& field, const ConductionSpec& spec) {
  if (field.dx != spec.dx()) throw std::invalid_argument("field grid spacing does not match conduction spec");
  TemperatureField a = field;
  TemperatureField b = field;
  const double r = spec.ratio();
  for (int s = 0; s < spec.steps(); ++s) {
    stencil5(a.data, a.width, a.height, a.boundary, 1.0, r, b.data);
    std::swap(a.data, b.data);
  }
  return a;
}

}  // namespace thermalsplat
