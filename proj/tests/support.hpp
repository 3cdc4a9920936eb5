#pragma once

#include <cmath>
#include <filesystem>
#include <functional>
#include <string>

#include "thermalsplat/rng.hpp"
#include "thermalsplat/scene.hpp"

namespace test {

// 5-point central difference of f at x (x is restored afterwards).
inline double central_diff(double& x, const std::function<double()>& f, double h = 1e-5) {
  const double x0 = x;
  x = x0 + 2 * h;
  const double f2 = f();
  x = x0 + h;
  const double f1 = f();
  x = x0 - h;
  const double m1 = f();
  x = x0 - 2 * h;
  const double m2 = f();
  x = x0;
  return (-f2 + 8 * f1 - 8 * m1 + m2) / (12 * h);
}

inline double rel_err(double a, double b, double floor = 1e-8) {
  return std::abs(a - b) / std::max(floor, std::abs(a) + std::abs(b));
}

inline thermalsplat::Camera camera(int w, int h, double f) {
  thermalsplat::Camera c;
  c.fx = c.fy = f;
  c.cx = 0.5 * w;
  c.cy = 0.5 * h;
  c.width = w;
  c.height = h;
  return c;
}

// Fresh scratch directory under the build tree.
inline std::filesystem::path scratch(const std::string& name) {
  const auto p = std::filesystem::current_path() / "scratch" / name;
  std::filesystem::remove_all(p);
  std::filesystem::create_directories(p);
  return p;
}

}  // namespace test
