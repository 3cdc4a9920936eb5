#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "thermalsplat/heat.hpp"
#include "thermalsplat/rng.hpp"
#include "thermalsplat/verify/oracles.hpp"

using namespace thermalsplat;

TEST_CASE("stability limit is enforced at construction") {
  CHECK_NOTHROW(ConductionSpec(1.0, 0.25, 10, 1.0));
  CHECK_THROWS_AS(ConductionSpec(1.0, 0.2501, 10, 1.0), std::invalid_argument);
  CHECK_THROWS_AS(ConductionSpec(1.0, 0.01, 10, 0.0), std::invalid_argument);
  CHECK_THROWS_AS(ConductionSpec(1.0, 0.01, -1, 1.0), std::invalid_argument);
  const ConductionSpec s = ConductionSpec::for_duration(2.0, 1.0, 0.5);
  CHECK(s.ratio() <= 0.25);
  CHECK(s.dt() * s.steps() == doctest::Approx(1.0));
}

TEST_CASE("uniform field is unchanged") {
  for (Boundary b : {Boundary::periodic, Boundary::replicate}) {
    TemperatureField f(7, 5, 1.0, b, 3.5);
    const TemperatureField out = heat_simulate(f, ConductionSpec(1.0, 0.25, 20, 1.0));
    for (double v : out.data) CHECK(v == 3.5);
  }
}

TEST_CASE("single hot cell spreads a quarter to each neighbour at r = 0.25") {
  TemperatureField f(5, 5, 1.0, Boundary::periodic);
  f.at(2, 2) = 1.0;
  const TemperatureField out = heat_step(f, ConductionSpec(1.0, 0.25, 1, 1.0));
  CHECK(out.at(2, 2) == 0.0);
  CHECK(out.at(1, 2) == 0.25);
  CHECK(out.at(3, 2) == 0.25);
  CHECK(out.at(2, 1) == 0.25);
  CHECK(out.at(2, 3) == 0.25);
  CHECK(out.at(1, 1) == 0.0);
}

TEST_CASE("zero steps returns the input and dx mismatch throws") {
  Rng rng(1);
  TemperatureField f(6, 4, 0.5, Boundary::replicate);
  for (double& v : f.data) v = rng.uniform();
  CHECK(heat_simulate(f, ConductionSpec(1.0, 0.01, 0, 0.5)).data == f.data);
  CHECK_THROWS_AS(heat_step(f, ConductionSpec(1.0, 0.01, 1, 0.25)), std::invalid_argument);
}

TEST_CASE("conservation on periodic and insulated grids") {
  Rng rng(2);
  for (Boundary b : {Boundary::periodic, Boundary::replicate}) {
    TemperatureField f(31, 17, 0.2, b);
    for (double& v : f.data) v = rng.uniform(-1.0, 4.0);
    const double before = f.total();
    const TemperatureField out = heat_simulate(f, ConductionSpec(0.5, 0.015, 1000, 0.2));
    CHECK(std::abs(out.total() - before) / std::abs(before) < 1e-12);
  }
}

TEST_CASE("maximum principle holds every step") {
  Rng rng(3);
  TemperatureField f(20, 20, 1.0, Boundary::replicate);
  for (double& v : f.data) v = rng.uniform();
  const ConductionSpec one(1.0, 0.25, 1, 1.0);
  for (int s = 0; s < 50; ++s) {
    const TemperatureField next = heat_step(f, one);
    CHECK(*std::max_element(next.data.begin(), next.data.end()) <= *std::max_element(f.data.begin(), f.data.end()));
    CHECK(*std::min_element(next.data.begin(), next.data.end()) >= *std::min_element(f.data.begin(), f.data.end()));
    f = next;
  }
}

TEST_CASE("flux between neighbours is antisymmetric") {
  // Two-cell exchange on an insulated strip: what one cell gains the other loses.
  TemperatureField f(2, 1, 1.0, Boundary::replicate);
  f.at(0, 0) = 1.0;
  const TemperatureField out = heat_step(f, ConductionSpec(1.0, 0.2, 1, 1.0));
  CHECK(out.at(0, 0) - 1.0 == doctest::Approx(-(out.at(1, 0) - 0.0)));
  CHECK(out.at(1, 0) == doctest::Approx(0.2));
}

TEST_CASE("two half-grids relax to the mean") {
  TemperatureField f(16, 16, 1.0, Boundary::replicate);
  for (int y = 0; y < 16; ++y)
    for (int x = 8; x < 16; ++x) f.at(x, y) = 1.0;
  const TemperatureField out = heat_simulate(f, ConductionSpec(1.0, 0.25, 3000, 1.0));
  for (double v : out.data) CHECK(std::abs(v - 0.5) < 1e-3);
}

TEST_CASE("diffused delta matches the analytic heat kernel") {
  const double dx = 0.05, alpha = 1.0, time = 0.5;
  const int n = 201;
  TemperatureField f(n, n, dx, Boundary::periodic);
  f.at(n / 2, n / 2) = 1.0 / (dx * dx);
  const int steps = 1600;
  const TemperatureField out = heat_simulate(f, ConductionSpec(alpha, time / steps, steps, dx));
  double err = 0.0;
  for (int y = 0; y < n; ++y)
    for (int x = 0; x < n; ++x) {
      const double px = (x - n / 2) * dx, py = (y - n / 2) * dx;
      err = std::max(err, std::abs(out.at(x, y) - verify::heat_kernel(alpha, time, px * px + py * py)));
    }
  CHECK(err < 1e-3);
}
