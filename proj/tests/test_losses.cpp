#include <doctest.h>

#include <cmath>
#include <limits>

#include "support.hpp"
#include "thermalsplat/losses.hpp"
#include "thermalsplat/verify/oracles.hpp"

using namespace thermalsplat;
using verify::random_image;

TEST_CASE("L1 and PSNR") {
  RadianceImage a(4, 2, 0.5), b(4, 2, 0.25);
  CHECK(l1_loss(a, b) == 0.25);
  CHECK(psnr(a, a) == std::numeric_limits<double>::infinity());
  CHECK(psnr(a, b) == doctest::Approx(10 * std::log10(16.0)));
  CHECK_THROWS_AS(l1_loss(a, RadianceImage(2, 4)), std::invalid_argument);
}

TEST_CASE("SSIM basics") {
  Rng rng(1);
  const RadianceImage a = random_image(rng, 30, 20);
  CHECK(ssim(a, a) == doctest::Approx(1.0).epsilon(1e-12));
  RadianceImage inv = a;
  for (double& v : inv.data) v = 1.0 - v;
  CHECK(ssim(a, inv) < 0.0);
  CHECK(d_ssim_loss(1.0) == 0.0);
}

TEST_CASE("SSIM matches the full-window reference") {
  Rng rng(2);
  for (int k = 0; k < 4; ++k) {
    const RadianceImage a = random_image(rng, 12 + 5 * k, 14);
    const RadianceImage b = random_image(rng, 12 + 5 * k, 14);
    CHECK(ssim(a, b) == doctest::Approx(verify::reference_ssim(a, b)).epsilon(1e-12));
  }
}

TEST_CASE("SSIM gradient matches finite differences") {
  Rng rng(3);
  RadianceImage p = random_image(rng, 14, 11, 0.1, 0.9);
  const RadianceImage g = random_image(rng, 14, 11, 0.1, 0.9);
  const SsimGrad sg = ssim_with_grad(p, g);
  CHECK(sg.value == ssim(p, g));
  for (std::size_t i = 0; i < p.data.size(); i += 5)
    CHECK(test::rel_err(sg.d_pred.data[i], test::central_diff(p.data[i], [&] { return ssim(p, g); }, 1e-5)) < 1e-7);
}

TEST_CASE("Harris response sign: positive at corners, negative on edges") {
  RadianceImage img(21, 21, 0.0);
  for (int y = 10; y < 21; ++y)
    for (int x = 10; x < 21; ++x) img.at(x, y) = 1.0;  // quadrant: corner at (10, 10)
  const RadianceImage r = harris_response(img, 0.04);
  CHECK(r.at(10, 10) > 0.0);
  CHECK(r.at(10, 17) < 0.0);  // vertical edge, away from the corner
  CHECK(r.at(3, 3) == 0.0);   // flat
  const RadianceImage w = corner_weights(img);
  double mx = 0.0;
  for (double v : w.data) {
    CHECK(v >= 0.0);
    CHECK(v <= 1.0);
    mx = std::max(mx, v);
  }
  CHECK(mx == 1.0);
  for (double v : corner_weights(RadianceImage(5, 5, 0.3)).data) CHECK(v == 0.0);
}

TEST_CASE("Harris matches the eigenvalue form of the structure tensor") {
  Rng rng(4);
  const RadianceImage img = random_image(rng, 17, 13);
  const RadianceImage a = harris_response(img, 0.04), b = verify::naive_harris(img, 0.04);
  for (std::size_t i = 0; i < a.data.size(); ++i) CHECK(std::abs(a.data[i] - b.data[i]) < 1e-12);
}

TEST_CASE("discontinuity decay") {
  CHECK(discontinuity_decay(0, 5000) == 1.0);
  CHECK(discontinuity_decay(2500, 5000) == 0.5);
  CHECK(discontinuity_decay(5000, 5000) == 0.0);
  CHECK(discontinuity_decay(9000, 5000) == 0.0);
}

TEST_CASE("loss weights are validated") {
  CHECK_NOTHROW(LossWeights{}.validate());
  CHECK_THROWS_AS((LossWeights{0.6, 0.5, 5000, 0.04}.validate()), std::invalid_argument);
  CHECK_THROWS_AS((LossWeights{0.2, 0.2, 0, 0.04}.validate()), std::invalid_argument);
}

TEST_CASE("total loss gradient matches finite differences") {
  Rng rng(5);
  RadianceImage p = random_image(rng, 13, 12, 0.05, 0.95);
  const RadianceImage g = random_image(rng, 13, 12);
  for (bool use_dis : {true, false}) {
    const TotalLoss l = total_loss(p, g, 1200, {}, use_dis);
    if (!use_dis) {
      CHECK(l.terms.dis == 0.0);
      CHECK(l.terms.total == doctest::Approx(0.2 * l.terms.dssim + 0.8 * l.terms.l1).epsilon(1e-15));
    }
    for (std::size_t i = 0; i < p.data.size(); i += 4) {
      const double num = test::central_diff(p.data[i], [&] { return total_loss(p, g, 1200, {}, use_dis).terms.total; }, 1e-6);
      CHECK(test::rel_err(l.d_pred.data[i], num) < 1e-6);
    }
  }
}

TEST_CASE("precomputed corner map gives the same loss") {
  Rng rng(6);
  const RadianceImage p = random_image(rng, 16, 16), g = random_image(rng, 16, 16);
  const RadianceImage w = corner_weights(g);
  const TotalLoss a = total_loss(p, g, 10), b = total_loss(p, g, 10, {}, true, &w);
  CHECK(a.terms.total == b.terms.total);
  CHECK(a.d_pred == b.d_pred);
}

TEST_CASE("clamp01") {
  RadianceImage a(3, 1);
  a.data = {-0.5, 0.5, 1.5};
  CHECK(clamp01(a).data == std::vector<double>{0.0, 0.5, 1.0});
}
