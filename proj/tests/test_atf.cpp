#include <doctest.h>

#include <cmath>
#include <numbers>
#include <vector>

#include "support.hpp"
#include "thermalsplat/atf.hpp"
#include "thermalsplat/error.hpp"

using namespace thermalsplat;

namespace {

AtfNetwork random_net(Rng& rng, int depth = 3, int width = 12, int freq = 3) {
  AtfNetwork net = AtfNetwork::create(rng, depth, width, freq);
  for (double& w : net.layers.back().weight) w = rng.uniform(-0.3, 0.3);
  net.layers.back().bias = {rng.uniform(-0.3, 0.3), rng.uniform(-0.3, 0.3), rng.uniform(0.5, 1.5)};
  return net;
}

}  // namespace

TEST_CASE("positional encoding") {
  const auto e = positional_encoding(0.25, 3);
  REQUIRE(e.size() == 6);
  CHECK(e[0] == doctest::Approx(std::sin(std::numbers::pi / 4)));
  CHECK(e[1] == doctest::Approx(std::cos(std::numbers::pi / 4)));
  CHECK(e[2] == doctest::Approx(1.0));
  CHECK(std::abs(e[4]) < 1e-15);
  CHECK(e[5] == doctest::Approx(-1.0));
  const std::vector<double> p{0.1, -0.7, 0.3};
  CHECK(positional_encoding(p, 10).size() == 60);
  CHECK(atf_input({0.1, -0.7, 0.3}, 0.5, 10).size() == 80);
}

TEST_CASE("fresh network is the identity on SH") {
  Rng rng(1);
  const AtfNetwork net = AtfNetwork::create(rng);
  CHECK(net.layers.size() == 9);
  CHECK(net.input_dim() == 80);
  for (int i = 0; i < 20; ++i) {
    const Vec3 p{rng.uniform(-1, 1), rng.uniform(-1, 1), rng.uniform(-1, 1)};
    const AttenuationParams a = atf_forward(p, rng.uniform(), net);
    CHECK(a.mu_abs == 0.0);
    CHECK(a.mu_sca == 0.0);
    CHECK(a.d == 1.0);
    CHECK(a.factor() == 1.0);
  }
}

TEST_CASE("attenuation scales every SH coefficient by exp((mu_a + mu_s) d)") {
  ShCoeffs sh{};
  for (int k = 0; k < 16; ++k) sh[k] = 0.1 * (k + 1);
  const AttenuationParams p{-0.3, 0.1, 2.0};
  const ShCoeffs out = attenuate_sh(sh, p);
  for (int k = 0; k < 16; ++k) CHECK(out[k] == doctest::Approx(sh[k] * std::exp(-0.4)));
  CHECK_THROWS_AS(attenuate_sh(sh, {1000.0, 0.0, 1.0}), NumericalError);
}

TEST_CASE("batched apply equals per-point evaluation") {
  Rng rng(2);
  const AtfNetwork net = random_net(rng);
  std::vector<Vec3> pos(7);
  std::vector<ShCoeffs> sh(7);
  for (auto& p : pos) p = {rng.uniform(-1, 1), rng.uniform(-1, 1), rng.uniform(-1, 1)};
  for (auto& s : sh)
    for (double& v : s) v = rng.normal();
  const AtfCache c = atf_apply(net, pos, 0.3, sh);
  for (std::size_t i = 0; i < pos.size(); ++i) {
    const AttenuationParams a = atf_forward(pos[i], 0.3, net);
    CHECK(c.params[i].mu_abs == a.mu_abs);
    CHECK(c.params[i].mu_sca == a.mu_sca);
    CHECK(c.params[i].d == a.d);
    CHECK(c.sh[i] == attenuate_sh(sh[i], a));
  }
}

TEST_CASE("input width mismatch throws") {
  Rng rng(3);
  AtfNetwork net = random_net(rng);
  net.frequencies = 4;
  CHECK_THROWS_AS(atf_forward({0, 0, 0}, 0.0, net), std::invalid_argument);
}

TEST_CASE("ATF backward matches finite differences") {
  Rng rng(4);
  AtfNetwork net = random_net(rng);
  std::vector<Vec3> pos(5);
  std::vector<ShCoeffs> sh(5), w(5);
  for (auto& p : pos) p = {rng.uniform(-1, 1), rng.uniform(-1, 1), rng.uniform(-1, 1)};
  for (auto& s : sh)
    for (double& v : s) v = rng.normal();
  for (auto& s : w)
    for (double& v : s) v = rng.normal();
  const double t = 0.6;
  auto loss = [&] {
    const AtfCache c = atf_apply(net, pos, t, sh);
    double s = 0.0;
    for (std::size_t i = 0; i < pos.size(); ++i)
      for (int k = 0; k < 16; ++k) s += w[i][k] * c.sh[i][k];
    return s;
  };
  const AtfCache c = atf_apply(net, pos, t, sh);
  const AtfBackward b = atf_backward(net, c, w);
  auto blocks = net.parameter_blocks();
  const auto gblocks = b.d_net.parameter_blocks();
  for (std::size_t blk = 0; blk < blocks.size(); ++blk)
    for (std::size_t k = 0; k < blocks[blk].size(); k += 7)
      {
        // Dead ReLU units give an exact zero; the difference quotient then
        // carries only rounding noise of order eps * |loss| / h.
        const double nd = test::central_diff(blocks[blk][k], loss, 1e-6);
        INFO("block ", blk, " entry ", k);
        CHECK(std::abs(gblocks[blk][k] - nd) <= 1e-6 * (std::abs(gblocks[blk][k]) + std::abs(nd)) + 1e-8);
      }
  for (std::size_t i = 0; i < pos.size(); ++i)
    for (int k = 0; k < 16; k += 5) {
      // Linear in sh, so only rounding noise remains in the quotient.
      const double nd = test::central_diff(sh[i][k], loss);
      CHECK(std::abs(b.d_sh0[i][k] - nd) <= 1e-8 * (std::abs(b.d_sh0[i][k]) + std::abs(nd)) + 1e-9);
    }
}

TEST_CASE("stale cache is rejected") {
  Rng rng(5);
  AtfNetwork net = random_net(rng);
  std::vector<Vec3> pos{{0, 0, 0}};
  std::vector<ShCoeffs> sh(1);
  const AtfCache c = atf_apply(net, pos, 0.0, sh);
  ++net.version;
  CHECK_THROWS_AS(atf_backward(net, c, sh), std::logic_error);
}
