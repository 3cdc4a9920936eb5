#include <doctest.h>

#include <cmath>

#include "support.hpp"
#include "thermalsplat/tcm.hpp"
#include "thermalsplat/verify/oracles.hpp"

using namespace thermalsplat;

namespace {

TcmNetwork random_tcm(Rng& rng, int channels = 1) {
  TcmNetwork net = TcmNetwork::create(rng, channels);
  for (auto& l : net.layers) {
    for (double& w : l.weight) w = rng.uniform(-0.5, 0.5);
    for (double& b : l.bias) b = rng.uniform(0.05, 0.3);  // keep most ReLUs active
  }
  return net;
}

}  // namespace

TEST_CASE("Laplacian features match the naive stencil") {
  Rng rng(1);
  const RadianceImage img = verify::random_image(rng, 13, 9);
  const RadianceImage a = laplacian_features(img);
  const RadianceImage b = verify::naive_laplacian(img);
  for (std::size_t i = 0; i < a.data.size(); ++i) CHECK(a.data[i] == doctest::Approx(b.data[i]).epsilon(1e-14));
  RadianceImage flat(6, 5, 0.3);
  for (double v : laplacian_features(flat).data) CHECK(v == 0.0);
}

TEST_CASE("conv3x3 matches direct convolution") {
  Rng rng(2);
  ConvLayer layer{3, 2, std::vector<double>(2 * 3 * 9), std::vector<double>(2)};
  for (double& w : layer.weight) w = rng.normal();
  for (double& b : layer.bias) b = rng.normal();
  FeatureMap in(3, 11, 7);
  for (double& v : in.data) v = rng.normal();
  const FeatureMap a = conv3x3(layer, in);
  const FeatureMap b = verify::naive_conv3x3(layer, in);
  REQUIRE(a.data.size() == b.data.size());
  for (std::size_t i = 0; i < a.data.size(); ++i) CHECK(a.data[i] == doctest::Approx(b.data[i]).epsilon(1e-13));
}

TEST_CASE("fresh TCM is the identity") {
  Rng rng(3);
  const TcmNetwork net = TcmNetwork::create(rng);
  const RadianceImage img = verify::random_image(rng, 17, 12);
  CHECK(tcm_forward(img, net).refined == img);
}

TEST_CASE("TCM forward matches the naive composition") {
  Rng rng(4);
  const TcmNetwork net = random_tcm(rng);
  const RadianceImage img = verify::random_image(rng, 15, 10);
  const RadianceImage a = tcm_forward(img, net).refined;
  const RadianceImage b = verify::naive_tcm(img, net);
  for (std::size_t i = 0; i < a.data.size(); ++i) CHECK(a.data[i] == doctest::Approx(b.data[i]).epsilon(1e-13));
}

TEST_CASE("TCM backward matches finite differences") {
  Rng rng(5);
  TcmNetwork net = random_tcm(rng);
  RadianceImage img = verify::random_image(rng, 9, 8);
  RadianceImage w = verify::random_image(rng, 9, 8, -1.0, 1.0);
  auto loss = [&] {
    const RadianceImage r = tcm_forward(img, net).refined;
    double s = 0.0;
    for (std::size_t i = 0; i < r.data.size(); ++i) s += w.data[i] * r.data[i];
    return s;
  };
  const TcmResult fwd = tcm_forward(img, net);
  const TcmBackward b = tcm_backward(net, fwd.cache, w);
  auto blocks = net.parameter_blocks();
  const auto g = b.d_net.parameter_blocks();
  for (std::size_t blk = 0; blk < blocks.size(); ++blk)
    for (std::size_t k = 0; k < blocks[blk].size(); ++k)
      CHECK(test::rel_err(g[blk][k], test::central_diff(blocks[blk][k], loss, 1e-6)) < 1e-6);
  for (std::size_t i = 0; i < img.data.size(); i += 3)
    CHECK(test::rel_err(b.d_image.data[i], test::central_diff(img.data[i], loss, 1e-6)) < 1e-6);
}

TEST_CASE("stale TCM cache is rejected") {
  Rng rng(6);
  TcmNetwork net = random_tcm(rng);
  const RadianceImage img(4, 4, 0.5);
  const TcmResult r = tcm_forward(img, net);
  ++net.version;
  CHECK_THROWS_AS(tcm_backward(net, r.cache, img), std::logic_error);
}
