#include "thermalsplat/tcm.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "thermalsplat/parallel.hpp"
#include "thermalsplat/stencil.hpp"

namespace thermalsplat {
namespace {

inline int clamp_index(int i, int n) { return std::clamp(i, 0, n - 1); }

// Adjoint of conv3x3 w.r.t. input and weights, given d_out.
void conv3x3_backward(const ConvLayer& layer, const FeatureMap& input, const FeatureMap& d_out, ConvLayer& d_layer,
                      FeatureMap* d_input) {
  const int w = input.width, h = input.height;
  for (int o = 0; o < layer.out; ++o) {
    const auto g = d_out.plane(o);
    double db = 0.0;
    for (double v : g) db += v;
    d_layer.bias[o] += db;
    for (int c = 0; c < layer.in; ++c) {
      const auto in = input.plane(c);
      for (int ky = 0; ky < 3; ++ky)
        for (int kx = 0; kx < 3; ++kx) {
          double dw = 0.0;
          for (int y = 0; y < h; ++y) {
            const int sy = clamp_index(y + ky - 1, h);
            for (int x = 0; x < w; ++x) dw += g[y * w + x] * in[sy * w + clamp_index(x + kx - 1, w)];
          }
          d_layer.weight[((o * layer.in + c) * 3 + ky) * 3 + kx] += dw;
        }
      if (!d_input) continue;
      auto din = d_input->plane(c);
      for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
          const double gv = g[y * w + x];
          if (gv == 0.0) continue;
          for (int ky = 0; ky < 3; ++ky) {
            const int sy = clamp_index(y + ky - 1, h);
            for (int kx = 0; kx < 3; ++kx) din[sy * w + clamp_index(x + kx - 1, w)] += layer.w(o, c, ky, kx) * gv;
          }
        }
    }
  }
}

void relu_mask(const FeatureMap& pre, FeatureMap& grad) {
  for (std::size_t i = 0; i < grad.data.size(); ++i)
    if (!(pre.data[i] > 0.0)) grad.data[i] = 0.0;
}

}  // namespace

RadianceImage laplacian_features(const RadianceImage& image) {
  RadianceImage out(image.width, image.height);
  stencil5(image.data, image.width, image.height, Boundary::replicate, 0.0, 1.0, out.data);
  return out;
}

TcmNetwork TcmNetwork::create(Rng& rng, int channels) {
  TcmNetwork net;
  net.channels = channels;
  const int ins[3] = {2 * channels, channels, channels};
  for (int l = 0; l < 3; ++l) {
    ConvLayer layer{ins[l], channels, std::vector<double>(static_cast<std::size_t>(channels) * ins[l] * 9, 0.0),
                    std::vector<double>(channels, 0.0)};
    if (l < 2) {
      const double bound = 1.0 / std::sqrt(9.0 * ins[l]);
      for (double& v : layer.weight) v = rng.uniform(-bound, bound);
      // With one channel per layer a ReLU that starts negative everywhere
      // never recovers; a unit bias keeps both hidden maps active at init.
      std::fill(layer.bias.begin(), layer.bias.end(), 1.0);
    }
    net.layers.push_back(std::move(layer));
  }
  return net;
}

TcmNetwork TcmNetwork::zeros_like() const {
  TcmNetwork z = *this;
  z.version = 0;
  for (auto& layer : z.layers) {
    std::fill(layer.weight.begin(), layer.weight.end(), 0.0);
    std::fill(layer.bias.begin(), layer.bias.end(), 0.0);
  }
  return z;
}

std::size_t TcmNetwork::parameter_count() const {
  std::size_t n = 0;
  for (const auto& layer : layers) n += layer.weight.size() + layer.bias.size();
  return n;
}

std::vector<std::span<double>> TcmNetwork::parameter_blocks() {
  std::vector<std::span<double>> out;
  for (auto& layer : layers) {
    out.emplace_back(layer.weight);
    out.emplace_back(layer.bias);
  }
  return out;
}

std::vector<std::span<const double>> TcmNetwork::parameter_blocks() const {
  std::vector<std::span<const double>> out;
  for (const auto& layer : layers) {
    out.emplace_back(layer.weight);
    out.emplace_back(layer.bias);
  }
  return out;
}

FeatureMap conv3x3(const ConvLayer& layer, const FeatureMap& input) {
  if (input.channels != layer.in) throw std::invalid_argument("conv input channel mismatch");
  const int w = input.width, h = input.height;
  FeatureMap out(layer.out, w, h);
  parallel_for(0, static_cast<std::size_t>(h), [&](std::size_t yy) {
    const int y = static_cast<int>(yy);
    for (int o = 0; o < layer.out; ++o) {
      double* dst = out.plane(o).data() + y * w;
      for (int x = 0; x < w; ++x) {
        double s = layer.bias[o];
        for (int c = 0; c < layer.in; ++c) {
          const auto in = input.plane(c);
          for (int ky = 0; ky < 3; ++ky) {
            const double* row = in.data() + clamp_index(y + ky - 1, h) * w;
            for (int kx = 0; kx < 3; ++kx) s += layer.w(o, c, ky, kx) * row[clamp_index(x + kx - 1, w)];
          }
        }
        dst[x] = s;
      }
    }
  });
  return out;
}

TcmResult tcm_forward(const RadianceImage& image, const TcmNetwork& net) {
  if (net.channels != 1) throw std::invalid_argument("single-channel TCM expected for radiance images");
  TcmResult r;
  TcmCache& c = r.cache;
  c.net_version = net.version;
  c.input = FeatureMap(2, image.width, image.height);
  std::copy(image.data.begin(), image.data.end(), c.input.plane(0).begin());
  const RadianceImage lap = laplacian_features(image);
  std::copy(lap.data.begin(), lap.data.end(), c.input.plane(1).begin());

  c.pre1 = conv3x3(net.layers[0], c.input);
  c.act1 = c.pre1;
  for (double& v : c.act1.data) v = std::max(v, 0.0);
  c.pre2 = conv3x3(net.layers[1], c.act1);
  c.act2 = c.pre2;
  for (double& v : c.act2.data) v = std::max(v, 0.0);
  const FeatureMap residual = conv3x3(net.layers[2], c.act2);

  r.refined = image;
  for (std::size_t i = 0; i < r.refined.data.size(); ++i) r.refined.data[i] += residual.data[i];
  return r;
}

TcmBackward tcm_backward(const TcmNetwork& net, const TcmCache& cache, const RadianceImage& d_refined) {
  if (cache.net_version != net.version) throw std::logic_error("stale TCM cache: network changed since forward");
  if (d_refined.width != cache.input.width || d_refined.height != cache.input.height)
    throw std::invalid_argument("TCM gradient size mismatch");

  TcmBackward out;
  out.d_net = net.zeros_like();
  out.d_image = d_refined;  // residual path
  const int w = d_refined.width, h = d_refined.height;

  FeatureMap g3(1, w, h);
  std::copy(d_refined.data.begin(), d_refined.data.end(), g3.data.begin());

  FeatureMap g2(1, w, h);
  conv3x3_backward(net.layers[2], cache.act2, g3, out.d_net.layers[2], &g2);
  relu_mask(cache.pre2, g2);

  FeatureMap g1(1, w, h);
  conv3x3_backward(net.layers[1], cache.act1, g2, out.d_net.layers[1], &g1);
  relu_mask(cache.pre1, g1);

  FeatureMap g0(2, w, h);
  conv3x3_backward(net.layers[0], cache.input, g1, out.d_net.layers[0], &g0);

  const auto direct = g0.plane(0);
  for (std::size_t i = 0; i < out.d_image.data.size(); ++i) out.d_image.data[i] += direct[i];
  laplacian_adjoint_add(g0.plane(1), w, h, Boundary::replicate, out.d_image.data);
  return out;
}

}  // namespace thermalsplat
