#include "thermalsplat/atf.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

#include "thermalsplat/error.hpp"
#include "thermalsplat/parallel.hpp"
#include "thermalsplat/simd.hpp"

namespace thermalsplat {
namespace {

constexpr std::size_t kRowBlock = 32;

// Runs fn(lo, hi) over row blocks of [0, rows). Row results of the kernels
// used here do not depend on how rows are grouped.
template <typename Fn>
void for_row_blocks(std::size_t rows, Fn fn) {
  const std::size_t blocks = (rows + kRowBlock - 1) / kRowBlock;
  parallel_for(0, blocks, [&](std::size_t b) { fn(b * kRowBlock, std::min(rows, (b + 1) * kRowBlock)); });
}

void dense_forward(const DenseLayer& layer, const std::vector<double>& x, std::size_t batch, bool relu,
                   std::vector<double>& y) {
  const auto& k = simd::kernels();
  const std::size_t in = layer.in, out = layer.out;
  y.assign(batch * out, 0.0);
  // W^T once per layer, then row-wise rank updates.
  std::vector<double> wt(in * out);
  for (std::size_t j = 0; j < out; ++j)
    for (std::size_t p = 0; p < in; ++p) wt[p * out + j] = layer.weight[j * in + p];
  for_row_blocks(batch, [&](std::size_t lo, std::size_t hi) {
    k.gemm_nn(hi - lo, out, in, x.data() + lo * in, in, wt.data(), out, y.data() + lo * out, out);
    for (std::size_t r = lo; r < hi; ++r) {
      double* row = y.data() + r * out;
      for (std::size_t j = 0; j < out; ++j) {
        const double z = row[j] + layer.bias[j];
        row[j] = relu ? std::max(z, 0.0) : z;
      }
    }
  });
}

}  // namespace

std::vector<double> positional_encoding(std::span<const double> p, int frequencies) {
  std::vector<double> out;
  out.reserve(2 * frequencies * p.size());
  for (double v : p) {
    double scale = std::numbers::pi;
    for (int k = 0; k < frequencies; ++k) {
      out.push_back(std::sin(scale * v));
      out.push_back(std::cos(scale * v));
      scale *= 2.0;
    }
  }
  return out;
}

std::vector<double> positional_encoding(double p, int frequencies) {
  return positional_encoding(std::span<const double>(&p, 1), frequencies);
}

AtfNetwork AtfNetwork::create(Rng& rng, int depth, int width, int frequencies) {
  AtfNetwork net;
  net.frequencies = frequencies;
  int in = net.input_dim();
  for (int l = 0; l < depth; ++l) {
    DenseLayer layer{in, width, std::vector<double>(static_cast<std::size_t>(width) * in),
                     std::vector<double>(width)};
    const double bound = 1.0 / std::sqrt(static_cast<double>(in));
    for (double& w : layer.weight) w = rng.uniform(-bound, bound);
    for (double& b : layer.bias) b = rng.uniform(-bound, bound);
    net.layers.push_back(std::move(layer));
    in = width;
  }
  net.layers.push_back({in, 3, std::vector<double>(static_cast<std::size_t>(3) * in, 0.0), {0.0, 0.0, 1.0}});
  return net;
}

AtfNetwork AtfNetwork::zeros_like() const {
  AtfNetwork z = *this;
  z.version = 0;
  for (auto& layer : z.layers) {
    std::fill(layer.weight.begin(), layer.weight.end(), 0.0);
    std::fill(layer.bias.begin(), layer.bias.end(), 0.0);
  }
  return z;
}

std::size_t AtfNetwork::parameter_count() const {
  std::size_t n = 0;
  for (const auto& layer : layers) n += layer.weight.size() + layer.bias.size();
  return n;
}

std::vector<std::span<double>> AtfNetwork::parameter_blocks() {
  std::vector<std::span<double>> out;
  for (auto& layer : layers) {
    out.emplace_back(layer.weight);
    out.emplace_back(layer.bias);
  }
  return out;
}

std::vector<std::span<const double>> AtfNetwork::parameter_blocks() const {
  std::vector<std::span<const double>> out;
  for (const auto& layer : layers) {
    out.emplace_back(layer.weight);
    out.emplace_back(layer.bias);
  }
  return out;
}

std::vector<double> atf_input(const Vec3& normalized_position, double time_norm, int frequencies) {
  const double xyz[3] = {normalized_position.x, normalized_position.y, normalized_position.z};
  std::vector<double> in = positional_encoding(xyz, frequencies);
  const std::vector<double> t = positional_encoding(time_norm, frequencies);
  in.insert(in.end(), t.begin(), t.end());
  return in;
}

AttenuationParams atf_forward(const Vec3& normalized_position, double time_norm, const AtfNetwork& net) {
  const ShCoeffs none{};
  const AtfCache cache = atf_apply(net, std::span(&normalized_position, 1), time_norm, std::span(&none, 1));
  return cache.params.front();
}

ShCoeffs attenuate_sh(const ShCoeffs& sh0, const AttenuationParams& params) {
  const double f = params.factor();
  if (!std::isfinite(f))
    throw NumericalError("ATF attenuation factor is not finite (mu_abs=" + std::to_string(params.mu_abs) +
                         ", mu_sca=" + std::to_string(params.mu_sca) + ", d=" + std::to_string(params.d) + ")");
  ShCoeffs out;
  for (int k = 0; k < kMaxShCoeffs; ++k) out[k] = sh0[k] * f;
  return out;
}

AtfCache atf_apply(const AtfNetwork& net, std::span<const Vec3> positions, double time_norm,
                   std::span<const ShCoeffs> sh0) {
  if (net.layers.empty() || net.layers.front().in != net.input_dim() || net.layers.back().out != 3)
    throw std::invalid_argument("ATF network shape does not match its input encoding");
  if (sh0.size() != positions.size()) throw std::invalid_argument("ATF batch size mismatch");

  AtfCache cache;
  cache.net_version = net.version;
  cache.batch = positions.size();
  const std::size_t n = cache.batch;
  const std::size_t in_dim = net.input_dim();

  cache.activations.resize(net.layers.size() + 1);
  auto& input = cache.activations[0];
  input.resize(n * in_dim);
  const std::vector<double> time_code = positional_encoding(time_norm, net.frequencies);
  for (std::size_t i = 0; i < n; ++i) {
    const double xyz[3] = {positions[i].x, positions[i].y, positions[i].z};
    const std::vector<double> code = positional_encoding(xyz, net.frequencies);
    std::copy(code.begin(), code.end(), input.begin() + i * in_dim);
    std::copy(time_code.begin(), time_code.end(), input.begin() + i * in_dim + code.size());
  }

  for (std::size_t l = 0; l < net.layers.size(); ++l) {
    const bool hidden = l + 1 < net.layers.size();
    dense_forward(net.layers[l], cache.activations[l], n, hidden, cache.activations[l + 1]);
  }

  const auto& out = cache.activations.back();
  cache.params.resize(n);
  cache.factors.resize(n);
  cache.sh0.assign(sh0.begin(), sh0.end());
  cache.sh.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    cache.params[i] = {out[3 * i], out[3 * i + 1], out[3 * i + 2]};
    cache.sh[i] = attenuate_sh(sh0[i], cache.params[i]);
    cache.factors[i] = cache.params[i].factor();
  }
  return cache;
}

AtfBackward atf_backward(const AtfNetwork& net, const AtfCache& cache, std::span<const ShCoeffs> d_sh) {
  if (cache.net_version != net.version) throw std::logic_error("stale ATF cache: network changed since forward");
  if (d_sh.size() != cache.batch) throw std::invalid_argument("ATF gradient batch size mismatch");

  const std::size_t n = cache.batch;
  AtfBackward out;
  out.d_net = net.zeros_like();
  out.d_sh0.resize(n);

  // Head gradient from d factor.
  std::vector<double> d_act(n * 3);
  for (std::size_t i = 0; i < n; ++i) {
    const double f = cache.factors[i];
    double d_factor = 0.0;
    for (int k = 0; k < kMaxShCoeffs; ++k) {
      out.d_sh0[i][k] = f * d_sh[i][k];
      d_factor += d_sh[i][k] * cache.sh0[i][k];
    }
    const AttenuationParams& p = cache.params[i];
    const double d_exponent = d_factor * f;
    d_act[3 * i] = d_exponent * p.d;
    d_act[3 * i + 1] = d_exponent * p.d;
    d_act[3 * i + 2] = d_exponent * (p.mu_abs + p.mu_sca);
  }

  const auto& k = simd::kernels();
  for (std::size_t l = net.layers.size(); l-- > 0;) {
    const DenseLayer& layer = net.layers[l];
    DenseLayer& grad = out.d_net.layers[l];
    const std::size_t in = layer.in, outn = layer.out;
    const std::vector<double>& x = cache.activations[l];

    // dW = dZ^T X, split across output rows.
    for_row_blocks(outn, [&](std::size_t lo, std::size_t hi) {
      k.gemm_tn(hi - lo, in, n, d_act.data() + lo, outn, x.data(), in, grad.weight.data() + lo * in, in);
    });
    for (std::size_t j = 0; j < outn; ++j) {
      double s = 0.0;
      for (std::size_t r = 0; r < n; ++r) s += d_act[r * outn + j];
      grad.bias[j] = s;
    }
    if (l == 0) break;

    // dX = dZ W, then through the ReLU of the previous layer.
    std::vector<double> d_prev(n * in, 0.0);
    for_row_blocks(n, [&](std::size_t lo, std::size_t hi) {
      k.gemm_nn(hi - lo, in, outn, d_act.data() + lo * outn, outn, layer.weight.data(), in, d_prev.data() + lo * in,
                in);
      for (std::size_t e = lo * in; e < hi * in; ++e)
        if (!(x[e] > 0.0)) d_prev[e] = 0.0;
    });
    d_act = std::move(d_prev);
  }
  return out;
}

}  // namespace thermalsplat
