#include "thermalsplat/verify/oracles.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

namespace thermalsplat::verify {

RadianceImage random_image(Rng& rng, int width, int height, double lo, double hi) {
  RadianceImage img(width, height);
  for (double& v : img.data) v = rng.uniform(lo, hi);
  return img;
}

double naive_l1(const RadianceImage& a, const RadianceImage& b) {
  long double s = 0.0L;
  for (int y = 0; y < a.height; ++y)
    for (int x = 0; x < a.width; ++x) s += std::fabs(static_cast<long double>(a.at(x, y)) - b.at(x, y));
  return static_cast<double>(s / (static_cast<long double>(a.width) * a.height));
}

double naive_psnr(const RadianceImage& a, const RadianceImage& b) {
  long double s = 0.0L;
  for (int y = 0; y < a.height; ++y)
    for (int x = 0; x < a.width; ++x) {
      const long double d = static_cast<long double>(a.at(x, y)) - b.at(x, y);
      s += d * d;
    }
  const long double mse = s / (static_cast<long double>(a.width) * a.height);
  if (mse == 0.0L) return std::numeric_limits<double>::infinity();
  return static_cast<double>(-10.0L * std::log10(mse));
}

namespace {
int clampi(int v, int n) { return v < 0 ? 0 : (v >= n ? n - 1 : v); }
}  // namespace

double reference_ssim(const RadianceImage& pred, const RadianceImage& gt) {
  const int w = pred.width, h = pred.height;
  double win[11][11];
  double total = 0.0;
  for (int j = 0; j < 11; ++j)
    for (int i = 0; i < 11; ++i) {
      const double dx = i - 5, dy = j - 5;
      win[j][i] = std::exp(-(dx * dx + dy * dy) / (2.0 * 1.5 * 1.5));
      total += win[j][i];
    }
  auto px = [](double v) { return std::min(1.0, std::max(0.0, v)); };
  const double c1 = 0.0001, c2 = 0.0009;
  long double acc = 0.0L;
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      double mx = 0, my = 0, exx = 0, eyy = 0, exy = 0;
      for (int j = 0; j < 11; ++j)
        for (int i = 0; i < 11; ++i) {
          const double wt = win[j][i] / total;
          const int sx = clampi(x + i - 5, w), sy = clampi(y + j - 5, h);
          const double a = px(pred.at(sx, sy)), b = px(gt.at(sx, sy));
          mx += wt * a;
          my += wt * b;
          exx += wt * a * a;
          eyy += wt * b * b;
          exy += wt * a * b;
        }
      const double vx = exx - mx * mx, vy = eyy - my * my, cxy = exy - mx * my;
      acc += ((2 * mx * my + c1) * (2 * cxy + c2)) / ((mx * mx + my * my + c1) * (vx + vy + c2));
    }
  return static_cast<double>(acc / (static_cast<long double>(w) * h));
}

RadianceImage naive_harris(const RadianceImage& image, double k) {
  const int w = image.width, h = image.height;
  const double sobel_x[3][3] = {{-1, 0, 1}, {-2, 0, 2}, {-1, 0, 1}};
  const double sobel_y[3][3] = {{-1, -2, -1}, {0, 0, 0}, {1, 2, 1}};
  RadianceImage gx(w, h), gy(w, h);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      double sx = 0, sy = 0;
      for (int j = -1; j <= 1; ++j)
        for (int i = -1; i <= 1; ++i) {
          const double v = image.at(clampi(x + i, w), clampi(y + j, h));
          sx += sobel_x[j + 1][i + 1] * v;
          sy += sobel_y[j + 1][i + 1] * v;
        }
      gx.at(x, y) = sx / 8.0;
      gy.at(x, y) = sy / 8.0;
    }
  double g[3][3];
  double gs = 0;
  for (int j = -1; j <= 1; ++j)
    for (int i = -1; i <= 1; ++i) gs += (g[j + 1][i + 1] = std::exp(-(i * i + j * j) / 2.0));
  RadianceImage r(w, h);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      double a = 0, b = 0, c = 0;
      for (int j = -1; j <= 1; ++j)
        for (int i = -1; i <= 1; ++i) {
          const int sx = clampi(x + i, w), sy = clampi(y + j, h);
          const double wt = g[j + 1][i + 1] / gs;
          a += wt * gx.at(sx, sy) * gx.at(sx, sy);
          b += wt * gx.at(sx, sy) * gy.at(sx, sy);
          c += wt * gy.at(sx, sy) * gy.at(sx, sy);
        }
      const double half_tr = 0.5 * (a + c);
      const double disc = std::sqrt(std::max(0.0, 0.25 * (a - c) * (a - c) + b * b));
      const double l1 = half_tr + disc, l2 = half_tr - disc;
      r.at(x, y) = l1 * l2 - k * (l1 + l2) * (l1 + l2);
    }
  return r;
}

RadianceImage naive_laplacian(const RadianceImage& u) {
  const int w = u.width, h = u.height;
  RadianceImage out(w, h);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x)
      out.at(x, y) = u.at(clampi(x + 1, w), y) + u.at(clampi(x - 1, w), y) + u.at(x, clampi(y + 1, h)) +
                     u.at(x, clampi(y - 1, h)) - 4.0 * u.at(x, y);
  return out;
}

FeatureMap naive_conv3x3(const ConvLayer& layer, const FeatureMap& in) {
  FeatureMap out(layer.out, in.width, in.height);
  for (int o = 0; o < layer.out; ++o)
    for (int y = 0; y < in.height; ++y)
      for (int x = 0; x < in.width; ++x) {
        double s = layer.bias[o];
        for (int c = 0; c < layer.in; ++c)
          for (int ky = 0; ky < 3; ++ky)
            for (int kx = 0; kx < 3; ++kx) {
              const int sx = clampi(x + kx - 1, in.width), sy = clampi(y + ky - 1, in.height);
              s += layer.w(o, c, ky, kx) * in.data[(static_cast<std::size_t>(c) * in.height + sy) * in.width + sx];
            }
        out.data[(static_cast<std::size_t>(o) * in.height + y) * in.width + x] = s;
      }
  return out;
}

RadianceImage naive_tcm(const RadianceImage& image, const TcmNetwork& net) {
  const RadianceImage lap = naive_laplacian(image);
  FeatureMap in(2, image.width, image.height);
  std::copy(image.data.begin(), image.data.end(), in.data.begin());
  std::copy(lap.data.begin(), lap.data.end(), in.data.begin() + static_cast<std::ptrdiff_t>(image.size()));
  FeatureMap a = naive_conv3x3(net.layers[0], in);
  for (double& v : a.data) v = std::max(v, 0.0);
  FeatureMap b = naive_conv3x3(net.layers[1], a);
  for (double& v : b.data) v = std::max(v, 0.0);
  const FeatureMap c = naive_conv3x3(net.layers[2], b);
  RadianceImage out = image;
  for (std::size_t i = 0; i < out.size(); ++i) out.data[i] += c.data[i];
  return out;
}

double heat_kernel(double alpha, double time, double r2) {
  return std::exp(-r2 / (4.0 * alpha * time)) / (4.0 * std::numbers::pi * alpha * time);
}

}  // namespace thermalsplat::verify
