#include "thermalsplat/losses.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace thermalsplat {
namespace {

constexpr int kSsimRadius = 5;
constexpr double kSsimSigma = 1.5;
constexpr double kC1 = 0.01 * 0.01;
constexpr double kC2 = 0.03 * 0.03;

void require_same_shape(const RadianceImage& a, const RadianceImage& b) {
  if (!a.same_shape(b) || a.data.size() != b.data.size())
    throw std::invalid_argument("image shape mismatch: " + std::to_string(a.width) + "x" + std::to_string(a.height) +
                                " vs " + std::to_string(b.width) + "x" + std::to_string(b.height));
}

template <int R>
std::array<double, 2 * R + 1> gaussian_taps(double sigma) {
  std::array<double, 2 * R + 1> w{};
  double s = 0.0;
  for (int i = -R; i <= R; ++i) s += (w[i + R] = std::exp(-(i * i) / (2.0 * sigma * sigma)));
  for (double& v : w) v /= s;
  return w;
}

inline int clampi(int i, int n) { return std::clamp(i, 0, n - 1); }

// Separable clamp-to-edge filter.
template <std::size_t N>
RadianceImage separable_filter(const RadianceImage& in, const std::array<double, N>& taps) {
  constexpr int r = static_cast<int>(N / 2);
  const int w = in.width, h = in.height;
  RadianceImage tmp(w, h), out(w, h);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      double s = 0.0;
      for (int k = -r; k <= r; ++k) s += taps[k + r] * in.at(clampi(x + k, w), y);
      tmp.at(x, y) = s;
    }
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      double s = 0.0;
      for (int k = -r; k <= r; ++k) s += taps[k + r] * tmp.at(x, clampi(y + k, h));
      out.at(x, y) = s;
    }
  return out;
}

// Adjoint of separable_filter.
template <std::size_t N>
RadianceImage separable_filter_adjoint(const RadianceImage& in, const std::array<double, N>& taps) {
  constexpr int r = static_cast<int>(N / 2);
  const int w = in.width, h = in.height;
  RadianceImage tmp(w, h), out(w, h);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x)
      for (int k = -r; k <= r; ++k) tmp.at(x, clampi(y + k, h)) += taps[k + r] * in.at(x, y);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x)
      for (int k = -r; k <= r; ++k) out.at(clampi(x + k, w), y) += taps[k + r] * tmp.at(x, y);
  return out;
}

const std::array<double, 2 * kSsimRadius + 1>& ssim_taps() {
  static const auto taps = gaussian_taps<kSsimRadius>(kSsimSigma);
  return taps;
}

RadianceImage product(const RadianceImage& a, const RadianceImage& b) {
  RadianceImage out(a.width, a.height);
  for (std::size_t i = 0; i < a.data.size(); ++i) out.data[i] = a.data[i] * b.data[i];
  return out;
}

SsimGrad ssim_impl(const RadianceImage& pred_raw, const RadianceImage& gt_raw, bool with_grad) {
  require_same_shape(pred_raw, gt_raw);
  const RadianceImage x = clamp01(pred_raw);
  const RadianceImage y = clamp01(gt_raw);
  const auto& taps = ssim_taps();
  const RadianceImage mu_x = separable_filter(x, taps);
  const RadianceImage mu_y = separable_filter(y, taps);
  const RadianceImage e_xx = separable_filter(product(x, x), taps);
  const RadianceImage e_yy = separable_filter(product(y, y), taps);
  const RadianceImage e_xy = separable_filter(product(x, y), taps);

  const std::size_t n = x.data.size();
  SsimGrad out;
  RadianceImage d_mu(x.width, x.height), d_exx(x.width, x.height), d_exy(x.width, x.height);
  double sum = 0.0;
  const double inv_n = 1.0 / static_cast<double>(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double mx = mu_x.data[i], my = mu_y.data[i];
    const double sxx = e_xx.data[i] - mx * mx;
    const double syy = e_yy.data[i] - my * my;
    const double sxy = e_xy.data[i] - mx * my;
    const double a1 = 2.0 * mx * my + kC1, a2 = 2.0 * sxy + kC2;
    const double b1 = mx * mx + my * my + kC1, b2 = sxx + syy + kC2;
    const double s = (a1 * a2) / (b1 * b2);
    sum += s;
    if (with_grad) {
      const double inv = 1.0 / (b1 * b2);
      d_mu.data[i] = inv_n * ((2.0 * my * a2 - 2.0 * my * a1) * inv - s * (2.0 * mx / b1 - 2.0 * mx / b2));
      d_exx.data[i] = inv_n * (-s / b2);
      d_exy.data[i] = inv_n * (2.0 * a1 * inv);
    }
  }
  out.value = sum / static_cast<double>(n);
  if (!with_grad) return out;

  const RadianceImage g_mu = separable_filter_adjoint(d_mu, taps);
  const RadianceImage g_xx = separable_filter_adjoint(d_exx, taps);
  const RadianceImage g_xy = separable_filter_adjoint(d_exy, taps);
  out.d_pred = RadianceImage(x.width, x.height);
  for (std::size_t i = 0; i < n; ++i) {
    const double p = pred_raw.data[i];
    if (p < 0.0 || p > 1.0) continue;
    out.d_pred.data[i] = g_mu.data[i] + 2.0 * x.data[i] * g_xx.data[i] + y.data[i] * g_xy.data[i];
  }
  return out;
}

}  // namespace

void LossWeights::validate() const {
  if (!(lambda_dis >= 0.0 && lambda_dssim >= 0.0 && lambda_dis + lambda_dssim < 1.0))
    throw std::invalid_argument("loss weights must satisfy lambda_dis + lambda_dssim < 1");
  if (iter_t <= 0) throw std::invalid_argument("iter_t must be positive");
}

RadianceImage clamp01(const RadianceImage& image) {
  RadianceImage out = image;
  for (double& v : out.data) v = std::clamp(v, 0.0, 1.0);
  return out;
}

double l1_loss(const RadianceImage& pred, const RadianceImage& gt) {
  require_same_shape(pred, gt);
  double s = 0.0;
  for (std::size_t i = 0; i < pred.data.size(); ++i) s += std::abs(pred.data[i] - gt.data[i]);
  return s / static_cast<double>(pred.data.size());
}

double ssim(const RadianceImage& pred, const RadianceImage& gt) { return ssim_impl(pred, gt, false).value; }

SsimGrad ssim_with_grad(const RadianceImage& pred, const RadianceImage& gt) { return ssim_impl(pred, gt, true); }

RadianceImage harris_response(const RadianceImage& image, double k) {
  const int w = image.width, h = image.height;
  RadianceImage ixx(w, h), iyy(w, h), ixy(w, h);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      auto at = [&](int dx, int dy) { return image.at(clampi(x + dx, w), clampi(y + dy, h)); };
      const double gx = ((at(1, -1) + 2.0 * at(1, 0) + at(1, 1)) - (at(-1, -1) + 2.0 * at(-1, 0) + at(-1, 1))) / 8.0;
      const double gy = ((at(-1, 1) + 2.0 * at(0, 1) + at(1, 1)) - (at(-1, -1) + 2.0 * at(0, -1) + at(1, -1))) / 8.0;
      ixx.at(x, y) = gx * gx;
      iyy.at(x, y) = gy * gy;
      ixy.at(x, y) = gx * gy;
    }
  static const auto taps = gaussian_taps<1>(1.0);
  const RadianceImage sxx = separable_filter(ixx, taps);
  const RadianceImage syy = separable_filter(iyy, taps);
  const RadianceImage sxy = separable_filter(ixy, taps);
  RadianceImage r(w, h);
  for (std::size_t i = 0; i < r.data.size(); ++i) {
    const double tr = sxx.data[i] + syy.data[i];
    r.data[i] = (sxx.data[i] * syy.data[i] - sxy.data[i] * sxy.data[i]) - k * tr * tr;
  }
  return r;
}

RadianceImage corner_weights(const RadianceImage& gt, double k) {
  RadianceImage r = harris_response(gt, k);
  double r_max = 0.0;
  for (double& v : r.data) {
    v = std::max(v, 0.0);
    r_max = std::max(r_max, v);
  }
  if (r_max > 0.0)
    for (double& v : r.data) v /= r_max;
  return r;
}

double discontinuity_decay(int iteration, int iter_t) {
  return std::max(1.0 - static_cast<double>(iteration) / static_cast<double>(iter_t), 0.0);
}

double discontinuous_loss(const RadianceImage& pred, const RadianceImage& gt, int iteration,
                          const LossWeights& weights) {
  require_same_shape(pred, gt);
  const double decay = discontinuity_decay(iteration, weights.iter_t);
  if (decay == 0.0) return 0.0;
  const RadianceImage w = corner_weights(gt, weights.k_harris);
  double s = 0.0;
  for (std::size_t i = 0; i < pred.data.size(); ++i) s += w.data[i] * std::abs(pred.data[i] - gt.data[i]);
  return decay * (s / static_cast<double>(pred.data.size()));
}

double combine_losses(double dis, double dssim, double l1, const LossWeights& w) {
  return w.lambda_dis * dis + w.lambda_dssim * dssim + (1.0 - (w.lambda_dis + w.lambda_dssim)) * l1;
}

TotalLoss total_loss(const RadianceImage& pred, const RadianceImage& gt, int iteration, const LossWeights& weights,
                     bool use_dis, const RadianceImage* weights_map) {
  require_same_shape(pred, gt);
  LossWeights w = weights;
  if (!use_dis) w.lambda_dis = 0.0;
  const std::size_t n = pred.data.size();
  const double inv_n = 1.0 / static_cast<double>(n);

  TotalLoss out;
  out.d_pred = RadianceImage(pred.width, pred.height);
  const double w_l1 = 1.0 - (w.lambda_dis + w.lambda_dssim);

  double l1 = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double diff = pred.data[i] - gt.data[i];
    l1 += std::abs(diff);
    const double sign = diff > 0.0 ? 1.0 : (diff < 0.0 ? -1.0 : 0.0);
    out.d_pred.data[i] = w_l1 * sign * inv_n;
  }
  out.terms.l1 = l1 * inv_n;

  const SsimGrad sg = ssim_with_grad(pred, gt);
  out.terms.dssim = d_ssim_loss(sg.value);
  for (std::size_t i = 0; i < n; ++i) out.d_pred.data[i] += -0.5 * w.lambda_dssim * sg.d_pred.data[i];

  const double decay = use_dis ? discontinuity_decay(iteration, w.iter_t) : 0.0;
  if (decay > 0.0) {
    RadianceImage local;
    if (!weights_map) local = corner_weights(gt, w.k_harris);
    const RadianceImage& cw = weights_map ? *weights_map : local;
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const double diff = pred.data[i] - gt.data[i];
      s += cw.data[i] * std::abs(diff);
      const double sign = diff > 0.0 ? 1.0 : (diff < 0.0 ? -1.0 : 0.0);
      out.d_pred.data[i] += w.lambda_dis * decay * cw.data[i] * sign * inv_n;
    }
    out.terms.dis = decay * (s * inv_n);
  }
  out.terms.total = combine_losses(out.terms.dis, out.terms.dssim, out.terms.l1, w);
  return out;
}

double psnr(const RadianceImage& pred, const RadianceImage& gt) {
  require_same_shape(pred, gt);
  double s = 0.0;
  for (std::size_t i = 0; i < pred.data.size(); ++i) {
    const double d = pred.data[i] - gt.data[i];
    s += d * d;
  }
  const double mse = s / static_cast<double>(pred.data.size());
  if (mse == 0.0) return std::numeric_limits<double>::infinity();
  return 10.0 * std::log10(1.0 / mse);
}

}  // namespace thermalsplat
