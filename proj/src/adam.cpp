#include "thermalsplat/adam.hpp"

#include <cmath>
#include <stdexcept>

#include "thermalsplat/simd.hpp"

namespace thermalsplat {
namespace {

bool all_finite(std::span<const double> g) {
  for (double x : g)
    if (!std::isfinite(x)) return false;
  return true;
}

simd::AdamParams begin_step(AdamGroup& group, std::size_t total, double lr) {
  if (!(lr > 0.0)) throw std::invalid_argument("adam: learning rate must be positive");
  if (group.m.empty() && group.v.empty()) {
    group.m.assign(total, 0.0);
    group.v.assign(total, 0.0);
  }
  if (group.m.size() != total || group.v.size() != total)
    throw std::invalid_argument("adam: moment size does not match parameters");
  ++group.step;
  const double t = static_cast<double>(group.step);
  return {lr, group.beta1, group.beta2, group.eps, 1.0 - std::pow(group.beta1, t), 1.0 - std::pow(group.beta2, t)};
}

}  // namespace

bool adam_step(std::span<double> params, std::span<const double> grads, AdamGroup& group, double lr) {
  return adam_step(std::vector<std::span<double>>{params}, std::vector<std::span<const double>>{grads}, group, lr);
}

bool adam_step(const std::vector<std::span<double>>& params, const std::vector<std::span<const double>>& grads,
               AdamGroup& group, double lr) {
  if (params.size() != grads.size()) throw std::invalid_argument("adam: block count mismatch");
  std::size_t total = 0;
  for (std::size_t b = 0; b < params.size(); ++b) {
    if (params[b].size() != grads[b].size()) throw std::invalid_argument("adam: gradient size mismatch");
    total += params[b].size();
  }
  for (const auto& g : grads)
    if (!all_finite(g)) {
      ++group.skipped;
      return false;
    }
  const simd::AdamParams p = begin_step(group, total, lr);
  const auto& k = simd::kernels();
  std::size_t offset = 0;
  for (std::size_t b = 0; b < params.size(); ++b) {
    const std::size_t n = params[b].size();
    k.adam_update(n, params[b].data(), grads[b].data(), group.m.data() + offset, group.v.data() + offset, p);
    offset += n;
  }
  return true;
}

}  // namespace thermalsplat
