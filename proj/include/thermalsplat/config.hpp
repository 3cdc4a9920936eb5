#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "thermalsplat/losses.hpp"

namespace thermalsplat {

/// Training hyperparameters. Gaussian-group rates and densification
/// constants follow common 3D Gaussian splatting defaults.
struct TrainConfig {
  int total_iterations = 30000;

  double atf_lr_start = 8e-4;
  double atf_lr_end = 1.6e-6;
  double position_lr_start = 1.6e-4;
  double position_lr_end = 1.6e-6;
  double sh_lr = 2.5e-3;
  double opacity_lr = 5e-2;
  double scale_lr = 5e-3;
  double rotation_lr = 1e-3;

  int densify_interval = 100;
  int densify_from = 500;
  int densify_until = 15000;
  double densify_grad_threshold = 2e-4;
  double prune_opacity = 5e-3;
  int opacity_reset_interval = 3000;
  double percent_dense = 0.01;
  int max_gaussians = 200000;

  int sh_degree_max = 3;
  int sh_degree_interval = 1000;
  double init_opacity = 0.1;

  bool use_atf = true;
  bool use_tcm = true;
  bool use_dis = true;

  double lambda_dis = 0.2;
  double lambda_dssim = 0.2;
  int iter_t = 5000;
  double k_harris = 0.04;

  int atf_depth = 8;
  int atf_width = 256;
  int atf_frequencies = 10;

  double background = 0.0;
  std::uint64_t seed = 0;
  std::vector<int> checkpoint_iterations{7000, 30000};
  int log_interval = 1000;

  LossWeights loss_weights() const { return {lambda_dis, lambda_dssim, iter_t, k_harris}; }

  /// Sets one field from text. Throws UsageError naming an unknown key or a
  /// value that does not parse.
  void set(const std::string& key, const std::string& value);
  /// Applies "key=value".
  void apply(const std::string& assignment);
  /// Applies a file of key=value lines ('#' comments, blank lines allowed).
  void apply_file(const std::filesystem::path& path);

  /// Every field as "key=value", in a fixed order; values round-trip exactly.
  std::vector<std::string> to_lines() const;
  std::string to_text() const;
  static TrainConfig from_text(const std::string& text);

  /// Throws UsageError on out-of-range values.
  void validate() const;

  bool operator==(const TrainConfig&) const = default;
};

/// lr_start * (lr_end / lr_start)^(iteration / total), clamped to [0, total].
double exponential_lr(double lr_start, double lr_end, int iteration, int total);

}  // namespace thermalsplat
