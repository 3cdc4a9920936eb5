#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <iosfwd>
#include <string>
#include <vector>

#include "thermalsplat/synth.hpp"

// Acceptance criteria. Each runner returns one result; `detail` carries the
// measured numbers against their limits.

namespace thermalsplat::verify {

struct CriterionResult {
  std::string name;
  bool passed = false;
  std::string detail;
  double seconds = 0.0;
};

/// One line: "PASS name (12.3s): detail".
std::string format_result(const CriterionResult& r);

CriterionResult check_gradient_integrity(std::uint64_t seed = 11);
CriterionResult check_physics_oracle();
CriterionResult check_identity_at_init(std::uint64_t seed = 5);
CriterionResult check_loss_contract(std::uint64_t seed = 3);
CriterionResult check_io(const std::filesystem::path& work_dir);
CriterionResult check_metric_sanity(std::uint64_t seed = 9);

/// Built-in desk-scale scene used by the training criteria.
std::string desk_scene_spec_text();

struct AblationOptions {
  std::filesystem::path work_dir;
  int iterations = 3000;
  std::uint64_t data_seed = 1;
  std::uint64_t train_seed = 0;
  int max_gaussians = 1500;
  std::ostream* log = nullptr;  // per-run progress, optional
};

struct AblationRun {
  std::string label;
  bool atf = false, tcm = false, dis = false;
  double test_psnr = 0.0;
  double test_ssim = 0.0;
  std::size_t gaussians = 0;
  std::filesystem::path checkpoint;
  double seconds = 0.0;
};

struct AblationOutcome {
  CriterionResult result;
  std::vector<AblationRun> runs;  // baseline, +atf, +tcm, full
};

/// Trains the four configurations on the generated scene and compares test
/// PSNR. Full method must not fall below the baseline; each single module
/// may fall at most 0.05 dB below it. A margin under 0.5 dB is reported.
AblationOutcome check_directional_ablation(const AblationOptions& options);

/// Trains the full configuration again and compares its final checkpoint
/// byte for byte with `reference` (the ablation's full-method checkpoint).
CriterionResult check_determinism(const AblationOptions& options, const std::filesystem::path& reference);

struct SuiteOptions {
  std::filesystem::path work_dir;
  int iterations = 3000;
  bool training = true;  // skip the ablation and determinism runs when false
  std::ostream* log = nullptr;
};

/// Runs every criterion in order, reporting each through `report` as it
/// finishes. Returns true when all pass.
bool run_acceptance(const SuiteOptions& options, const std::function<void(const CriterionResult&)>& report);

}  // namespace thermalsplat::verify
