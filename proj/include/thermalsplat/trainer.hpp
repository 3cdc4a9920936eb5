#pragma once

#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "thermalsplat/checkpoint.hpp"
#include "thermalsplat/colmap.hpp"
#include "thermalsplat/config.hpp"
#include "thermalsplat/dataset.hpp"
#include "thermalsplat/losses.hpp"
#include "thermalsplat/pipeline.hpp"

namespace thermalsplat {

/// Learning rate of the ATF network.
double atf_lr(const TrainConfig& config, int iteration);
/// Position-group rate before spatial scaling; also used for the TCM.
double position_lr(const TrainConfig& config, int iteration);

/// Radius of the camera centers around their mean, times 1.1.
double camera_extent(const std::vector<ThermalView>& views);

/// Gaussians seeded from the sparse points: grey DC from the point
/// radiance, isotropic scale from the mean squared distance to the three
/// nearest neighbours, identity rotation, opacity config.init_opacity.
/// Networks are created for the enabled modules from seed-derived streams.
Model initialize_model(const SparseScene& scene, const TrainConfig& config);

/// Fresh optimizer state sized for `model`.
TrainState initialize_state(const Model& model, const TrainConfig& config, double scene_extent);

PipelineOptions pipeline_options(const TrainConfig& config);

struct DensifyStats {
  std::size_t cloned = 0;
  std::size_t split = 0;
  std::size_t pruned = 0;
  bool capped = false;  // growth skipped because of max_gaussians
};

/// Clone small and split large Gaussians whose mean screen-space gradient
/// reaches the threshold, then prune by opacity. Optimizer rows follow the
/// Gaussians; new rows start at zero. Resets the gradient statistics.
DensifyStats densify_and_prune(Model& model, TrainState& state, const TrainConfig& config, bool densify = true);

/// Caps every activated opacity at 0.01 and clears the opacity moments.
void reset_opacity(Model& model, TrainState& state);

struct StepInfo {
  LossTerms loss;
  std::size_t view = 0;
  std::optional<DensifyStats> densify;
  bool opacity_reset = false;
};

struct EvalRow {
  int frame_index = 0;
  std::string name;
  double psnr = 0.0;
  double ssim = 0.0;
};

struct EvalReport {
  int iteration = 0;
  std::vector<EvalRow> rows;
  double mean_psnr = 0.0;
  double mean_ssim = 0.0;
};

/// PSNR/SSIM of the pipeline output (clamped to [0, 1]) on the given views.
EvalReport evaluate(const Model& model, const Dataset& dataset, const std::vector<std::size_t>& indices,
                    const PipelineOptions& options);
void write_eval_report(const EvalReport& report, std::ostream& out);

/// "inf" for +infinity, otherwise fixed precision.
std::string format_metric(double value);

class Trainer {
 public:
  Trainer(const Dataset& dataset, const TrainConfig& config);
  /// Resumes; networks absent from the checkpoint but enabled in the
  /// config are created at identity.
  Trainer(const Dataset& dataset, Checkpoint checkpoint);

  /// One optimization step. Throws NumericalError on a non-finite loss.
  StepInfo step();

  const Model& model() const { return model_; }
  Model& model() { return model_; }
  const TrainState& state() const { return state_; }
  const TrainConfig& config() const { return config_; }
  Checkpoint checkpoint() const { return {config_, model_, state_}; }

 private:
  std::size_t next_view();
  std::string diagnose(std::size_t view, const LossTerms& loss) const;

  const Dataset& dataset_;
  TrainConfig config_;
  Model model_;
  TrainState state_;
  std::vector<std::optional<RadianceImage>> corner_maps_;
};

struct TrainOutcome {
  Checkpoint final;
  std::vector<std::filesystem::path> checkpoints;
  std::vector<EvalReport> evaluations;
};

/// Runs to config.total_iterations, writing <out>/metrics.log and
/// <out>/checkpoint_<iter>.ckpt at each configured checkpoint iteration
/// (and at the end), with test-split metrics at each checkpoint. `console`
/// receives the periodic loss summary.
TrainOutcome train(const Dataset& dataset, const TrainConfig& config, const std::filesystem::path& out_dir,
                   std::ostream& console, std::optional<Checkpoint> resume = std::nullopt);

}  // namespace thermalsplat
