#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

#include "thermalsplat/adam.hpp"
#include "thermalsplat/config.hpp"
#include "thermalsplat/pipeline.hpp"
#include "thermalsplat/rng.hpp"

namespace thermalsplat {

/// Optimizer and schedule state carried between iterations.
struct TrainState {
  int iteration = 0;  // completed steps
  Rng rng;
  double scene_extent = 1.0;

  // Gaussian groups keep one row of moments per Gaussian.
  AdamGroup position, log_scale, rotation, opacity, sh;
  AdamGroup atf{kAdamEpsNetwork};
  AdamGroup tcm{kAdamEpsNetwork};

  // Densification statistics since the last densify pass.
  std::vector<double> grad_accum;
  std::vector<std::uint32_t> grad_count;

  // Per-epoch shuffled training order.
  std::vector<std::uint32_t> view_order;
  std::uint32_t view_cursor = 0;

  bool operator==(const TrainState&) const = default;
};

struct Checkpoint {
  TrainConfig config;
  Model model;
  TrainState state;
  bool operator==(const Checkpoint&) const = default;
};

inline constexpr std::uint32_t kCheckpointVersion = 1;

/// Versioned little-endian container of length-prefixed sections. The ATF
/// and TCM sections are omitted when the model has no such network.
std::vector<std::uint8_t> encode_checkpoint(const Checkpoint& ckpt);

/// Throws DataError on a bad magic, an unknown version, a missing section,
/// or "section <name> truncated" when a section runs past its bounds.
Checkpoint decode_checkpoint(const std::vector<std::uint8_t>& bytes, const std::string& source = "checkpoint");

void save_checkpoint(const Checkpoint& ckpt, const std::filesystem::path& path);
Checkpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace thermalsplat
