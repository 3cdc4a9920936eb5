#pragma once

#include <cstddef>
#include <filesystem>
#include <string>
#include <vector>

#include "thermalsplat/colmap.hpp"
#include "thermalsplat/scene.hpp"

namespace thermalsplat {

struct SplitResult {
  std::vector<std::size_t> train;
  std::vector<std::size_t> test;
  std::string warning;  // non-empty when there are fewer than 8 views
};

/// Views whose index is a multiple of 8 go to the test set.
SplitResult split_train_test(std::size_t view_count);

/// frame_index / max_frame_index, or 0 for a single frame.
double normalized_time(int frame_index, int frame_count);

/// A COLMAP scene with its images loaded, in frame order.
struct Dataset {
  std::filesystem::path root;
  SparseScene scene;
  std::vector<ThermalView> views;
  SplitResult split;
  std::vector<std::string> warnings;
};

/// Loads <root>/sparse[/0] and <root>/images/<name>. An image whose size
/// differs from its camera is kept and the intrinsics are rescaled to match,
/// with a warning.
Dataset load_dataset(const std::filesystem::path& root);

}  // namespace thermalsplat
