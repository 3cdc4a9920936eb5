#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "thermalsplat/scene.hpp"

// COLMAP sparse models (cameras, images, points3D) in text or binary form.
// Only undistorted pinhole models are accepted.

namespace thermalsplat {

struct SparseCamera {
  std::string model;  // SIMPLE_PINHOLE or PINHOLE
  Camera intrinsics;  // identity pose
  bool operator==(const SparseCamera&) const = default;
};

struct SparseView {
  int image_id = 0;
  int camera_id = 0;
  std::string name;
  Quat qvec;  // world -> camera, as stored
  Vec3 tvec;
  int frame_index = 0;  // position in filename order
  bool operator==(const SparseView&) const = default;
};

struct SeedPoint {
  std::uint64_t id = 0;
  Vec3 position;
  std::array<std::uint8_t, 3> rgb{};
  double error = 0.0;
  double radiance = 0.0;  // mean(rgb) / 255
  bool operator==(const SeedPoint&) const = default;
};

struct SparseScene {
  std::map<int, SparseCamera> cameras;
  std::vector<SparseView> views;  // sorted by name; frame_index = position
  std::vector<SeedPoint> points;

  /// Full camera (intrinsics plus normalized pose) of one view.
  Camera camera(const SparseView& view) const;
  bool operator==(const SparseScene&) const = default;
};

/// Reads a model directory holding cameras/images/points3D as .bin (preferred
/// when present) or .txt. Throws DataError with file and line (text) or byte
/// offset (binary) on malformed input, on unsupported camera models, on views
/// referencing unknown cameras, and with "no seed points" when points3D is
/// empty.
SparseScene parse_colmap(const std::filesystem::path& model_dir);
SparseScene parse_colmap_text(const std::filesystem::path& model_dir);
SparseScene parse_colmap_binary(const std::filesystem::path& model_dir);

/// Writers for the same layouts. Point tracks are written empty.
void write_colmap_text(const SparseScene& scene, const std::filesystem::path& model_dir);
void write_colmap_binary(const SparseScene& scene, const std::filesystem::path& model_dir);

/// Locates the sparse model under a dataset root: sparse/0, sparse, or the
/// root itself. Throws DataError when none holds a model.
std::filesystem::path find_sparse_model(const std::filesystem::path& root);

}  // namespace thermalsplat
