#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "thermalsplat/scene.hpp"

// Camera paths for rendering novel views. One view per line:
//   name fx fy cx cy width height qw qx qy qz tx ty tz time
// with the pose world -> camera (COLMAP convention) and time in [0, 1].
// '#' starts a comment.

namespace thermalsplat {

struct PathView {
  std::string name;
  Camera camera;
  double time_norm = 0.0;
};

/// Throws DataError "<source>:<line>: ..." on malformed lines, invalid
/// cameras or an empty path.
std::vector<PathView> parse_camera_path(const std::string& text, const std::string& source = "camera path");
std::vector<PathView> load_camera_path(const std::filesystem::path& path);

}  // namespace thermalsplat
