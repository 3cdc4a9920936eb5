#include "thermalsplat/camera_path.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include "thermalsplat/error.hpp"

namespace thermalsplat {

std::vector<PathView> parse_camera_path(const std::string& text, const std::string& source) {
  std::vector<PathView> out;
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    line = line.substr(0, line.find('#'));
    std::istringstream ls(line);
    PathView v;
    if (!(ls >> v.name)) continue;
    const auto fail = [&](const std::string& why) {
      throw DataError(source + ":" + std::to_string(lineno) + ": " + why);
    };
    Camera& c = v.camera;
    Quat q;
    if (!(ls >> c.fx >> c.fy >> c.cx >> c.cy >> c.width >> c.height >> q.w >> q.x >> q.y >> q.z >>
          c.translation.x >> c.translation.y >> c.translation.z >> v.time_norm))
      fail("expected 'name fx fy cx cy width height qw qx qy qz tx ty tz time'");
    std::string extra;
    if (ls >> extra) fail("unexpected trailing field '" + extra + "'");
    const double qn = norm(q);
    if (!(qn > 0.0) || !std::isfinite(qn)) fail("zero or non-finite quaternion");
    c.rotation = rotation_matrix(normalized(q));
    if (!(v.time_norm >= 0.0 && v.time_norm <= 1.0)) fail("time must be in [0, 1]");
    try {
      c.validate();
    } catch (const DataError& e) {
      fail(e.what());
    }
    out.push_back(std::move(v));
  }
  if (out.empty()) throw DataError(source + ": no views");
  return out;
}

std::vector<PathView> load_camera_path(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot read camera path " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_camera_path(ss.str(), path.string());
}

}  // namespace thermalsplat
