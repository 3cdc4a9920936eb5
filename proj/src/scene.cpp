#include "thermalsplat/scene.hpp"

#include <algorithm>
#include <bit>
#include <cstring>
#include <fstream>
#include <sstream>

#include "thermalsplat/error.hpp"

namespace thermalsplat {

Quat quaternion_from_matrix(const Mat3& r) {
  Quat q;
  const double trace = r(0, 0) + r(1, 1) + r(2, 2);
  if (trace > 0.0) {
    const double s = 2.0 * std::sqrt(trace + 1.0);
    q = {0.25 * s, (r(2, 1) - r(1, 2)) / s, (r(0, 2) - r(2, 0)) / s, (r(1, 0) - r(0, 1)) / s};
  } else if (r(0, 0) > r(1, 1) && r(0, 0) > r(2, 2)) {
    const double s = 2.0 * std::sqrt(1.0 + r(0, 0) - r(1, 1) - r(2, 2));
    q = {(r(2, 1) - r(1, 2)) / s, 0.25 * s, (r(0, 1) + r(1, 0)) / s, (r(0, 2) + r(2, 0)) / s};
  } else if (r(1, 1) > r(2, 2)) {
    const double s = 2.0 * std::sqrt(1.0 + r(1, 1) - r(0, 0) - r(2, 2));
    q = {(r(0, 2) - r(2, 0)) / s, (r(0, 1) + r(1, 0)) / s, 0.25 * s, (r(1, 2) + r(2, 1)) / s};
  } else {
    const double s = 2.0 * std::sqrt(1.0 + r(2, 2) - r(0, 0) - r(1, 1));
    q = {(r(1, 0) - r(0, 1)) / s, (r(0, 2) + r(2, 0)) / s, (r(1, 2) + r(2, 1)) / s, 0.25 * s};
  }
  if (q.w < 0.0) q = {-q.w, -q.x, -q.y, -q.z};
  return normalized(q);
}

void Camera::validate() const {
  std::ostringstream why;
  if (!(fx > 0.0) || !(fy > 0.0)) why << "focal lengths must be positive";
  else if (width <= 0 || height <= 0) why << "image size must be positive";
  else if (!(cx > 0.0 && cx < width) || !(cy > 0.0 && cy < height)) why << "principal point outside image";
  else {
    const Mat3 rrt = rotation * rotation.transposed();
    double err = 0.0;
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j) err = std::max(err, std::abs(rrt(i, j) - (i == j ? 1.0 : 0.0)));
    if (err > 1e-6 || std::abs(rotation.det() - 1.0) > 1e-6) why << "rotation is not orthonormal with det +1";
  }
  if (!why.str().empty()) throw DataError("invalid camera: " + why.str());
}

void GaussianCloud::push_back(const Gaussian& g) {
  positions.push_back(g.position);
  log_scales.push_back(g.log_scale);
  rotations.push_back(g.rotation);
  opacity_raw.push_back(g.opacity_raw);
  sh.push_back(g.sh);
}

Gaussian GaussianCloud::gaussian(std::size_t i) const {
  return {positions[i], log_scales[i], rotations[i], opacity_raw[i], sh[i]};
}

void GaussianCloud::set(std::size_t i, const Gaussian& g) {
  positions[i] = g.position;
  log_scales[i] = g.log_scale;
  rotations[i] = g.rotation;
  opacity_raw[i] = g.opacity_raw;
  sh[i] = g.sh;
}

namespace {
template <typename T>
void compact_vector(std::vector<T>& v, const std::vector<bool>& keep) {
  std::size_t out = 0;
  for (std::size_t i = 0; i < v.size(); ++i)
    if (keep[i]) v[out++] = v[i];
  v.resize(out);
}
}  // namespace

void GaussianCloud::compact(const std::vector<bool>& keep) {
  compact_vector(positions, keep);
  compact_vector(log_scales, keep);
  compact_vector(rotations, keep);
  compact_vector(opacity_raw, keep);
  compact_vector(sh, keep);
}

void GaussianCloud::validate() const {
  const std::size_t n = positions.size();
  if (log_scales.size() != n || rotations.size() != n || opacity_raw.size() != n || sh.size() != n)
    throw DataError("gaussian cloud arrays have mismatched lengths");
  if (sh_degree_active < 0 || sh_degree_active > kMaxShDegree)
    throw DataError("active SH degree out of range");
  auto finite3 = [](const Vec3& v) { return std::isfinite(v.x) && std::isfinite(v.y) && std::isfinite(v.z); };
  for (std::size_t i = 0; i < n; ++i) {
    const Quat& q = rotations[i];
    bool ok = finite3(positions[i]) && finite3(log_scales[i]) && std::isfinite(opacity_raw[i]) &&
              std::isfinite(q.w) && std::isfinite(q.x) && std::isfinite(q.y) && std::isfinite(q.z);
    for (double c : sh[i]) ok = ok && std::isfinite(c);
    if (!ok) throw DataError("gaussian " + std::to_string(i) + " has non-finite parameters");
  }
}

Vec3 SceneBox::normalize(const Vec3& p) const {
  Vec3 out;
  for (int a = 0; a < 3; ++a) {
    const double extent = hi[a] - lo[a];
    out[a] = extent > 0.0 ? 2.0 * (p[a] - lo[a]) / extent - 1.0 : 0.0;
  }
  return out;
}

SceneBox SceneBox::around(const std::vector<Vec3>& points) {
  if (points.empty()) return {};
  SceneBox box{points.front(), points.front()};
  for (const Vec3& p : points)
    for (int a = 0; a < 3; ++a) {
      box.lo[a] = std::min(box.lo[a], p[a]);
      box.hi[a] = std::max(box.hi[a], p[a]);
    }
  // Flat axes (e.g. a planar scene) get a unit extent so they map to 0.
  for (int a = 0; a < 3; ++a)
    if (box.hi[a] - box.lo[a] < 1e-9) {
      box.lo[a] -= 0.5;
      box.hi[a] += 0.5;
    }
  return box;
}

void write_ply(const GaussianCloud& cloud, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot open " + path.string() + " for writing");
  out << "ply\nformat binary_little_endian 1.0\nelement vertex " << cloud.size() << "\n";
  const char* fixed[] = {"x", "y", "z", "scale_0", "scale_1", "scale_2", "rot_0", "rot_1", "rot_2", "rot_3",
                         "opacity", "f_dc_0"};
  for (const char* name : fixed) out << "property float " << name << "\n";
  for (int k = 0; k < kMaxShCoeffs - 1; ++k) out << "property float f_rest_" << k << "\n";
  out << "end_header\n";

  static_assert(std::endian::native == std::endian::little, "PLY writer assumes a little-endian host");
  std::vector<float> row;
  row.reserve(11 + kMaxShCoeffs);
  for (std::size_t i = 0; i < cloud.size(); ++i) {
    row.clear();
    for (int a = 0; a < 3; ++a) row.push_back(static_cast<float>(cloud.positions[i][a]));
    for (int a = 0; a < 3; ++a) row.push_back(static_cast<float>(cloud.log_scales[i][a]));
    for (int a = 0; a < 4; ++a) row.push_back(static_cast<float>(cloud.rotations[i][a]));
    row.push_back(static_cast<float>(cloud.opacity_raw[i]));
    for (double c : cloud.sh[i]) row.push_back(static_cast<float>(c));
    out.write(reinterpret_cast<const char*>(row.data()), static_cast<std::streamsize>(row.size() * sizeof(float)));
  }
  if (!out) throw DataError("failed writing " + path.string());
}

}  // namespace thermalsplat
