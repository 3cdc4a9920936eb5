#include "thermalsplat/colmap.hpp"

#include <algorithm>
#include <charconv>
#include <cstdio>
#include <fstream>

#include "bytes.hpp"
#include "thermalsplat/error.hpp"

namespace thermalsplat {
namespace fs = std::filesystem;

namespace {

constexpr int kSimplePinholeId = 0;
constexpr int kPinholeId = 1;

// Parameter counts of COLMAP's model ids, for error messages.
const char* model_name(int id) {
  static const char* names[] = {"SIMPLE_PINHOLE", "PINHOLE",         "SIMPLE_RADIAL", "RADIAL",
                                "OPENCV",         "OPENCV_FISHEYE",  "FULL_OPENCV",   "FOV",
                                "SIMPLE_RADIAL_FISHEYE", "RADIAL_FISHEYE", "THIN_PRISM_FISHEYE"};
  return id >= 0 && id < 11 ? names[id] : "UNKNOWN";
}

SparseCamera make_camera(const std::string& model, std::uint64_t width, std::uint64_t height,
                         const std::vector<double>& p) {
  SparseCamera c;
  c.model = model;
  c.intrinsics.width = static_cast<int>(width);
  c.intrinsics.height = static_cast<int>(height);
  if (model == "SIMPLE_PINHOLE") {
    c.intrinsics.fx = c.intrinsics.fy = p[0];
    c.intrinsics.cx = p[1];
    c.intrinsics.cy = p[2];
  } else {
    c.intrinsics.fx = p[0];
    c.intrinsics.fy = p[1];
    c.intrinsics.cx = p[2];
    c.intrinsics.cy = p[3];
  }
  return c;
}

std::size_t param_count(const std::string& model) { return model == "SIMPLE_PINHOLE" ? 3 : 4; }

double mean_radiance(const std::array<std::uint8_t, 3>& rgb) { return (rgb[0] + rgb[1] + rgb[2]) / (3.0 * 255.0); }

void finalize(SparseScene& scene, const std::string& source) {
  for (const auto& v : scene.views)
    if (!scene.cameras.contains(v.camera_id))
      throw DataError(source + ": image '" + v.name + "' references unknown camera " + std::to_string(v.camera_id));
  if (scene.points.empty()) throw DataError(source + ": no seed points");
  std::stable_sort(scene.views.begin(), scene.views.end(),
                   [](const SparseView& a, const SparseView& b) { return a.name < b.name; });
  for (std::size_t i = 0; i < scene.views.size(); ++i) {
    if (i > 0 && scene.views[i].name == scene.views[i - 1].name)
      throw DataError(source + ": duplicate image name '" + scene.views[i].name + "'");
    scene.views[i].frame_index = static_cast<int>(i);
  }
  for (const auto& [id, cam] : scene.cameras) {
    try {
      cam.intrinsics.validate();
    } catch (const DataError& e) {
      throw DataError(source + ": camera " + std::to_string(id) + ": " + e.what());
    }
  }
}

// ---- text ----

struct Token {
  std::string text;
  int column;
};

std::vector<Token> tokenize(const std::string& line) {
  std::vector<Token> out;
  std::size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && (line[i] == ' ' || line[i] == '\t' || line[i] == '\r')) ++i;
    if (i >= line.size()) break;
    const std::size_t start = i;
    while (i < line.size() && line[i] != ' ' && line[i] != '\t' && line[i] != '\r') ++i;
    out.push_back({line.substr(start, i - start), static_cast<int>(start) + 1});
  }
  return out;
}

class TextFile {
 public:
  explicit TextFile(const fs::path& path) : path_(path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open " + path.string());
    std::string line;
    while (std::getline(in, line)) lines_.push_back(line);
  }

  [[noreturn]] void fail(int line, int column, const std::string& what) const {
    throw DataError(path_.string() + ":" + std::to_string(line) + ":" + std::to_string(column) + ": " + what);
  }

  template <typename T>
  T number(const std::vector<Token>& toks, std::size_t i, int line) const {
    if (i >= toks.size()) {
      const int col = toks.empty() ? 1 : toks.back().column + static_cast<int>(toks.back().text.size());
      fail(line, col, "missing field");
    }
    const std::string& s = toks[i].text;
    T v{};
    const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc{} || ptr != s.data() + s.size()) fail(line, toks[i].column, "malformed number '" + s + "'");
    return v;
  }

  const std::vector<std::string>& lines() const { return lines_; }

 private:
  fs::path path_;
  std::vector<std::string> lines_;
};

bool is_comment_or_blank(const std::string& line) {
  const auto p = line.find_first_not_of(" \t\r");
  return p == std::string::npos || line[p] == '#';
}

void parse_cameras_text(const fs::path& path, SparseScene& scene) {
  TextFile f(path);
  for (std::size_t li = 0; li < f.lines().size(); ++li) {
    const std::string& line = f.lines()[li];
    if (is_comment_or_blank(line)) continue;
    const int ln = static_cast<int>(li) + 1;
    const auto toks = tokenize(line);
    const int id = f.number<int>(toks, 0, ln);
    if (toks.size() < 2) f.fail(ln, static_cast<int>(line.size()) + 1, "missing camera model");
    const std::string& model = toks[1].text;
    if (model != "SIMPLE_PINHOLE" && model != "PINHOLE")
      f.fail(ln, toks[1].column, "unsupported camera model " + model);
    const auto w = f.number<std::uint64_t>(toks, 2, ln);
    const auto h = f.number<std::uint64_t>(toks, 3, ln);
    std::vector<double> params;
    for (std::size_t k = 0; k < param_count(model); ++k) params.push_back(f.number<double>(toks, 4 + k, ln));
    if (toks.size() > 4 + params.size()) f.fail(ln, toks[4 + params.size()].column, "unexpected extra field");
    if (!scene.cameras.emplace(id, make_camera(model, w, h, params)).second)
      f.fail(ln, toks[0].column, "duplicate camera id " + std::to_string(id));
  }
}

void parse_images_text(const fs::path& path, SparseScene& scene) {
  TextFile f(path);
  const auto& lines = f.lines();
  std::size_t li = 0;
  while (li < lines.size()) {
    if (is_comment_or_blank(lines[li])) {
      ++li;
      continue;
    }
    const int ln = static_cast<int>(li) + 1;
    const auto toks = tokenize(lines[li]);
    SparseView v;
    v.image_id = f.number<int>(toks, 0, ln);
    v.qvec = {f.number<double>(toks, 1, ln), f.number<double>(toks, 2, ln), f.number<double>(toks, 3, ln),
              f.number<double>(toks, 4, ln)};
    v.tvec = {f.number<double>(toks, 5, ln), f.number<double>(toks, 6, ln), f.number<double>(toks, 7, ln)};
    v.camera_id = f.number<int>(toks, 8, ln);
    if (toks.size() < 10) f.fail(ln, static_cast<int>(lines[li].size()) + 1, "missing image name");
    // Names may contain spaces; take the rest of the line.
    v.name = lines[li].substr(static_cast<std::size_t>(toks[9].column - 1));
    while (!v.name.empty() && (v.name.back() == '\r' || v.name.back() == ' ')) v.name.pop_back();
    if (norm(v.qvec) == 0.0) f.fail(ln, toks[1].column, "zero quaternion");
    // The following line lists 2D observations (possibly empty); only its
    // syntax is checked.
    ++li;
    if (li < lines.size()) {
      const auto pts = tokenize(lines[li]);
      if (pts.size() % 3 != 0) f.fail(static_cast<int>(li) + 1, 1, "POINTS2D entries must come in triples");
      for (std::size_t k = 0; k < pts.size(); ++k) {
        if (k % 3 == 2) f.number<long long>(pts, k, static_cast<int>(li) + 1);
        else f.number<double>(pts, k, static_cast<int>(li) + 1);
      }
      ++li;
    }
    scene.views.push_back(v);
  }
}

void parse_points_text(const fs::path& path, SparseScene& scene) {
  TextFile f(path);
  for (std::size_t li = 0; li < f.lines().size(); ++li) {
    const std::string& line = f.lines()[li];
    if (is_comment_or_blank(line)) continue;
    const int ln = static_cast<int>(li) + 1;
    const auto toks = tokenize(line);
    SeedPoint p;
    p.id = f.number<std::uint64_t>(toks, 0, ln);
    p.position = {f.number<double>(toks, 1, ln), f.number<double>(toks, 2, ln), f.number<double>(toks, 3, ln)};
    for (int c = 0; c < 3; ++c) {
      const int value = f.number<int>(toks, 4 + c, ln);
      if (value < 0 || value > 255) f.fail(ln, toks[4 + c].column, "color out of range");
      p.rgb[c] = static_cast<std::uint8_t>(value);
    }
    p.error = f.number<double>(toks, 7, ln);
    if ((toks.size() - 8) % 2 != 0) f.fail(ln, toks.back().column, "TRACK entries must come in pairs");
    for (std::size_t k = 8; k < toks.size(); ++k) f.number<long long>(toks, k, ln);
    p.radiance = mean_radiance(p.rgb);
    scene.points.push_back(p);
  }
}

// ---- binary ----

void parse_cameras_binary(const fs::path& path, SparseScene& scene) {
  const auto bytes = detail::read_file_bytes(path);
  detail::ByteReader r(bytes, path.string());
  const auto n = r.get<std::uint64_t>();
  for (std::uint64_t i = 0; i < n; ++i) {
    const std::size_t at = r.offset();
    const int id = r.get<std::int32_t>();
    const std::size_t model_at = r.offset();
    const int model_id = r.get<std::int32_t>();
    if (model_id != kSimplePinholeId && model_id != kPinholeId)
      r.fail(std::string("unsupported camera model ") + model_name(model_id), model_at);
    const std::string model = model_name(model_id);
    const auto w = r.get<std::uint64_t>();
    const auto h = r.get<std::uint64_t>();
    std::vector<double> params(param_count(model));
    for (double& p : params) p = r.get<double>();
    if (!scene.cameras.emplace(id, make_camera(model, w, h, params)).second)
      r.fail("duplicate camera id " + std::to_string(id), at);
  }
  if (!r.done()) r.fail("trailing data");
}

void parse_images_binary(const fs::path& path, SparseScene& scene) {
  const auto bytes = detail::read_file_bytes(path);
  detail::ByteReader r(bytes, path.string());
  const auto n = r.get<std::uint64_t>();
  for (std::uint64_t i = 0; i < n; ++i) {
    SparseView v;
    v.image_id = r.get<std::int32_t>();
    const std::size_t q_at = r.offset();
    v.qvec.w = r.get<double>();
    v.qvec.x = r.get<double>();
    v.qvec.y = r.get<double>();
    v.qvec.z = r.get<double>();
    if (norm(v.qvec) == 0.0) r.fail("zero quaternion", q_at);
    v.tvec.x = r.get<double>();
    v.tvec.y = r.get<double>();
    v.tvec.z = r.get<double>();
    v.camera_id = r.get<std::int32_t>();
    v.name = r.get_cstring();
    const std::size_t np_at = r.offset();
    const auto np = r.get<std::uint64_t>();
    if (np > r.remaining() / 24) r.fail("POINTS2D count exceeds data", np_at);
    r.get_bytes(static_cast<std::size_t>(np) * 24);
    scene.views.push_back(v);
  }
  if (!r.done()) r.fail("trailing data");
}

void parse_points_binary(const fs::path& path, SparseScene& scene) {
  const auto bytes = detail::read_file_bytes(path);
  detail::ByteReader r(bytes, path.string());
  const auto n = r.get<std::uint64_t>();
  for (std::uint64_t i = 0; i < n; ++i) {
    SeedPoint p;
    p.id = r.get<std::uint64_t>();
    p.position.x = r.get<double>();
    p.position.y = r.get<double>();
    p.position.z = r.get<double>();
    for (auto& c : p.rgb) c = r.get<std::uint8_t>();
    p.error = r.get<double>();
    const std::size_t t_at = r.offset();
    const auto track = r.get<std::uint64_t>();
    if (track > r.remaining() / 8) r.fail("TRACK length exceeds data", t_at);
    r.get_bytes(static_cast<std::size_t>(track) * 8);
    p.radiance = mean_radiance(p.rgb);
    scene.points.push_back(p);
  }
  if (!r.done()) r.fail("trailing data");
}

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

int model_id(const std::string& model) { return model == "SIMPLE_PINHOLE" ? kSimplePinholeId : kPinholeId; }

std::vector<double> camera_params(const SparseCamera& c) {
  if (c.model == "SIMPLE_PINHOLE") return {c.intrinsics.fx, c.intrinsics.cx, c.intrinsics.cy};
  return {c.intrinsics.fx, c.intrinsics.fy, c.intrinsics.cx, c.intrinsics.cy};
}

void write_text_file(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write " + path.string());
  out << text;
  if (!out) throw DataError("failed writing " + path.string());
}

}  // namespace

Camera SparseScene::camera(const SparseView& view) const {
  const auto it = cameras.find(view.camera_id);
  if (it == cameras.end()) throw DataError("unknown camera id " + std::to_string(view.camera_id));
  Camera c = it->second.intrinsics;
  c.rotation = rotation_matrix(normalized(view.qvec));
  c.translation = view.tvec;
  return c;
}

SparseScene parse_colmap_text(const fs::path& dir) {
  SparseScene s;
  parse_cameras_text(dir / "cameras.txt", s);
  parse_images_text(dir / "images.txt", s);
  parse_points_text(dir / "points3D.txt", s);
  finalize(s, dir.string());
  return s;
}

SparseScene parse_colmap_binary(const fs::path& dir) {
  SparseScene s;
  parse_cameras_binary(dir / "cameras.bin", s);
  parse_images_binary(dir / "images.bin", s);
  parse_points_binary(dir / "points3D.bin", s);
  finalize(s, dir.string());
  return s;
}

SparseScene parse_colmap(const fs::path& dir) {
  if (fs::exists(dir / "cameras.bin")) return parse_colmap_binary(dir);
  if (fs::exists(dir / "cameras.txt")) return parse_colmap_text(dir);
  throw DataError("no COLMAP model in " + dir.string());
}

fs::path find_sparse_model(const fs::path& root) {
  for (const fs::path& p : {root / "sparse" / "0", root / "sparse", root})
    if (fs::exists(p / "cameras.bin") || fs::exists(p / "cameras.txt")) return p;
  throw DataError("no sparse model (cameras.txt/.bin) under " + root.string());
}

void write_colmap_text(const SparseScene& scene, const fs::path& dir) {
  fs::create_directories(dir);
  std::string cams = "# Camera list with one line of data per camera:\n#   CAMERA_ID, MODEL, WIDTH, HEIGHT, PARAMS[]\n";
  for (const auto& [id, c] : scene.cameras) {
    cams += std::to_string(id) + " " + c.model + " " + std::to_string(c.intrinsics.width) + " " +
            std::to_string(c.intrinsics.height);
    for (double p : camera_params(c)) cams += " " + fmt(p);
    cams += "\n";
  }
  write_text_file(dir / "cameras.txt", cams);

  std::string imgs = "# Image list with two lines of data per image:\n"
                     "#   IMAGE_ID, QW, QX, QY, QZ, TX, TY, TZ, CAMERA_ID, NAME\n#   POINTS2D[] as (X, Y, POINT3D_ID)\n";
  for (const auto& v : scene.views) {
    imgs += std::to_string(v.image_id) + " " + fmt(v.qvec.w) + " " + fmt(v.qvec.x) + " " + fmt(v.qvec.y) + " " +
            fmt(v.qvec.z) + " " + fmt(v.tvec.x) + " " + fmt(v.tvec.y) + " " + fmt(v.tvec.z) + " " +
            std::to_string(v.camera_id) + " " + v.name + "\n\n";
  }
  write_text_file(dir / "images.txt", imgs);

  std::string pts = "# 3D point list with one line of data per point:\n"
                    "#   POINT3D_ID, X, Y, Z, R, G, B, ERROR, TRACK[] as (IMAGE_ID, POINT2D_IDX)\n";
  for (const auto& p : scene.points) {
    pts += std::to_string(p.id) + " " + fmt(p.position.x) + " " + fmt(p.position.y) + " " + fmt(p.position.z) + " " +
           std::to_string(p.rgb[0]) + " " + std::to_string(p.rgb[1]) + " " + std::to_string(p.rgb[2]) + " " +
           fmt(p.error) + "\n";
  }
  write_text_file(dir / "points3D.txt", pts);
}

void write_colmap_binary(const SparseScene& scene, const fs::path& dir) {
  fs::create_directories(dir);
  {
    detail::ByteWriter w;
    w.put<std::uint64_t>(scene.cameras.size());
    for (const auto& [id, c] : scene.cameras) {
      w.put<std::int32_t>(id);
      w.put<std::int32_t>(model_id(c.model));
      w.put<std::uint64_t>(static_cast<std::uint64_t>(c.intrinsics.width));
      w.put<std::uint64_t>(static_cast<std::uint64_t>(c.intrinsics.height));
      for (double p : camera_params(c)) w.put(p);
    }
    detail::write_file_bytes(dir / "cameras.bin", w.bytes());
  }
  {
    detail::ByteWriter w;
    w.put<std::uint64_t>(scene.views.size());
    for (const auto& v : scene.views) {
      w.put<std::int32_t>(v.image_id);
      for (double q : {v.qvec.w, v.qvec.x, v.qvec.y, v.qvec.z}) w.put(q);
      for (double t : {v.tvec.x, v.tvec.y, v.tvec.z}) w.put(t);
      w.put<std::int32_t>(v.camera_id);
      w.put_cstring(v.name);
      w.put<std::uint64_t>(0);
    }
    detail::write_file_bytes(dir / "images.bin", w.bytes());
  }
  {
    detail::ByteWriter w;
    w.put<std::uint64_t>(scene.points.size());
    for (const auto& p : scene.points) {
      w.put<std::uint64_t>(p.id);
      for (double x : {p.position.x, p.position.y, p.position.z}) w.put(x);
      for (auto c : p.rgb) w.put<std::uint8_t>(c);
      w.put(p.error);
      w.put<std::uint64_t>(0);
    }
    detail::write_file_bytes(dir / "points3D.bin", w.bytes());
  }
}

}  // namespace thermalsplat
