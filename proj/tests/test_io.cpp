#include <doctest.h>

#include <fstream>
#include <string>

#include "support.hpp"
#include "thermalsplat/camera_path.hpp"
#include "thermalsplat/checkpoint.hpp"
#include "thermalsplat/colmap.hpp"
#include "thermalsplat/dataset.hpp"
#include "thermalsplat/error.hpp"
#include "thermalsplat/image_io.hpp"
#include "thermalsplat/synth.hpp"

using namespace thermalsplat;
namespace fs = std::filesystem;

namespace {

void write(const fs::path& p, const std::string& s) {
  std::ofstream out(p, std::ios::binary);
  out << s;
}

std::string error_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const DataError& e) {
    return e.what();
  }
  return "";
}

void minimal_text_model(const fs::path& dir, const std::string& cameras) {
  fs::create_directories(dir);
  write(dir / "cameras.txt", cameras);
  write(dir / "images.txt", "1 1 0 0 0 0 0 0 1 a.png\n\n");
  write(dir / "points3D.txt", "1 0 0 0 1 2 3 0.5\n");
}

}  // namespace

TEST_CASE("COLMAP text errors carry file, line and column") {
  const fs::path dir = test::scratch("colmap_errors");
  minimal_text_model(dir, "# header\n1 OPENCV 10 10 5 5 5 5 0 0 0 0\n");
  std::string e = error_of([&] { parse_colmap_text(dir); });
  CHECK(e.find("cameras.txt:2:3") != std::string::npos);
  CHECK(e.find("OPENCV") != std::string::npos);

  minimal_text_model(dir, "1 PINHOLE 10 10 5 x5 5 5\n");
  e = error_of([&] { parse_colmap_text(dir); });
  CHECK(e.find("cameras.txt:1:") != std::string::npos);
  CHECK(e.find("malformed number 'x5'") != std::string::npos);

  minimal_text_model(dir, "2 PINHOLE 10 10 5 5 5 5\n");
  CHECK(error_of([&] { parse_colmap_text(dir); }).find("unknown camera 1") != std::string::npos);

  minimal_text_model(dir, "1 PINHOLE 10 10 5 5 5 5\n");
  write(dir / "points3D.txt", "# none\n");
  CHECK(error_of([&] { parse_colmap_text(dir); }).find("no seed points") != std::string::npos);
}

TEST_CASE("COLMAP binary truncation reports a byte offset") {
  const fs::path dir = test::scratch("colmap_binary_errors");
  SparseScene s;
  SparseCamera cam{"PINHOLE", test::camera(8, 8, 10)};
  s.cameras[1] = cam;
  s.views.push_back({1, 1, "a.png", {1, 0, 0, 0}, {0, 0, 1}, 0});
  SeedPoint p;
  p.id = 1;
  s.points.push_back(p);
  write_colmap_binary(s, dir);
  CHECK(parse_colmap_binary(dir) == s);
  const auto size = fs::file_size(dir / "images.bin");
  fs::resize_file(dir / "images.bin", size - 5);
  const std::string e = error_of([&] { parse_colmap_binary(dir); });
  CHECK(e.find("images.bin") != std::string::npos);
  CHECK(e.find("at byte") != std::string::npos);
}

TEST_CASE("sparse model discovery prefers sparse/0") {
  const fs::path root = test::scratch("discover");
  minimal_text_model(root / "sparse" / "0", "1 PINHOLE 10 10 5 5 5 5\n");
  CHECK(find_sparse_model(root) == root / "sparse" / "0");
  CHECK_THROWS_AS(find_sparse_model(test::scratch("discover_empty")), DataError);
}

TEST_CASE("PNG round trips at 8 and 16 bits") {
  const fs::path dir = test::scratch("png");
  RadianceImage img(7, 5);
  for (std::size_t i = 0; i < img.data.size(); ++i) img.data[i] = static_cast<double>(i) / (img.data.size() - 1);
  save_image(img, dir / "a.png");
  save_image16(img, dir / "b.png");
  const RadianceImage a = load_image(dir / "a.png"), b = load_image(dir / "b.png");
  REQUIRE(a.width == 7);
  REQUIRE(a.height == 5);
  for (std::size_t i = 0; i < img.data.size(); ++i) {
    CHECK(std::abs(a.data[i] - img.data[i]) <= 0.5 / 255 + 1e-12);
    CHECK(std::abs(b.data[i] - img.data[i]) <= 0.5 / 65535 + 1e-12);
  }
  // Re-saving a loaded 8-bit image is lossless.
  save_image(a, dir / "c.png");
  CHECK(load_image(dir / "c.png") == a);
  write(dir / "bad.png", "not a png");
  CHECK_THROWS_AS(load_image(dir / "bad.png"), DataError);
  CHECK_THROWS_AS(load_image(dir / "missing.png"), DataError);
}

TEST_CASE("checkpoint errors") {
  const fs::path dir = test::scratch("ckpt");
  CHECK(error_of([&] { load_checkpoint(dir / "none.ckpt"); }).find("checkpoint not found") != std::string::npos);
  Checkpoint c;
  Gaussian g;
  c.model.cloud.push_back(g);
  auto bytes = encode_checkpoint(c);
  CHECK(decode_checkpoint(bytes) == c);
  auto bad = bytes;
  bad[0] = 'X';
  CHECK(error_of([&] { decode_checkpoint(bad); }).find("bad magic") != std::string::npos);
  auto version = bytes;
  version[8] = 99;
  CHECK(error_of([&] { decode_checkpoint(version); }).find("unsupported checkpoint version 99") != std::string::npos);
  auto cut = bytes;
  cut.resize(bytes.size() - 3);
  CHECK(error_of([&] { decode_checkpoint(cut); }).find("truncated") != std::string::npos);
}

TEST_CASE("camera path parsing") {
  const auto v = parse_camera_path("# comment\nv0 40 40 16 16 32 32 1 0 0 0 0 0 3 0.25\n\nv1 40 41 16 16 32 32 0 1 0 0 0 0 3 1\n");
  REQUIRE(v.size() == 2);
  CHECK(v[0].name == "v0");
  CHECK(v[0].camera.translation.z == 3.0);
  CHECK(v[0].time_norm == 0.25);
  CHECK(v[1].camera.fy == 41.0);
  CHECK(v[1].camera.rotation(1, 1) == doctest::Approx(-1.0));
  CHECK(error_of([] { parse_camera_path("a 1 2 3\n", "p.txt"); }).find("p.txt:1:") != std::string::npos);
  CHECK(error_of([] { parse_camera_path("a 40 40 16 16 32 32 1 0 0 0 0 0 3 2\n"); }).find("time") != std::string::npos);
  CHECK(error_of([] { parse_camera_path("a 40 40 16 16 32 32 0 0 0 0 0 0 3 0\n"); }).find("quaternion") != std::string::npos);
  CHECK_THROWS_AS(parse_camera_path("# empty\n"), DataError);
}

TEST_CASE("dataset loading, split and size mismatch") {
  SynthSpec s;
  s.width = s.height = 12;
  s.grid = 16;
  s.points = 10;
  s.supersample = 1;
  s.views = 9;
  s.emitters.push_back({});
  const fs::path dir = test::scratch("dataset");
  synth_scene_generate(s, 1, dir);
  Dataset ds = load_dataset(dir);
  CHECK(ds.views.size() == 9);
  CHECK(ds.split.test == std::vector<std::size_t>{0, 8});
  CHECK(ds.views[4].time_norm == 0.5);
  CHECK(ds.warnings.empty());

  // Replace one image with a half-size copy: intrinsics follow.
  const std::string name = ds.scene.views[3].name;
  save_image(RadianceImage(6, 6, 0.5), dir / "images" / name);
  ds = load_dataset(dir);
  CHECK(ds.warnings.size() == 1);
  CHECK(ds.views[3].camera.width == 6);
  CHECK(ds.views[3].camera.fx == doctest::Approx(ds.views[2].camera.fx / 2));

  fs::remove(dir / "images" / name);
  CHECK_THROWS_AS(load_dataset(dir), DataError);
}

TEST_CASE("split rule") {
  CHECK(split_train_test(7).test == std::vector<std::size_t>{0});
  CHECK_FALSE(split_train_test(7).warning.empty());
  CHECK(split_train_test(8).test == std::vector<std::size_t>{0});
  CHECK(split_train_test(16).test == std::vector<std::size_t>{0, 8});
  CHECK(split_train_test(17).test == std::vector<std::size_t>{0, 8, 16});
  CHECK(split_train_test(16).train.size() == 14);
  CHECK(normalized_time(3, 7) == 0.5);
  CHECK(normalized_time(0, 1) == 0.0);
}
