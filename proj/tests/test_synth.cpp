#include <doctest.h>

#include <cmath>
#include <fstream>
#include <iterator>

#include "support.hpp"
#include "thermalsplat/colmap.hpp"
#include "thermalsplat/error.hpp"
#include "thermalsplat/image_io.hpp"
#include "thermalsplat/synth.hpp"
#include "thermalsplat/verify/criteria.hpp"

using namespace thermalsplat;
namespace fs = std::filesystem;

namespace {

const char* kSpec = R"(
[scene]
width = 24
height = 24
grid = 48
points = 50
supersample = 1

[emitter]
shape = square
x = 0
y = 0
radius = 0.4
temperature = 1.0

[orbit]
views = 6
radius = 3
height = 2.5
)";

std::string read_all(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

std::string usage_error(const std::string& text) {
  try {
    parse_synth_spec(text, "s.spec");
  } catch (const UsageError& e) {
    return e.what();
  }
  return "";
}

// Mean gradient magnitude over pixels near emitter edges.
double edge_sharpness(const RadianceImage& img) {
  double s = 0.0;
  int n = 0;
  for (int y = 1; y + 1 < img.height; ++y)
    for (int x = 1; x + 1 < img.width; ++x) {
      const double gx = img.at(x + 1, y) - img.at(x - 1, y), gy = img.at(x, y + 1) - img.at(x, y - 1);
      const double g = std::hypot(gx, gy);
      if (g > 0.05) {
        s += g;
        ++n;
      }
    }
  return n ? s / n : 0.0;
}

}  // namespace

TEST_CASE("spec parsing") {
  const SynthSpec s = parse_synth_spec(kSpec);
  CHECK(s.width == 24);
  CHECK(s.views == 6);
  REQUIRE(s.emitters.size() == 1);
  CHECK(s.emitters[0].shape == EmitterSpec::Shape::square);
  CHECK(usage_error("[emitter]\n").find("missing section [orbit]") != std::string::npos);
  CHECK(usage_error("[orbit]\nviews = 3\n").find("missing section [emitter]") != std::string::npos);
  CHECK(usage_error("[orbit]\nspeed = 3\n").find("s.spec:2") != std::string::npos);
  CHECK(usage_error("[orbit]\nviews = many\n").find("s.spec:2") != std::string::npos);
  CHECK(usage_error("[weather]\n").find("s.spec:1") != std::string::npos);
}

TEST_CASE("bundled desk scene matches the data file") {
  std::ifstream in(std::string(THERMALSPLAT_DATA_DIR) + "/desk_scene.spec");
  REQUIRE(in);
  const std::string file((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  CHECK(file == verify::desk_scene_spec_text());
  const SynthSpec s = parse_synth_spec(file);
  CHECK(s.views == 24);
  CHECK(s.image_time == 0.5);
}

TEST_CASE("same spec and seed give byte-identical datasets") {
  const SynthSpec s = parse_synth_spec(kSpec);
  const fs::path a = test::scratch("synth_a"), b = test::scratch("synth_b");
  synth_scene_generate(s, 5, a);
  synth_scene_generate(s, 5, b);
  int files = 0;
  for (const auto& e : fs::recursive_directory_iterator(a)) {
    if (!e.is_regular_file()) continue;
    ++files;
    CHECK(read_all(e.path()) == read_all(b / fs::relative(e.path(), a)));
  }
  CHECK(files >= 6 + 6 + 2);
  const SparseScene scene = parse_colmap(a / "sparse" / "0");
  CHECK(scene.views.size() == 6);
  CHECK(scene.points.size() == 50);
  CHECK(parse_colmap_text(a / "sparse" / "0") == parse_colmap_binary(a / "sparse" / "0"));
}

TEST_CASE("without imaging effects a flat emitter looks the same from every view") {
  SynthSpec s = parse_synth_spec(kSpec);
  s.emitters[0].radius = 2.0;  // covers the whole plane
  s.ambient = 0.0;
  const TemperatureField f = conducted_field(s, 0);
  for (const SynthView& v : synth_cameras(s)) {
    CHECK(v.factor == 1.0);
    const RadianceImage img = render_plane(f, s, v.camera, v.factor);
    // The plane center projects to the image center in every view.
    CHECK(img.at(12, 12) == doctest::Approx(1.0));
  }
}

TEST_CASE("attenuation follows exp(a theta + b t)") {
  SynthSpec s = parse_synth_spec(kSpec);
  s.atten_a = -0.5;
  s.atten_b = 0.25;
  for (const SynthView& v : synth_cameras(s)) CHECK(v.factor == doctest::Approx(std::exp(-0.5 * v.theta + 0.25 * v.time_norm)));
}

TEST_CASE("conduction lowers edge sharpness") {
  SynthSpec s = parse_synth_spec(kSpec);
  const std::vector<SynthView> cams = synth_cameras(s);
  const RadianceImage sharp = render_plane(conducted_field(s, 0), s, cams[0].camera, 1.0);
  s.diffusion_time = 0.005;
  const RadianceImage soft = render_plane(conducted_field(s, 0), s, cams[0].camera, 1.0);
  CHECK(edge_sharpness(soft) < edge_sharpness(sharp));
}

TEST_CASE("orbit in the scene plane is rejected") {
  SynthSpec s = parse_synth_spec(kSpec);
  s.orbit_height = 0.0;
  CHECK_THROWS_AS(synth_cameras(s), DataError);
}
