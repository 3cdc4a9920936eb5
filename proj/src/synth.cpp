#include "thermalsplat/synth.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <map>
#include <numbers>
#include <sstream>

#include "thermalsplat/colmap.hpp"
#include "thermalsplat/dataset.hpp"
#include "thermalsplat/error.hpp"
#include "thermalsplat/image_io.hpp"
#include "thermalsplat/parallel.hpp"
#include "thermalsplat/rng.hpp"

namespace thermalsplat {
namespace fs = std::filesystem;

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

double to_double(const std::string& v, const std::function<void(const std::string&)>& fail) {
  try {
    std::size_t used = 0;
    const double d = std::stod(v, &used);
    if (used != v.size() || !std::isfinite(d)) fail("invalid number '" + v + "'");
    return d;
  } catch (const std::logic_error&) {
    fail("invalid number '" + v + "'");
  }
  return 0.0;
}

int to_int(const std::string& v, const std::function<void(const std::string&)>& fail) {
  const double d = to_double(v, fail);
  if (d != std::floor(d) || std::abs(d) > 1e9) fail("expected an integer, got '" + v + "'");
  return static_cast<int>(d);
}

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace

SynthSpec parse_synth_spec(const std::string& text, const std::string& source) {
  SynthSpec spec;
  std::istringstream in(text);
  std::string line, section;
  int lineno = 0;
  std::map<std::string, int> seen;
  const std::vector<std::string> known{"scene", "emitter", "orbit", "attenuation", "diffusion"};

  while (std::getline(in, line)) {
    ++lineno;
    auto fail = [&](const std::string& why) -> void {
      throw UsageError(source + ":" + std::to_string(lineno) + ": " + why);
    };
    const std::string t = trim(line.substr(0, line.find('#')));
    if (t.empty()) continue;
    if (t.front() == '[') {
      if (t.back() != ']') fail("malformed section header '" + t + "'");
      section = trim(t.substr(1, t.size() - 2));
      if (std::find(known.begin(), known.end(), section) == known.end()) fail("unknown section [" + section + "]");
      if (section != "emitter" && seen[section] > 0) fail("duplicate section [" + section + "]");
      ++seen[section];
      if (section == "emitter") spec.emitters.emplace_back();
      continue;
    }
    const auto eq = t.find('=');
    if (eq == std::string::npos) fail("expected key = value, got '" + t + "'");
    if (section.empty()) fail("key outside of any section");
    const std::string key = trim(t.substr(0, eq));
    const std::string value = trim(t.substr(eq + 1));
    auto num = [&] { return to_double(value, fail); };
    auto integer = [&] { return to_int(value, fail); };
    auto unknown = [&] { fail("unknown key '" + key + "' in [" + section + "]"); };

    if (section == "scene") {
      if (key == "width") spec.width = integer();
      else if (key == "height") spec.height = integer();
      else if (key == "plane_size") spec.plane_size = num();
      else if (key == "grid") spec.grid = integer();
      else if (key == "ambient") spec.ambient = num();
      else if (key == "noise") spec.noise = num();
      else if (key == "points") spec.points = integer();
      else if (key == "supersample") spec.supersample = integer();
      else unknown();
    } else if (section == "emitter") {
      EmitterSpec& e = spec.emitters.back();
      if (key == "x") e.x = num();
      else if (key == "y") e.y = num();
      else if (key == "radius") e.radius = num();
      else if (key == "temperature") e.temperature = num();
      else if (key == "shape") {
        if (value == "disk") e.shape = EmitterSpec::Shape::disk;
        else if (value == "square") e.shape = EmitterSpec::Shape::square;
        else fail("unknown emitter shape '" + value + "' (disk or square)");
      } else unknown();
    } else if (section == "orbit") {
      if (key == "views") spec.views = integer();
      else if (key == "radius") spec.orbit_radius = num();
      else if (key == "height") spec.orbit_height = num();
      else if (key == "height_amplitude") spec.height_amplitude = num();
      else if (key == "arc") spec.arc_degrees = num();
      else if (key == "fov") spec.fov_degrees = num();
      else unknown();
    } else if (section == "attenuation") {
      if (key == "a") spec.atten_a = num();
      else if (key == "b") spec.atten_b = num();
      else unknown();
    } else if (section == "diffusion") {
      if (key == "alpha") spec.alpha = num();
      else if (key == "time") spec.diffusion_time = num();
      else if (key == "image_time") spec.image_time = num();
      else unknown();
    }
  }

  if (!seen.contains("orbit")) throw UsageError(source + ": missing section [orbit]");
  if (spec.emitters.empty()) throw UsageError(source + ": missing section [emitter]");
  auto bad = [&](const std::string& why) { throw UsageError(source + ": " + why); };
  if (spec.width < 2 || spec.height < 2) bad("image size must be at least 2x2");
  if (spec.grid < 3) bad("grid must be at least 3");
  if (!(spec.plane_size > 0.0)) bad("plane_size must be positive");
  if (spec.points < 1) bad("points must be positive");
  if (spec.supersample < 1) bad("supersample must be positive");
  if (spec.views < 1) bad("orbit views must be positive");
  if (!(spec.orbit_radius >= 0.0)) bad("orbit radius must be non-negative");
  if (!(spec.fov_degrees > 0.0 && spec.fov_degrees < 170.0)) bad("fov must be in (0, 170) degrees");
  if (!(spec.alpha > 0.0) || spec.diffusion_time < 0.0 || spec.image_time < 0.0)
    bad("diffusion needs alpha > 0 and times >= 0");
  for (const auto& e : spec.emitters)
    if (!(e.radius > 0.0)) bad("emitter radius must be positive");
  return spec;
}

SynthSpec load_synth_spec(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw UsageError("cannot read spec file " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_synth_spec(ss.str(), path.string());
}

TemperatureField emitter_field(const SynthSpec& spec, std::uint64_t seed) {
  const double dx = spec.plane_size / spec.grid;
  TemperatureField f(spec.grid, spec.grid, dx, Boundary::replicate, spec.ambient);
  Rng rng(seed ^ 0x5eedf1e1dULL);
  for (int y = 0; y < spec.grid; ++y)
    for (int x = 0; x < spec.grid; ++x) {
      const double px = -0.5 * spec.plane_size + (x + 0.5) * dx;
      const double py = -0.5 * spec.plane_size + (y + 0.5) * dx;
      double t = spec.ambient;
      for (const auto& e : spec.emitters) {
        const double ddx = px - e.x, ddy = py - e.y;
        const bool inside = e.shape == EmitterSpec::Shape::disk
                                ? ddx * ddx + ddy * ddy <= e.radius * e.radius
                                : std::abs(ddx) <= e.radius && std::abs(ddy) <= e.radius;
        if (inside) t = e.temperature;
      }
      if (spec.noise > 0.0) t += spec.noise * (rng.uniform() - 0.5);
      f.at(x, y) = t;
    }
  return f;
}

TemperatureField conducted_field(const SynthSpec& spec, std::uint64_t seed) {
  TemperatureField f = emitter_field(spec, seed);
  if (spec.diffusion_time <= 0.0) return f;
  return heat_simulate(f, ConductionSpec::for_duration(spec.alpha, spec.diffusion_time, f.dx));
}

RadianceImage conduct_image(const RadianceImage& image, const SynthSpec& spec) {
  if (spec.image_time <= 0.0) return image;
  TemperatureField f(image.width, image.height, 1.0, Boundary::replicate);
  f.data = image.data;
  f = heat_simulate(f, ConductionSpec::for_duration(spec.alpha, spec.image_time, 1.0));
  RadianceImage out(image.width, image.height);
  out.data = std::move(f.data);
  return out;
}

namespace {

double sample_field(const TemperatureField& f, double plane_size, double px, double py) {
  // Cell centers sit at -size/2 + (i + 0.5) dx.
  const double gx = (px + 0.5 * plane_size) / f.dx - 0.5;
  const double gy = (py + 0.5 * plane_size) / f.dx - 0.5;
  const double cx = std::clamp(gx, 0.0, static_cast<double>(f.width - 1));
  const double cy = std::clamp(gy, 0.0, static_cast<double>(f.height - 1));
  const int x0 = std::min(static_cast<int>(cx), f.width - 2);
  const int y0 = std::min(static_cast<int>(cy), f.height - 2);
  const double tx = cx - x0, ty = cy - y0;
  const double a = f.at(x0, y0) * (1 - tx) + f.at(x0 + 1, y0) * tx;
  const double b = f.at(x0, y0 + 1) * (1 - tx) + f.at(x0 + 1, y0 + 1) * tx;
  return a * (1 - ty) + b * ty;
}

Camera look_at(const Vec3& eye, const Vec3& target, int width, int height, double fov_degrees) {
  const Vec3 forward = normalized(target - eye);
  Vec3 up{0, 0, 1};
  if (norm(cross(forward, up)) < 1e-9) up = {0, 1, 0};
  const Vec3 right = normalized(cross(forward, up));
  const Vec3 down = cross(forward, right);
  Camera c;
  c.width = width;
  c.height = height;
  c.fx = c.fy = 0.5 * width / std::tan(0.5 * fov_degrees * std::numbers::pi / 180.0);
  c.cx = 0.5 * width;
  c.cy = 0.5 * height;
  c.rotation = {{right.x, right.y, right.z, down.x, down.y, down.z, forward.x, forward.y, forward.z}};
  c.translation = -(c.rotation * eye);
  return c;
}

}  // namespace

std::vector<SynthView> synth_cameras(const SynthSpec& spec) {
  std::vector<SynthView> views(static_cast<std::size_t>(spec.views));
  bool off_plane = false;
  for (int i = 0; i < spec.views; ++i) {
    const double t = normalized_time(i, spec.views);
    const double phase = spec.views > 1 ? static_cast<double>(i) / spec.views : 0.0;
    const double az = spec.arc_degrees * std::numbers::pi / 180.0 * phase;
    const double h = spec.orbit_height + spec.height_amplitude * std::sin(2.0 * std::numbers::pi * phase);
    const Vec3 eye{spec.orbit_radius * std::cos(az), spec.orbit_radius * std::sin(az), h};
    if (std::abs(h) > 1e-9) off_plane = true;
    SynthView& v = views[static_cast<std::size_t>(i)];
    v.camera = look_at(eye, {0, 0, 0}, spec.width, spec.height, spec.fov_degrees);
    v.time_norm = t;
    const Vec3 forward{v.camera.rotation(2, 0), v.camera.rotation(2, 1), v.camera.rotation(2, 2)};
    v.theta = std::acos(std::clamp(std::abs(forward.z), 0.0, 1.0));
    v.factor = std::exp(spec.atten_a * v.theta + spec.atten_b * t);
  }
  if (!off_plane) throw DataError("degenerate camera orbit: every view lies in the scene plane");
  return views;
}

RadianceImage render_plane(const TemperatureField& field, const SynthSpec& spec, const Camera& camera, double factor) {
  RadianceImage img(camera.width, camera.height);
  const Vec3 eye = camera.center();
  const Mat3 rt = camera.rotation.transposed();
  const int ss = spec.supersample;
  const double half = 0.5 * spec.plane_size;
  parallel_for(0, static_cast<std::size_t>(camera.height), [&](std::size_t row) {
    const int py = static_cast<int>(row);
    for (int px = 0; px < camera.width; ++px) {
      double sum = 0.0;
      for (int sy = 0; sy < ss; ++sy)
        for (int sx = 0; sx < ss; ++sx) {
          const double u = px + (sx + 0.5) / ss;
          const double v = py + (sy + 0.5) / ss;
          const Vec3 d = rt * Vec3{(u - camera.cx) / camera.fx, (v - camera.cy) / camera.fy, 1.0};
          if (d.z == 0.0) continue;
          const double s = -eye.z / d.z;
          if (!(s > 0.0)) continue;
          const double hx = eye.x + s * d.x, hy = eye.y + s * d.y;
          if (std::abs(hx) > half || std::abs(hy) > half) continue;
          sum += sample_field(field, spec.plane_size, hx, hy);
        }
      img.at(px, py) = std::clamp(factor * sum / (ss * ss), 0.0, 1.0);
    }
  });
  return img;
}

void synth_scene_generate(const SynthSpec& spec, std::uint64_t seed, const fs::path& out) {
  std::error_code ec;
  fs::create_directories(out / "images", ec);
  if (ec) throw DataError("cannot create output directory " + out.string() + ": " + ec.message());
  const TemperatureField field = conducted_field(spec, seed);
  std::vector<SynthView> views = synth_cameras(spec);

  SparseScene scene;
  SparseCamera cam;
  cam.model = "PINHOLE";
  cam.intrinsics = views.front().camera;
  cam.intrinsics.rotation = Mat3::identity();
  cam.intrinsics.translation = {};
  scene.cameras[1] = cam;

  for (std::size_t i = 0; i < views.size(); ++i) {
    SynthView& v = views[i];
    char name[32];
    std::snprintf(name, sizeof name, "frame_%04zu.png", i);
    SparseView sv;
    sv.image_id = static_cast<int>(i) + 1;
    sv.camera_id = 1;
    sv.name = name;
    sv.qvec = quaternion_from_matrix(v.camera.rotation);
    sv.tvec = v.camera.translation;
    sv.frame_index = static_cast<int>(i);
    scene.views.push_back(sv);
    // Render through the pose as it will be read back.
    v.camera = scene.camera(sv);
    v.image = conduct_image(render_plane(field, spec, v.camera, v.factor), spec);
    save_image(v.image, out / "images" / name);
  }

  Rng rng(seed);
  const double half = 0.5 * spec.plane_size;
  for (int i = 0; i < spec.points; ++i) {
    Vec3 p;
    if (i % 2 == 1) {
      const EmitterSpec& e = spec.emitters[rng.below(spec.emitters.size())];
      if (e.shape == EmitterSpec::Shape::disk) {
        const double r = e.radius * std::sqrt(rng.uniform());
        const double a = 2.0 * std::numbers::pi * rng.uniform();
        p = {e.x + r * std::cos(a), e.y + r * std::sin(a), 0.0};
      } else {
        p = {e.x + rng.uniform(-e.radius, e.radius), e.y + rng.uniform(-e.radius, e.radius), 0.0};
      }
      p.x = std::clamp(p.x, -half, half);
      p.y = std::clamp(p.y, -half, half);
    } else {
      p = {rng.uniform(-half, half), rng.uniform(-half, half), 0.0};
    }
    SeedPoint sp;
    sp.id = static_cast<std::uint64_t>(i) + 1;
    sp.position = p;
    const double temp = std::clamp(sample_field(field, spec.plane_size, p.x, p.y), 0.0, 1.0);
    const auto g = static_cast<std::uint8_t>(std::floor(temp * 255.0 + 0.5));
    sp.rgb = {g, g, g};
    sp.radiance = g / 255.0;
    scene.points.push_back(sp);
  }
  write_colmap_text(scene, out / "sparse" / "0");
  write_colmap_binary(scene, out / "sparse" / "0");

  RadianceImage field_img(field.width, field.height);
  field_img.data = field.data;
  for (double& x : field_img.data) x = std::clamp(x, 0.0, 1.0);
  save_image16(field_img, out / "field.png");

  std::ofstream m(out / "manifest.txt", std::ios::binary);
  if (!m) throw DataError("cannot write " + (out / "manifest.txt").string());
  m << "# synthetic thermal scene\nseed=" << seed << "\nviews=" << views.size() << "\nwidth=" << spec.width
    << "\nheight=" << spec.height << "\nplane_size=" << fmt(spec.plane_size) << "\ngrid=" << spec.grid
    << "\nambient=" << fmt(spec.ambient) << "\natten_a=" << fmt(spec.atten_a) << "\natten_b=" << fmt(spec.atten_b)
    << "\nalpha=" << fmt(spec.alpha) << "\ndiffusion_time=" << fmt(spec.diffusion_time)
    << "\nimage_time=" << fmt(spec.image_time)
    << "\nemitters=" << spec.emitters.size() << "\n";
  for (std::size_t i = 0; i < spec.emitters.size(); ++i) {
    const auto& e = spec.emitters[i];
    m << "emitter " << i << " shape=" << (e.shape == EmitterSpec::Shape::disk ? "disk" : "square")
      << " x=" << fmt(e.x) << " y=" << fmt(e.y) << " radius=" << fmt(e.radius)
      << " temperature=" << fmt(e.temperature) << "\n";
  }
  for (std::size_t i = 0; i < views.size(); ++i) {
    const Vec3 c = views[i].camera.center();
    m << "view " << i << " name=" << scene.views[i].name << " time=" << fmt(views[i].time_norm)
      << " theta=" << fmt(views[i].theta) << " factor=" << fmt(views[i].factor) << " center=" << fmt(c.x) << ","
      << fmt(c.y) << "," << fmt(c.z) << "\n";
  }
}

}  // namespace thermalsplat
