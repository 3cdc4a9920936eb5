#include "thermalsplat/verify/criteria.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iterator>
#include <limits>
#include <ostream>
#include <sstream>

#include "thermalsplat/checkpoint.hpp"
#include "thermalsplat/colmap.hpp"
#include "thermalsplat/dataset.hpp"
#include "thermalsplat/heat.hpp"
#include "thermalsplat/losses.hpp"
#include "thermalsplat/pipeline.hpp"
#include "thermalsplat/sh.hpp"
#include "thermalsplat/trainer.hpp"
#include "thermalsplat/verify/gradcheck.hpp"
#include "thermalsplat/verify/oracles.hpp"

namespace thermalsplat::verify {

namespace fs = std::filesystem;

namespace {

class Stopwatch {
 public:
  double seconds() const { return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count(); }

 private:
  std::chrono::steady_clock::time_point start_ = std::chrono::steady_clock::now();
};

std::string num(double v, const char* f = "%.3g") {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

// Collects sub-checks; the criterion passes only if all of them do.
struct Checks {
  bool ok = true;
  std::vector<std::string> parts;

  void add(bool pass, const std::string& what) {
    ok = ok && pass;
    parts.push_back(pass ? what : "FAILED " + what);
  }
  CriterionResult finish(const std::string& name, const Stopwatch& sw) const {
    std::string d;
    for (std::size_t i = 0; i < parts.size(); ++i) d += (i ? "; " : "") + parts[i];
    return {name, ok, d, sw.seconds()};
  }
};

template <typename F>
CriterionResult guarded(const std::string& name, F&& body) {
  const Stopwatch sw;
  try {
    return body(sw);
  } catch (const std::exception& e) {
    return {name, false, std::string("exception: ") + e.what(), sw.seconds()};
  }
}

// ---- heat kernel -----------------------------------------------------------

struct KernelRun {
  double max_error = 0.0;
  double peak = 0.0;
};

// Unit mass on the centre cell of an odd periodic grid, diffused to `time`
// at ratio r, compared with the analytic kernel at every cell centre.
KernelRun kernel_error(double dx, double span, double alpha, double time, double r) {
  int n = static_cast<int>(std::lround(span / dx));
  if (n % 2 == 0) ++n;
  const int steps = static_cast<int>(std::lround(time * alpha / (r * dx * dx)));
  const double dt = time / steps;
  TemperatureField f(n, n, dx, Boundary::periodic);
  const int c = n / 2;
  f.at(c, c) = 1.0 / (dx * dx);
  const TemperatureField out = heat_simulate(f, ConductionSpec(alpha, dt, steps, dx));
  KernelRun k;
  for (int y = 0; y < n; ++y)
    for (int x = 0; x < n; ++x) {
      const double px = (x - c) * dx, py = (y - c) * dx;
      const double exact = heat_kernel(alpha, time, px * px + py * py);
      k.max_error = std::max(k.max_error, std::abs(out.at(x, y) - exact));
      k.peak = std::max(k.peak, exact);
    }
  return k;
}

// ---- scenes ----------------------------------------------------------------

Camera square_camera(int size, double focal) {
  Camera cam;
  cam.fx = cam.fy = focal;
  cam.cx = cam.cy = 0.5 * size;
  cam.width = cam.height = size;
  return cam;
}

GaussianCloud random_cloud(Rng& rng, int count, int sh_degree) {
  GaussianCloud cloud;
  cloud.sh_degree_active = sh_degree;
  for (int i = 0; i < count; ++i) {
    Gaussian g;
    const double z = rng.uniform(2.0, 6.0);
    g.position = {rng.uniform(-0.5, 0.5) * z, rng.uniform(-0.5, 0.5) * z, z};
    for (int a = 0; a < 3; ++a) g.log_scale[a] = std::log(rng.uniform(0.03, 0.3));
    g.rotation = normalized(Quat{rng.normal(), rng.normal(), rng.normal(), rng.normal()});
    g.opacity_raw = logit(rng.uniform(0.05, 0.95));
    for (int k = 0; k < sh_coeff_count(sh_degree); ++k) g.sh[k] = rng.uniform(-0.5, 0.5);
    cloud.push_back(g);
  }
  return cloud;
}

// ---- COLMAP fixture --------------------------------------------------------

const char* kCamerasTxt =
    "# Camera list with one line of data per camera:\n"
    "#   CAMERA_ID, MODEL, WIDTH, HEIGHT, PARAMS[]\n"
    "1 PINHOLE 64 48 52.5 51.25 31.5 23.75\n"
    "2 SIMPLE_PINHOLE 32 32 40 16 16.5\n";

const char* kImagesTxt =
    "# Image list with two lines of data per image:\n"
    "2 0.5 0.5 -0.5 0.5 0.25 -1.5 3 2 view_b.png\n"
    "10.5 20.25 7\n"
    "1 1 0 0 0 0.125 0 4.5 1 view_a.png\n"
    "\n";

const char* kPointsTxt =
    "# 3D point list\n"
    "7 0.5 -0.25 1.75 200 100 0 0.5 1 0 2 0\n"
    "3 -1 2 0.0625 10 20 30 1.25\n";

SparseScene expected_fixture() {
  SparseScene s;
  SparseCamera a{"PINHOLE", {}};
  a.intrinsics.fx = 52.5;
  a.intrinsics.fy = 51.25;
  a.intrinsics.cx = 31.5;
  a.intrinsics.cy = 23.75;
  a.intrinsics.width = 64;
  a.intrinsics.height = 48;
  SparseCamera b{"SIMPLE_PINHOLE", {}};
  b.intrinsics.fx = b.intrinsics.fy = 40.0;
  b.intrinsics.cx = 16.0;
  b.intrinsics.cy = 16.5;
  b.intrinsics.width = b.intrinsics.height = 32;
  s.cameras = {{1, a}, {2, b}};
  s.views.push_back({1, 1, "view_a.png", {1, 0, 0, 0}, {0.125, 0, 4.5}, 0});
  s.views.push_back({2, 2, "view_b.png", {0.5, 0.5, -0.5, 0.5}, {0.25, -1.5, 3}, 1});
  SeedPoint p7{7, {0.5, -0.25, 1.75}, {200, 100, 0}, 0.5, 0.0};
  p7.radiance = (200.0 + 100.0 + 0.0) / 3.0 / 255.0;
  SeedPoint p3{3, {-1, 2, 0.0625}, {10, 20, 30}, 1.25, 0.0};
  p3.radiance = (10.0 + 20.0 + 30.0) / 3.0 / 255.0;
  s.points = {p7, p3};
  return s;
}

// Little-endian byte builder for the binary fixture; kept separate from the
// library's writer on purpose.
struct Bytes {
  std::string data;
  template <typename T>
  void put(T v) {
    data.append(reinterpret_cast<const char*>(&v), sizeof v);
  }
  void str(const std::string& s) { data.append(s.c_str(), s.size() + 1); }
};

std::vector<char> file_bytes(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void write_text(const fs::path& p, const std::string& s) {
  std::ofstream out(p, std::ios::binary);
  out << s;
}

void write_binary_fixture(const fs::path& dir) {
  Bytes cam;
  cam.put<std::uint64_t>(2);
  cam.put<std::int32_t>(1);
  cam.put<std::int32_t>(1);  // PINHOLE
  cam.put<std::uint64_t>(64);
  cam.put<std::uint64_t>(48);
  for (double v : {52.5, 51.25, 31.5, 23.75}) cam.put(v);
  cam.put<std::int32_t>(2);
  cam.put<std::int32_t>(0);  // SIMPLE_PINHOLE
  cam.put<std::uint64_t>(32);
  cam.put<std::uint64_t>(32);
  for (double v : {40.0, 16.0, 16.5}) cam.put(v);
  write_text(dir / "cameras.bin", cam.data);

  Bytes img;
  img.put<std::uint64_t>(2);
  img.put<std::int32_t>(2);
  for (double v : {0.5, 0.5, -0.5, 0.5, 0.25, -1.5, 3.0}) img.put(v);
  img.put<std::int32_t>(2);
  img.str("view_b.png");
  img.put<std::uint64_t>(1);
  img.put(10.5);
  img.put(20.25);
  img.put<std::int64_t>(7);
  img.put<std::int32_t>(1);
  for (double v : {1.0, 0.0, 0.0, 0.0, 0.125, 0.0, 4.5}) img.put(v);
  img.put<std::int32_t>(1);
  img.str("view_a.png");
  img.put<std::uint64_t>(0);
  write_text(dir / "images.bin", img.data);

  Bytes pts;
  pts.put<std::uint64_t>(2);
  pts.put<std::uint64_t>(7);
  for (double v : {0.5, -0.25, 1.75}) pts.put(v);
  for (std::uint8_t c : {200, 100, 0}) pts.put(c);
  pts.put(0.5);
  pts.put<std::uint64_t>(2);
  for (std::int32_t v : {1, 0, 2, 0}) pts.put(v);
  pts.put<std::uint64_t>(3);
  for (double v : {-1.0, 2.0, 0.0625}) pts.put(v);
  for (std::uint8_t c : {10, 20, 30}) pts.put(c);
  pts.put(1.25);
  pts.put<std::uint64_t>(0);
  write_text(dir / "points3D.bin", pts.data);
}

Checkpoint random_checkpoint(Rng& rng) {
  Checkpoint c;
  c.config.seed = 42;
  c.config.lambda_dis = 0.1;
  c.config.checkpoint_iterations = {5, 17};
  c.model.cloud = random_cloud(rng, 9, 2);
  c.model.box = SceneBox::around(c.model.cloud.positions);
  c.model.atf = AtfNetwork::create(rng, 3, 8, 4);
  for (auto b : c.model.atf->parameter_blocks())
    for (double& v : b) v = rng.normal();
  c.model.tcm = TcmNetwork::create(rng);
  for (auto b : c.model.tcm->parameter_blocks())
    for (double& v : b) v = rng.normal();
  TrainState& s = c.state;
  s.iteration = 1234;
  s.rng = Rng(77);
  s.rng.next_u64();
  s.scene_extent = 2.75;
  for (AdamGroup* g : {&s.position, &s.log_scale, &s.rotation, &s.opacity, &s.sh, &s.atf, &s.tcm}) {
    g->step = 1234;
    g->skipped = 3;
    g->m.resize(17);
    g->v.resize(17);
    for (double& v : g->m) v = rng.normal();
    for (double& v : g->v) v = rng.uniform();
  }
  s.grad_accum.assign(9, 0.0);
  for (double& v : s.grad_accum) v = rng.uniform();
  s.grad_count.assign(9, 4);
  s.view_order = {3, 1, 0, 2};
  s.view_cursor = 2;
  return c;
}

}  // namespace

std::string format_result(const CriterionResult& r) {
  return std::string(r.passed ? "PASS " : "FAIL ") + r.name + " (" + num(r.seconds, "%.1f") + "s): " + r.detail;
}

CriterionResult check_gradient_integrity(std::uint64_t seed) {
  return guarded("gradient_integrity", [&](const Stopwatch& sw) {
    constexpr double kLimit = 1e-5;
    constexpr int kScenes = 4, kProbesPerScene = 35;
    Rng rng(seed);
    int probes = 0, redrawn = 0;
    double worst = 0.0;
    std::string worst_name;
    std::vector<std::string> groups;
    for (int s = 0; s < kScenes; ++s) {
      FdScene scene = make_fd_scene(rng);
      const GradCheckReport r = check_gradients(scene, kProbesPerScene, rng);
      probes += static_cast<int>(r.probes.size());
      redrawn += r.redrawn;
      for (const auto& p : r.probes) {
        const std::string g = p.parameter.substr(0, p.parameter.find('['));
        if (std::find(groups.begin(), groups.end(), g) == groups.end()) groups.push_back(g);
      }
      if (r.max_rel_error >= worst) {
        worst = r.max_rel_error;
        worst_name = "scene " + std::to_string(s) + " " + r.worst;
      }
    }
    const double secs = sw.seconds();
    Checks c;
    c.add(probes >= 100, std::to_string(probes) + " probes over " + std::to_string(groups.size()) +
                             " parameter groups (" + std::to_string(redrawn) + " redrawn at kinks)");
    c.add(worst < kLimit, "max rel err " + num(worst) + " at " + worst_name + " < " + num(kLimit));
    c.add(secs < 120.0, "runtime " + num(secs, "%.1f") + "s < 120s");
    return c.finish("gradient_integrity", sw);
  });
}

CriterionResult check_physics_oracle() {
  return guarded("physics_oracle", [&](const Stopwatch& sw) {
    constexpr double kAlpha = 1.0, kTime = 0.5, kRatio = 0.125, kSpan = 10.0;
    Checks c;
    const KernelRun coarse = kernel_error(0.1, kSpan, kAlpha, kTime, kRatio);
    const KernelRun mid = kernel_error(0.05, kSpan, kAlpha, kTime, kRatio);
    const KernelRun fine = kernel_error(0.025, kSpan, kAlpha, kTime, kRatio);
    c.add(mid.max_error < 1e-3, "kernel max-abs err " + num(mid.max_error) + " at dx=0.05 (peak " +
                                    num(mid.peak) + ") < 1e-3");
    const double r1 = coarse.max_error / mid.max_error, r2 = mid.max_error / fine.max_error;
    c.add(r1 >= 3.2 && r1 <= 4.8 && r2 >= 3.2 && r2 <= 4.8,
          "convergence ratios " + num(r1, "%.3f") + ", " + num(r2, "%.3f") + " in [3.2, 4.8]");

    Rng rng(21);
    TemperatureField f(48, 40, 0.1, Boundary::periodic);
    for (double& v : f.data) v = rng.uniform(0.0, 5.0);
    const double before = f.total();
    const TemperatureField after = heat_simulate(f, ConductionSpec(1.0, 0.25 * 0.01, 1000, 0.1));
    const double drift = std::abs(after.total() - before) / std::abs(before);
    c.add(drift < 1e-12, "periodic heat drift " + num(drift) + " per 1000 steps < 1e-12");
    const double secs = sw.seconds();
    c.add(secs < 60.0, "runtime " + num(secs, "%.1f") + "s < 60s");
    return c.finish("physics_oracle", sw);
  });
}

CriterionResult check_identity_at_init(std::uint64_t seed) {
  return guarded("identity_at_init", [&](const Stopwatch& sw) {
    Rng rng(seed);
    double worst = 0.0;
    for (int s = 0; s < 10; ++s) {
      Model model;
      model.cloud = random_cloud(rng, 60 + 10 * s, s % 4);
      model.box = SceneBox::around(model.cloud.positions);
      model.atf = AtfNetwork::create(rng);
      model.tcm = TcmNetwork::create(rng);
      const Camera cam = square_camera(40 + 4 * s, 45.0);
      const double t = rng.uniform();
      PipelineOptions on, off;
      off.use_atf = off.use_tcm = false;
      const RadianceImage a = pipeline_forward(model, cam, t, on).output;
      const RadianceImage b = pipeline_forward(model, cam, t, off).output;
      for (std::size_t i = 0; i < a.data.size(); ++i) worst = std::max(worst, std::abs(a.data[i] - b.data[i]));
    }
    Checks c;
    c.add(worst < 1e-6, "10 scenes, full-size ATF and TCM, max-abs diff " + num(worst) + " < 1e-6");
    return c.finish("identity_at_init", sw);
  });
}

CriterionResult check_loss_contract(std::uint64_t seed) {
  return guarded("loss_contract", [&](const Stopwatch& sw) {
    Checks c;
    // Hand-computed: 0.2 a + 0.2 b + 0.6 l.
    struct Triple {
      double dis, dssim, l1, expected;
    };
    const Triple triples[] = {{0.0, 0.0, 1.0, 0.6},      {1.0, 0.0, 0.0, 0.2},      {0.0, 1.0, 0.0, 0.2},
                              {0.5, 0.25, 0.125, 0.225}, {0.3, 0.1, 0.05, 0.11},    {2.0, 1.5, 0.75, 1.15},
                              {0.04, 0.02, 0.01, 0.018}, {0.125, 0.375, 0.5, 0.4}};
    bool exact = true;
    double hand_dev = 0.0;
    for (const Triple& t : triples) {
      const double got = combine_losses(t.dis, t.dssim, t.l1);
      exact = exact && got == 0.2 * t.dis + 0.2 * t.dssim + 0.6 * t.l1;
      hand_dev = std::max(hand_dev, std::abs(got - t.expected));
    }
    c.add(exact, "combine == 0.2 dis + 0.2 dssim + 0.6 l1 bitwise on 8 triples");
    c.add(hand_dev <= 4e-16 * 4, "hand totals within " + num(hand_dev) + " (rounding of decimal weights)");

    Rng rng(seed);
    bool total_exact = true;
    double l1_dev = 0.0;
    for (int k = 0; k < 4; ++k) {
      const RadianceImage gt = random_image(rng, 24, 20);
      const RadianceImage pred = random_image(rng, 24, 20);
      const TotalLoss l = total_loss(pred, gt, 1000 * k);
      total_exact = total_exact && l.terms.total == 0.2 * l.terms.dis + 0.2 * l.terms.dssim + 0.6 * l.terms.l1 &&
                    l.terms.dssim == (1.0 - ssim(pred, gt)) / 2.0;
      l1_dev = std::max(l1_dev, std::abs(l.terms.l1 - naive_l1(pred, gt)));
    }
    c.add(total_exact, "total_loss terms recombine exactly with default weights");
    c.add(l1_dev < 1e-14, "L1 term vs naive " + num(l1_dev));

    const RadianceImage gt = random_image(rng, 32, 32);
    const RadianceImage pred = random_image(rng, 32, 32);
    bool zero = true;
    for (int it : {5000, 5001, 7500, 30000}) {
      zero = zero && discontinuous_loss(pred, gt, it) == 0.0 && total_loss(pred, gt, it).terms.dis == 0.0;
    }
    const bool live = discontinuous_loss(pred, gt, 4999) > 0.0;
    c.add(zero && live, "dis == 0 exactly at iteration >= 5000 and > 0 at 4999");

    double harris_dev = 0.0;
    for (int k = 0; k < 5; ++k) {
      const RadianceImage img = random_image(rng, 20 + k, 18);
      const RadianceImage a = harris_response(img, 0.04);
      const RadianceImage b = naive_harris(img, 0.04);
      for (std::size_t i = 0; i < a.data.size(); ++i) harris_dev = std::max(harris_dev, std::abs(a.data[i] - b.data[i]));
    }
    c.add(harris_dev < 1e-6, "Harris vs structure-tensor eigenvalue oracle " + num(harris_dev) + " < 1e-6");
    return c.finish("loss_contract", sw);
  });
}

CriterionResult check_io(const fs::path& work_dir) {
  return guarded("io", [&](const Stopwatch& sw) {
    Checks c;
    const fs::path text_dir = work_dir / "colmap_text", bin_dir = work_dir / "colmap_binary";
    fs::create_directories(text_dir);
    fs::create_directories(bin_dir);
    write_text(text_dir / "cameras.txt", kCamerasTxt);
    write_text(text_dir / "images.txt", kImagesTxt);
    write_text(text_dir / "points3D.txt", kPointsTxt);
    write_binary_fixture(bin_dir);
    const SparseScene expected = expected_fixture();
    const SparseScene from_text = parse_colmap_text(text_dir);
    const SparseScene from_bin = parse_colmap_binary(bin_dir);
    c.add(from_text == expected, "text fixture field-exact");
    c.add(from_bin == expected, "binary fixture field-exact");

    const fs::path rt = work_dir / "colmap_roundtrip";
    write_colmap_text(from_text, rt);
    write_colmap_binary(from_text, rt);
    c.add(parse_colmap_text(rt) == expected && parse_colmap_binary(rt) == expected, "write/parse round trip exact");

    Rng rng(8);
    const Checkpoint ck = random_checkpoint(rng);
    const std::vector<std::uint8_t> bytes = encode_checkpoint(ck);
    const fs::path ck_path = work_dir / "roundtrip.ckpt";
    save_checkpoint(ck, ck_path);
    const Checkpoint back = load_checkpoint(ck_path);
    c.add(back == ck && encode_checkpoint(back) == bytes,
          "checkpoint round trip bitwise (" + std::to_string(bytes.size()) + " bytes)");

    bool split_ok = true;
    std::string shown;
    for (int n : {7, 8, 16}) {
      SynthSpec spec;
      spec.width = spec.height = 8;
      spec.grid = 16;
      spec.points = 20;
      spec.supersample = 1;
      spec.views = n;
      spec.emitters.push_back({});
      const fs::path dir = work_dir / ("split_" + std::to_string(n));
      synth_scene_generate(spec, 1, dir);
      const Dataset ds = load_dataset(dir);
      std::vector<std::size_t> want;
      for (std::size_t i = 0; i < static_cast<std::size_t>(n); i += 8) want.push_back(i);
      split_ok = split_ok && ds.views.size() == static_cast<std::size_t>(n) && ds.split.test == want &&
                 ds.split.train.size() + want.size() == static_cast<std::size_t>(n);
      shown += (shown.empty() ? "" : ", ") + std::to_string(n) + "->{";
      for (std::size_t i = 0; i < ds.split.test.size(); ++i) shown += (i ? "," : "") + std::to_string(ds.split.test[i]);
      shown += "}";
    }
    c.add(split_ok, "test split " + shown);
    return c.finish("io", sw);
  });
}

CriterionResult check_metric_sanity(std::uint64_t seed) {
  return guarded("metric_sanity", [&](const Stopwatch& sw) {
    Checks c;
    Rng rng(seed);
    const RadianceImage gt = random_image(rng, 37, 29, 0.0, 0.9);
    RadianceImage off = gt;
    for (double& v : off.data) v += 0.1;
    const double p = psnr(off, gt);
    c.add(std::abs(p - 20.0) <= 1e-6, "PSNR(+0.1) = " + num(p, "%.12f") + " dB");
    const double self = ssim(gt, gt);
    c.add(std::abs(self - 1.0) <= 1e-9, "SSIM(x, x) - 1 = " + num(self - 1.0));
    double dev = 0.0;
    for (int k = 0; k < 10; ++k) {
      const RadianceImage a = random_image(rng, 16 + 3 * k, 24);
      RadianceImage b = a;
      for (double& v : b.data) v = std::clamp(v + rng.uniform(-0.3, 0.3), 0.0, 1.0);
      dev = std::max(dev, std::abs(ssim(a, b) - reference_ssim(a, b)));
    }
    c.add(dev < 1e-5, "SSIM vs full-window reference on 10 pairs, max dev " + num(dev) + " < 1e-5");
    return c.finish("metric_sanity", sw);
  });
}

std::string desk_scene_spec_text() {
  return R"(# Desk-scale thermal scene: a warm plate with a few emitters, orbited twice
# so every viewpoint is seen at two times. Radiance drifts with view angle
# and time, and heat spreads on the sensor before readout.

[scene]
width = 64
height = 64
plane_size = 2.0
grid = 128
ambient = 0.15
noise = 0.02
points = 600
supersample = 2

[emitter]
shape = disk
x = -0.45
y = 0.3
radius = 0.28
temperature = 0.9

[emitter]
shape = square
x = 0.4
y = -0.35
radius = 0.22
temperature = 0.7

[emitter]
shape = disk
x = 0.35
y = 0.5
radius = 0.12
temperature = 0.55

[emitter]
shape = square
x = -0.3
y = -0.5
radius = 0.1
temperature = 0.05

[orbit]
views = 24
radius = 2.6
height = 2.2
height_amplitude = 0.6
arc = 720
fov = 50

[attenuation]
a = -0.35
b = -0.6

[diffusion]
alpha = 1.0
time = 0.0015
image_time = 0.5
)";
}

namespace {

fs::path prepare_scene(const AblationOptions& o) {
  const fs::path dir = o.work_dir / "scene";
  if (!fs::exists(dir / "manifest.txt"))
    synth_scene_generate(parse_synth_spec(desk_scene_spec_text(), "desk_scene"), o.data_seed, dir);
  return dir;
}

TrainConfig ablation_config(const AblationOptions& o, bool atf, bool tcm, bool dis) {
  TrainConfig cfg;
  cfg.total_iterations = o.iterations;
  cfg.checkpoint_iterations = {o.iterations};
  cfg.seed = o.train_seed;
  cfg.max_gaussians = o.max_gaussians;
  cfg.log_interval = 500;
  cfg.use_atf = atf;
  cfg.use_tcm = tcm;
  cfg.use_dis = dis;
  return cfg;
}

AblationRun train_one(const Dataset& ds, const AblationOptions& o, const std::string& label, bool atf, bool tcm,
                      bool dis) {
  const Stopwatch sw;
  AblationRun run;
  run.label = label;
  run.atf = atf;
  run.tcm = tcm;
  run.dis = dis;
  std::ostringstream quiet;
  std::ostream& console = o.log ? *o.log : quiet;
  const TrainOutcome out = train(ds, ablation_config(o, atf, tcm, dis), o.work_dir / label, console);
  run.test_psnr = out.evaluations.back().mean_psnr;
  run.test_ssim = out.evaluations.back().mean_ssim;
  run.gaussians = out.final.model.cloud.size();
  run.checkpoint = out.checkpoints.back();
  run.seconds = sw.seconds();
  return run;
}

}  // namespace

AblationOutcome check_directional_ablation(const AblationOptions& o) {
  AblationOutcome outcome;
  outcome.result = guarded("directional_ablation", [&](const Stopwatch& sw) {
    const Dataset ds = load_dataset(prepare_scene(o));
    // Baseline: plain splatting without the physics modules or corner loss.
    outcome.runs.push_back(train_one(ds, o, "baseline", false, false, false));
    outcome.runs.push_back(train_one(ds, o, "atf_only", true, false, false));
    outcome.runs.push_back(train_one(ds, o, "tcm_only", false, true, false));
    outcome.runs.push_back(train_one(ds, o, "full", true, true, true));
    const double base = outcome.runs[0].test_psnr;
    const double atf = outcome.runs[1].test_psnr, tcm = outcome.runs[2].test_psnr, full = outcome.runs[3].test_psnr;
    const double margin = full - base;
    Checks c;
    c.add(full >= base, "full " + num(full, "%.3f") + " dB >= baseline " + num(base, "%.3f") + " dB");
    c.add(true, std::string("margin ") + num(margin, "%+.3f") + " dB" +
                    (margin >= 0.5 ? " (>= 0.5 expected)" : " (below the 0.5 dB expectation; reported only)"));
    c.add(atf >= base - 0.05, "+ATF " + num(atf, "%.3f") + " dB >= baseline - 0.05");
    c.add(tcm >= base - 0.05, "+TCM " + num(tcm, "%.3f") + " dB >= baseline - 0.05");
    c.add(true, std::to_string(o.iterations) + " iterations, " + std::to_string(ds.views.size()) + " views, " +
                    std::to_string(ds.split.test.size()) + " test");
    return c.finish("directional_ablation", sw);
  });
  return outcome;
}

CriterionResult check_determinism(const AblationOptions& o, const fs::path& reference) {
  return guarded("determinism", [&](const Stopwatch& sw) {
    const Dataset ds = load_dataset(prepare_scene(o));
    AblationOptions again = o;
    again.work_dir = o.work_dir / "repeat";
    fs::create_directories(again.work_dir);
    const AblationRun run = train_one(ds, again, "full", true, true, true);
    const std::vector<char> a = file_bytes(reference), b = file_bytes(run.checkpoint);
    std::size_t first_diff = 0;
    while (first_diff < std::min(a.size(), b.size()) && a[first_diff] == b[first_diff]) ++first_diff;
    Checks c;
    c.add(!a.empty() && a == b, std::to_string(o.iterations) + "-iteration checkpoints " +
                                    (a == b ? "identical (" + std::to_string(a.size()) + " bytes)"
                                            : "differ from byte " + std::to_string(first_diff)));
    return c.finish("determinism", sw);
  });
}

bool run_acceptance(const SuiteOptions& options, const std::function<void(const CriterionResult&)>& report) {
  bool all = true;
  auto emit = [&](const CriterionResult& r) {
    all = all && r.passed;
    report(r);
  };
  fs::create_directories(options.work_dir);
  emit(check_gradient_integrity());
  emit(check_physics_oracle());
  emit(check_identity_at_init());
  emit(check_loss_contract());
  if (options.training) {
    AblationOptions ab;
    ab.work_dir = options.work_dir / "ablation";
    ab.iterations = options.iterations;
    ab.log = options.log;
    const AblationOutcome outcome = check_directional_ablation(ab);
    emit(outcome.result);
    if (outcome.runs.size() == 4) {
      emit(check_determinism(ab, outcome.runs[3].checkpoint));
    } else {
      emit({"determinism", false, "no reference checkpoint (ablation did not finish)", 0.0});
    }
  }
  emit(check_io(options.work_dir / "io"));
  emit(check_metric_sanity());
  return all;
}

}  // namespace thermalsplat::verify
