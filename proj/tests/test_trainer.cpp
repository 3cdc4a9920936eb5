#include <doctest.h>

#include <cmath>
#include <fstream>
#include <iterator>
#include <sstream>

#include "support.hpp"
#include "thermalsplat/error.hpp"
#include "thermalsplat/sh.hpp"
#include "thermalsplat/synth.hpp"
#include "thermalsplat/trainer.hpp"

using namespace thermalsplat;
namespace fs = std::filesystem;

namespace {

SynthSpec tiny_spec() {
  SynthSpec s;
  s.width = s.height = 16;
  s.grid = 32;
  s.points = 80;
  s.supersample = 1;
  s.views = 10;
  s.emitters.push_back({EmitterSpec::Shape::disk, 0.2, -0.1, 0.4, 0.9});
  s.atten_b = -0.2;
  return s;
}

const Dataset& tiny_dataset() {
  static const Dataset ds = [] {
    const fs::path dir = test::scratch("trainer_scene");
    synth_scene_generate(tiny_spec(), 3, dir);
    return load_dataset(dir);
  }();
  return ds;
}

TrainConfig tiny_config(int iterations) {
  TrainConfig c;
  c.total_iterations = iterations;
  c.atf_depth = 2;
  c.atf_width = 16;
  c.atf_frequencies = 4;
  c.checkpoint_iterations = {};
  c.log_interval = 5;
  return c;
}

std::vector<char> bytes_of(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

SparseScene four_points() {
  SparseScene s;
  int id = 0;
  for (Vec3 p : {Vec3{0, 0, 0}, Vec3{1, 0, 0}, Vec3{0, 1, 0}, Vec3{1, 1, 0}}) {
    SeedPoint sp;
    sp.id = static_cast<std::uint64_t>(++id);
    sp.position = p;
    sp.radiance = 0.7;
    s.points.push_back(sp);
  }
  return s;
}

}  // namespace

TEST_CASE("learning-rate schedules") {
  TrainConfig c;
  CHECK(atf_lr(c, 0) == doctest::Approx(8e-4).epsilon(1e-14));
  CHECK(atf_lr(c, 30000) == doctest::Approx(1.6e-6).epsilon(1e-14));
  CHECK(position_lr(c, 0) == doctest::Approx(1.6e-4).epsilon(1e-14));
  CHECK(position_lr(c, 15000) == doctest::Approx(std::sqrt(1.6e-4 * 1.6e-6)).epsilon(1e-12));
}

TEST_CASE("camera extent") {
  std::vector<ThermalView> v(2);
  v[0].camera.translation = {-1, 0, 0};  // center (1, 0, 0)
  v[1].camera.translation = {1, 0, 0};   // center (-1, 0, 0)
  CHECK(camera_extent(v) == doctest::Approx(1.1));
  std::vector<ThermalView> one(1);
  CHECK(camera_extent(one) == 1.0);
}

TEST_CASE("model initialization from seed points") {
  const Model m = initialize_model(four_points(), TrainConfig{});
  REQUIRE(m.cloud.size() == 4);
  // Nearest squared distances 1, 1, 2 -> mean 4/3.
  const double s = std::sqrt(4.0 / 3.0);
  CHECK(std::exp(m.cloud.log_scales[0].x) == doctest::Approx(s));
  CHECK(m.cloud.rotations[0] == Quat{1, 0, 0, 0});
  CHECK(sigmoid(m.cloud.opacity_raw[2]) == doctest::Approx(0.1));
  CHECK(eval_sh(m.cloud.sh[1], {0, 0, 1}, 0) == doctest::Approx(0.7));
  REQUIRE(m.atf);
  REQUIRE(m.tcm);
  TrainConfig off;
  off.use_atf = off.use_tcm = false;
  const Model b = initialize_model(four_points(), off);
  CHECK_FALSE(b.atf);
  CHECK_FALSE(b.tcm);
  CHECK_THROWS_AS(initialize_model(SparseScene{}, off), DataError);
}

TEST_CASE("densify clones small, splits large and prunes transparent Gaussians") {
  TrainConfig cfg;
  cfg.use_atf = cfg.use_tcm = false;
  Model m = initialize_model(four_points(), cfg);
  TrainState st = initialize_state(m, cfg, 10.0);  // size limit 0.1
  m.cloud.log_scales[0] = {std::log(0.05), std::log(0.05), std::log(0.05)};  // small -> clone
  m.cloud.log_scales[1] = {std::log(0.5), std::log(0.2), std::log(0.2)};     // large -> split
  m.cloud.opacity_raw[3] = logit(0.001);                                      // transparent -> prune
  st.grad_accum = {1.0, 1.0, 0.0, 0.0};
  st.grad_count = {2, 2, 2, 0};
  const DensifyStats d = densify_and_prune(m, st, cfg);
  CHECK(d.cloned == 1);
  CHECK(d.split == 1);
  CHECK(d.pruned == 1);
  CHECK(m.cloud.size() == 4 + 1 + 2 - 1 - 1);
  CHECK(st.position.m.size() == 3 * m.cloud.size());
  CHECK(st.sh.v.size() == 16 * m.cloud.size());
  CHECK(st.grad_accum.size() == m.cloud.size());
  // Split children shrink by 1.6.
  int children = 0;
  for (const auto& ls : m.cloud.log_scales)
    if (std::abs(std::exp(ls.x) - 0.5 / 1.6) < 1e-12) ++children;
  CHECK(children == 2);
}

TEST_CASE("densify respects max_gaussians and never empties the scene") {
  TrainConfig cfg;
  cfg.use_atf = cfg.use_tcm = false;
  cfg.max_gaussians = 4;
  Model m = initialize_model(four_points(), cfg);
  TrainState st = initialize_state(m, cfg, 1.0);
  st.grad_accum = {1, 1, 1, 1};
  st.grad_count = {1, 1, 1, 1};
  const DensifyStats d = densify_and_prune(m, st, cfg);
  CHECK(d.capped);
  CHECK(m.cloud.size() == 4);

  for (double& o : m.cloud.opacity_raw) o = logit(1e-4);
  m.cloud.opacity_raw[2] = logit(2e-4);
  densify_and_prune(m, st, cfg, false);
  REQUIRE(m.cloud.size() == 1);
  CHECK(sigmoid(m.cloud.opacity_raw[0]) == doctest::Approx(2e-4));
}

TEST_CASE("opacity reset caps at 0.01 and clears moments") {
  TrainConfig cfg;
  cfg.use_atf = cfg.use_tcm = false;
  Model m = initialize_model(four_points(), cfg);
  TrainState st = initialize_state(m, cfg, 1.0);
  m.cloud.opacity_raw[0] = logit(0.005);
  std::fill(st.opacity.m.begin(), st.opacity.m.end(), 1.0);
  reset_opacity(m, st);
  CHECK(sigmoid(m.cloud.opacity_raw[0]) == doctest::Approx(0.005));
  CHECK(sigmoid(m.cloud.opacity_raw[1]) == doctest::Approx(0.01));
  for (double v : st.opacity.m) CHECK(v == 0.0);
}

TEST_CASE("zero iterations writes only the initialization checkpoint") {
  const fs::path out = test::scratch("train_zero");
  std::ostringstream console;
  const TrainOutcome o = train(tiny_dataset(), tiny_config(0), out, console);
  REQUIRE(o.checkpoints.size() == 1);
  CHECK(o.checkpoints[0].filename() == "checkpoint_0.ckpt");
  CHECK(o.final.state.iteration == 0);
  CHECK(fs::exists(out / "metrics.log"));
}

TEST_CASE("training lowers the loss and logs metrics") {
  const fs::path out = test::scratch("train_short");
  std::ostringstream console;
  TrainConfig cfg = tiny_config(60);
  cfg.log_interval = 10;
  Trainer t(tiny_dataset(), cfg);
  double first = 0.0, last = 0.0;
  for (int i = 0; i < 60; ++i) {
    const StepInfo s = t.step();
    if (i < 10) first += s.loss.l1;
    if (i >= 50) last += s.loss.l1;
  }
  CHECK(last < first);

  const TrainOutcome o = train(tiny_dataset(), cfg, out, console);
  std::ifstream log(out / "metrics.log");
  const std::string text{std::istreambuf_iterator<char>(log), std::istreambuf_iterator<char>()};
  CHECK(text.find("# total_iterations=60") != std::string::npos);
  CHECK(text.find("iter=60 loss=") != std::string::npos);
  CHECK(text.find("eval_mean iter=60") != std::string::npos);
  CHECK(o.evaluations.back().rows.size() == tiny_dataset().split.test.size());
}

TEST_CASE("resuming reproduces an uninterrupted run bitwise") {
  TrainConfig cfg = tiny_config(24);
  cfg.checkpoint_iterations = {12};
  cfg.densify_from = 4;
  cfg.densify_interval = 5;
  cfg.densify_grad_threshold = 1e-7;
  cfg.opacity_reset_interval = 14;
  std::ostringstream console;
  const fs::path straight = test::scratch("resume_straight"), split = test::scratch("resume_split");
  train(tiny_dataset(), cfg, straight, console);
  const Checkpoint mid = load_checkpoint(straight / "checkpoint_12.ckpt");
  CHECK(mid.state.iteration == 12);
  train(tiny_dataset(), cfg, split, console, mid);
  CHECK(bytes_of(straight / "checkpoint_24.ckpt") == bytes_of(split / "checkpoint_24.ckpt"));
}

TEST_CASE("evaluation report format") {
  EvalReport r;
  r.rows.push_back({0, "a.png", std::numeric_limits<double>::infinity(), 1.0});
  r.mean_psnr = std::numeric_limits<double>::infinity();
  r.mean_ssim = 1.0;
  std::ostringstream os;
  write_eval_report(r, os);
  CHECK(os.str().find("frame=0 name=a.png psnr=inf ssim=1") != std::string::npos);
  CHECK(format_metric(20.0) == "20");
}
