#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "thermalsplat/camera_path.hpp"
#include "thermalsplat/checkpoint.hpp"
#include "thermalsplat/dataset.hpp"
#include "thermalsplat/error.hpp"
#include "thermalsplat/image_io.hpp"
#include "thermalsplat/parallel.hpp"
#include "thermalsplat/synth.hpp"
#include "thermalsplat/trainer.hpp"
#include "thermalsplat/verify/criteria.hpp"

namespace fs = std::filesystem;
using namespace thermalsplat;

namespace {

enum Exit { kOk = 0, kUsage = 1, kData = 2, kNumerical = 3 };

struct TrainArgs {
  fs::path data, out, config_file, resume;
  std::vector<std::string> sets;
  std::optional<int> iterations;
  std::optional<double> background;
  std::optional<std::uint64_t> seed;
  bool no_atf = false, no_tcm = false, no_dis = false;
};

// Precedence: command-line flags > --set > config file > defaults (or the
// checkpoint's config when resuming).
void apply_overrides(TrainConfig& cfg, const TrainArgs& a) {
  if (!a.config_file.empty()) cfg.apply_file(a.config_file);
  for (const auto& s : a.sets) cfg.apply(s);
  if (a.iterations) cfg.total_iterations = *a.iterations;
  if (a.background) cfg.background = *a.background;
  if (a.seed) cfg.seed = *a.seed;
  if (a.no_atf) cfg.use_atf = false;
  if (a.no_tcm) cfg.use_tcm = false;
  if (a.no_dis) cfg.use_dis = false;
  cfg.validate();
}

int cmd_train(const TrainArgs& a) {
  const Dataset ds = load_dataset(a.data);
  for (const auto& w : ds.warnings) std::cerr << "warning: " << w << "\n";
  std::optional<Checkpoint> resume;
  TrainConfig cfg;
  if (!a.resume.empty()) {
    resume = load_checkpoint(a.resume);
    apply_overrides(resume->config, a);
    cfg = resume->config;
  } else {
    apply_overrides(cfg, a);
  }
  std::cout << "training on " << ds.views.size() << " views (" << ds.split.train.size() << " train, "
            << ds.split.test.size() << " test), " << thread_count() << " threads\n";
  const TrainOutcome out = train(ds, cfg, a.out, std::cout, std::move(resume));
  std::cout << "wrote " << out.checkpoints.size() << " checkpoint(s) and " << (a.out / "metrics.log").string() << "\n";
  return kOk;
}

struct RenderArgs {
  fs::path checkpoint, out, path_file, data;
  std::string split = "test";
  bool no_tcm = false;
  int depth = 8;
};

PipelineOptions options_for(const Checkpoint& ck, bool no_tcm) {
  PipelineOptions o = pipeline_options(ck.config);
  o.use_atf = o.use_atf && ck.model.atf.has_value();
  o.use_tcm = o.use_tcm && ck.model.tcm.has_value() && !no_tcm;
  return o;
}

std::vector<std::size_t> pick_split(const Dataset& ds, const std::string& split) {
  if (split == "test") return ds.split.test;
  if (split == "train") return ds.split.train;
  std::vector<std::size_t> all(ds.views.size());
  for (std::size_t i = 0; i < all.size(); ++i) all[i] = i;
  return all;
}

int cmd_render(const RenderArgs& a) {
  if (a.path_file.empty() == a.data.empty()) throw UsageError("render needs exactly one of --path or --data");
  const Checkpoint ck = load_checkpoint(a.checkpoint);
  const PipelineOptions opts = options_for(ck, a.no_tcm);
  std::vector<PathView> views;
  if (!a.path_file.empty()) {
    views = load_camera_path(a.path_file);
  } else {
    const Dataset ds = load_dataset(a.data);
    for (std::size_t i : pick_split(ds, a.split))
      views.push_back({ds.scene.views[i].name, ds.views[i].camera, ds.views[i].time_norm});
  }
  fs::create_directories(a.out);
  for (const auto& v : views) {
    const RadianceImage img = clamp01(render_view(ck.model, v.camera, v.time_norm, opts));
    fs::path name = fs::path(v.name).filename();
    if (name.extension() != ".png") name += ".png";
    if (a.depth == 16) save_image16(img, a.out / name);
    else save_image(img, a.out / name);
  }
  std::cout << "rendered " << views.size() << " view(s) to " << a.out.string() << "\n";
  return kOk;
}

struct EvalArgs {
  fs::path data, checkpoint, renders, out;
  bool no_tcm = false;
};

int cmd_eval(const EvalArgs& a) {
  if (a.checkpoint.empty() == a.renders.empty()) throw UsageError("eval needs exactly one of --checkpoint or --renders");
  const Dataset ds = load_dataset(a.data);
  EvalReport rep;
  if (!a.checkpoint.empty()) {
    const Checkpoint ck = load_checkpoint(a.checkpoint);
    rep = evaluate(ck.model, ds, ds.split.test, options_for(ck, a.no_tcm));
    rep.iteration = ck.state.iteration;
  } else {
    for (std::size_t i : ds.split.test) {
      const std::string& name = ds.scene.views[i].name;
      const RadianceImage img = load_image(a.renders / fs::path(name).filename());
      if (img.width != ds.views[i].image.width || img.height != ds.views[i].image.height)
        throw DataError(name + ": render size differs from the ground truth");
      rep.rows.push_back({ds.views[i].frame_index, name, psnr(img, ds.views[i].image), ssim(img, ds.views[i].image)});
    }
    double p = 0.0, s = 0.0;
    for (const auto& r : rep.rows) {
      p += r.psnr;
      s += r.ssim;
    }
    rep.mean_psnr = rep.rows.empty() ? 0.0 : p / static_cast<double>(rep.rows.size());
    rep.mean_ssim = rep.rows.empty() ? 0.0 : s / static_cast<double>(rep.rows.size());
  }
  if (a.out.empty()) {
    write_eval_report(rep, std::cout);
  } else {
    std::ofstream f(a.out);
    if (!f) throw DataError("cannot write " + a.out.string());
    write_eval_report(rep, f);
    std::cout << "mean psnr=" << format_metric(rep.mean_psnr) << " ssim=" << format_metric(rep.mean_ssim) << " over "
              << rep.rows.size() << " view(s)\n";
  }
  return kOk;
}

struct VerifyArgs {
  fs::path work = "verify_work";
  int iterations = 3000;
  bool skip_training = false;
};

int cmd_verify(const VerifyArgs& a) {
  verify::SuiteOptions o;
  o.work_dir = a.work;
  o.iterations = a.iterations;
  o.training = !a.skip_training;
  const bool ok = verify::run_acceptance(o, [](const verify::CriterionResult& r) {
    std::cout << verify::format_result(r) << std::endl;
  });
  std::cout << (ok ? "all criteria passed" : "some criteria failed") << "\n";
  return ok ? kOk : kNumerical;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Thermal-infrared Gaussian splatting"};
  app.require_subcommand(1);
  int threads = 0;
  app.add_option("--threads", threads, "Worker threads (default: THERMALSPLAT_THREADS or all cores)")
      ->check(CLI::PositiveNumber);

  fs::path spec_file, synth_out;
  std::uint64_t synth_seed = 0;
  auto* synth = app.add_subcommand("synth", "Generate a synthetic thermal dataset");
  synth->add_option("--spec", spec_file, "Scene spec file")->required();
  synth->add_option("--out", synth_out, "Output directory")->required();
  synth->add_option("--seed", synth_seed, "Random seed");

  TrainArgs ta;
  auto* trn = app.add_subcommand("train", "Train on a COLMAP-layout dataset");
  trn->add_option("--data", ta.data, "Dataset root")->required();
  trn->add_option("--out", ta.out, "Output directory")->required();
  trn->add_option("--config", ta.config_file, "key=value config file");
  trn->add_option("--set", ta.sets, "Config override key=value (repeatable)");
  trn->add_option("--iterations", ta.iterations, "Total iterations")->check(CLI::NonNegativeNumber);
  trn->add_option("--background", ta.background, "Background radiance");
  trn->add_option("--seed", ta.seed, "Training seed");
  trn->add_option("--resume", ta.resume, "Checkpoint to resume from");
  trn->add_flag("--no-atf", ta.no_atf, "Disable the atmospheric transmission field");
  trn->add_flag("--no-tcm", ta.no_tcm, "Disable the thermal conduction module");
  trn->add_flag("--no-dis", ta.no_dis, "Disable the discontinuous loss");

  RenderArgs ra;
  auto* rnd = app.add_subcommand("render", "Render views from a checkpoint");
  rnd->add_option("--checkpoint", ra.checkpoint, "Checkpoint file")->required();
  rnd->add_option("--out", ra.out, "Output directory")->required();
  rnd->add_option("--path", ra.path_file, "Camera path file");
  rnd->add_option("--data", ra.data, "Dataset whose views to render");
  rnd->add_option("--split", ra.split, "test, train or all")->check(CLI::IsMember({"test", "train", "all"}));
  rnd->add_option("--depth", ra.depth, "PNG bit depth")->check(CLI::IsMember({8, 16}));
  rnd->add_flag("--no-tcm", ra.no_tcm, "Skip the conduction refinement");

  EvalArgs ea;
  auto* evl = app.add_subcommand("eval", "PSNR/SSIM on the test split");
  evl->add_option("--data", ea.data, "Dataset root")->required();
  evl->add_option("--checkpoint", ea.checkpoint, "Checkpoint to render and score");
  evl->add_option("--renders", ea.renders, "Directory of rendered PNGs named like the test views");
  evl->add_option("--out", ea.out, "Report file (default: stdout)");
  evl->add_flag("--no-tcm", ea.no_tcm, "Skip the conduction refinement");

  VerifyArgs va;
  auto* ver = app.add_subcommand("verify", "Run the acceptance criteria");
  ver->add_option("--work", va.work, "Scratch directory");
  ver->add_option("--iterations", va.iterations, "Training iterations for the ablation")->check(CLI::PositiveNumber);
  ver->add_flag("--skip-training", va.skip_training, "Skip the ablation and determinism runs");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kUsage;
  }

  try {
    if (threads > 0) set_thread_count(threads);
    if (*synth) {
      synth_scene_generate(load_synth_spec(spec_file), synth_seed, synth_out);
      std::cout << "wrote dataset to " << synth_out.string() << "\n";
      return kOk;
    }
    if (*trn) return cmd_train(ta);
    if (*rnd) return cmd_render(ra);
    if (*evl) return cmd_eval(ea);
    if (*ver) return cmd_verify(va);
  } catch (const UsageError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kUsage;
  } catch (const DataError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kData;
  } catch (const NumericalError& e) {
    std::cerr << "numerical failure: " << e.what() << "\n";
    return kNumerical;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kData;
  }
  return kUsage;
}
