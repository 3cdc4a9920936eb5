#include "thermalsplat/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <ostream>
#include <sstream>
#include <type_traits>
#include <utility>

#include "thermalsplat/error.hpp"
#include "thermalsplat/parallel.hpp"
#include "thermalsplat/sh.hpp"

namespace thermalsplat {
namespace {

static_assert(std::is_standard_layout_v<Vec3> && sizeof(Vec3) == 3 * sizeof(double));
static_assert(std::is_standard_layout_v<Quat> && sizeof(Quat) == 4 * sizeof(double));
static_assert(sizeof(ShCoeffs) == kMaxShCoeffs * sizeof(double));

constexpr std::size_t kPositionDim = 3, kScaleDim = 3, kRotationDim = 4, kOpacityDim = 1, kShDim = kMaxShCoeffs;
constexpr double kSplitScaleDivisor = 1.6;  // 0.8 * two children
constexpr double kOpacityResetCap = 0.01;

// Flat double views over the array-of-struct parameter storage.
template <typename T>
std::span<double> flat(std::vector<T>& v) {
  return {reinterpret_cast<double*>(v.data()), v.size() * sizeof(T) / sizeof(double)};
}
template <typename T>
std::span<const double> flat(const std::vector<T>& v) {
  return {reinterpret_cast<const double*>(v.data()), v.size() * sizeof(T) / sizeof(double)};
}

void size_group(AdamGroup& g, std::size_t n) {
  g.m.assign(n, 0.0);
  g.v.assign(n, 0.0);
}

void append_rows(AdamGroup& g, std::size_t dim, std::size_t count) {
  g.m.resize(g.m.size() + dim * count, 0.0);
  g.v.resize(g.v.size() + dim * count, 0.0);
}

void compact_rows(AdamGroup& g, std::size_t dim, const std::vector<bool>& keep) {
  std::size_t w = 0;
  for (std::size_t i = 0; i < keep.size(); ++i) {
    if (!keep[i]) continue;
    for (std::size_t k = 0; k < dim; ++k) {
      g.m[w * dim + k] = g.m[i * dim + k];
      g.v[w * dim + k] = g.v[i * dim + k];
    }
    ++w;
  }
  g.m.resize(w * dim);
  g.v.resize(w * dim);
}

template <typename T>
void compact_vector(std::vector<T>& v, const std::vector<bool>& keep) {
  std::size_t w = 0;
  for (std::size_t i = 0; i < keep.size(); ++i)
    if (keep[i]) v[w++] = v[i];
  v.resize(w);
}


std::string fmt(double v, const char* spec = "%.8g") {
  char buf[64];
  std::snprintf(buf, sizeof buf, spec, v);
  return buf;
}

}  // namespace

double atf_lr(const TrainConfig& c, int iteration) {
  return exponential_lr(c.atf_lr_start, c.atf_lr_end, iteration, c.total_iterations);
}

double position_lr(const TrainConfig& c, int iteration) {
  return exponential_lr(c.position_lr_start, c.position_lr_end, iteration, c.total_iterations);
}

double camera_extent(const std::vector<ThermalView>& views) {
  if (views.empty()) return 1.0;
  Vec3 mean;
  for (const auto& v : views) mean += v.camera.center();
  mean = mean * (1.0 / static_cast<double>(views.size()));
  double radius = 0.0;
  for (const auto& v : views) radius = std::max(radius, norm(v.camera.center() - mean));
  radius *= 1.1;
  return radius > 0.0 ? radius : 1.0;
}

Model initialize_model(const SparseScene& scene, const TrainConfig& config) {
  if (scene.points.empty()) throw DataError("no seed points");
  Model m;
  std::vector<Vec3> pts;
  pts.reserve(scene.points.size());
  for (const auto& p : scene.points) pts.push_back(p.position);
  m.box = SceneBox::around(pts);

  const std::size_t n = pts.size();
  std::vector<double> dist2(n, 0.0);
  parallel_for(0, n, [&](std::size_t i) {
    std::array<double, 3> best{std::numeric_limits<double>::infinity(), std::numeric_limits<double>::infinity(),
                               std::numeric_limits<double>::infinity()};
    for (std::size_t j = 0; j < n; ++j) {
      if (j == i) continue;
      const Vec3 d = pts[j] - pts[i];
      double q = dot(d, d);
      for (double& b : best)
        if (q < b) std::swap(q, b);
    }
    double sum = 0.0;
    int used = 0;
    for (double b : best)
      if (std::isfinite(b)) {
        sum += b;
        ++used;
      }
    dist2[i] = used > 0 ? sum / used : 1e-4;
  });

  const double opacity_raw = logit(config.init_opacity);
  for (std::size_t i = 0; i < n; ++i) {
    Gaussian g;
    g.position = pts[i];
    const double s = std::log(std::sqrt(std::max(dist2[i], 1e-7)));
    g.log_scale = {s, s, s};
    g.rotation = {1, 0, 0, 0};
    g.opacity_raw = opacity_raw;
    g.sh[0] = (scene.points[i].radiance - kShDcOffset) / kShC0;
    m.cloud.push_back(g);
  }
  m.cloud.sh_degree_active = 0;

  if (config.use_atf) {
    Rng rng(config.seed + 1);
    m.atf = AtfNetwork::create(rng, config.atf_depth, config.atf_width, config.atf_frequencies);
  }
  if (config.use_tcm) {
    Rng rng(config.seed + 2);
    m.tcm = TcmNetwork::create(rng, 1);
  }
  return m;
}

TrainState initialize_state(const Model& model, const TrainConfig& config, double scene_extent) {
  TrainState s;
  s.rng = Rng(config.seed);
  s.scene_extent = scene_extent;
  const std::size_t n = model.cloud.size();
  size_group(s.position, n * kPositionDim);
  size_group(s.log_scale, n * kScaleDim);
  size_group(s.rotation, n * kRotationDim);
  size_group(s.opacity, n * kOpacityDim);
  size_group(s.sh, n * kShDim);
  if (model.atf) size_group(s.atf, model.atf->parameter_count());
  if (model.tcm) size_group(s.tcm, model.tcm->parameter_count());
  s.grad_accum.assign(n, 0.0);
  s.grad_count.assign(n, 0);
  return s;
}

PipelineOptions pipeline_options(const TrainConfig& config) {
  PipelineOptions o;
  o.use_atf = config.use_atf;
  o.use_tcm = config.use_tcm;
  o.render.background = config.background;
  return o;
}

DensifyStats densify_and_prune(Model& model, TrainState& state, const TrainConfig& config, bool densify) {
  GaussianCloud& cloud = model.cloud;
  const std::size_t n = cloud.size();
  DensifyStats stats;
  std::vector<bool> remove(n, false);

  if (densify) {
    const double size_limit = config.percent_dense * state.scene_extent;
    std::vector<std::size_t> clones, splits;
    for (std::size_t i = 0; i < n; ++i) {
      const double g = state.grad_count[i] > 0 ? state.grad_accum[i] / state.grad_count[i] : 0.0;
      if (!(g > config.densify_grad_threshold)) continue;
      const Vec3& ls = cloud.log_scales[i];
      const double max_scale = std::exp(std::max({ls.x, ls.y, ls.z}));
      (max_scale <= size_limit ? clones : splits).push_back(i);
    }
    // Each split adds two children and removes its parent.
    const std::size_t grown = n + clones.size() + splits.size();
    if (grown > static_cast<std::size_t>(config.max_gaussians)) {
      stats.capped = !(clones.empty() && splits.empty());
    } else {
      for (std::size_t i : clones) cloud.push_back(cloud.gaussian(i));
      for (std::size_t i : splits) {
        const Gaussian parent = cloud.gaussian(i);
        const Vec3 s = parent.scale();
        const Mat3 r = rotation_matrix(normalized(parent.rotation));
        for (int child = 0; child < 2; ++child) {
          Gaussian g = parent;
          const Vec3 sample{state.rng.normal() * s.x, state.rng.normal() * s.y, state.rng.normal() * s.z};
          g.position = parent.position + r * sample;
          g.log_scale = {std::log(s.x / kSplitScaleDivisor), std::log(s.y / kSplitScaleDivisor),
                         std::log(s.z / kSplitScaleDivisor)};
          cloud.push_back(g);
        }
        remove[i] = true;
      }
      const std::size_t added = clones.size() + 2 * splits.size();
      append_rows(state.position, kPositionDim, added);
      append_rows(state.log_scale, kScaleDim, added);
      append_rows(state.rotation, kRotationDim, added);
      append_rows(state.opacity, kOpacityDim, added);
      append_rows(state.sh, kShDim, added);
      remove.resize(cloud.size(), false);
      stats.cloned = clones.size();
      stats.split = splits.size();
    }
  }

  std::vector<bool> keep(cloud.size());
  for (std::size_t i = 0; i < cloud.size(); ++i) {
    const bool transparent = sigmoid(cloud.opacity_raw[i]) < config.prune_opacity;
    if (transparent && !remove[i]) ++stats.pruned;
    keep[i] = !(transparent || remove[i]);
  }
  if (std::count(keep.begin(), keep.end(), true) == 0) {
    // Never empty the scene: keep the most opaque Gaussian.
    const auto best = std::max_element(cloud.opacity_raw.begin(), cloud.opacity_raw.end()) - cloud.opacity_raw.begin();
    keep[static_cast<std::size_t>(best)] = true;
  }
  cloud.compact(keep);
  compact_rows(state.position, kPositionDim, keep);
  compact_rows(state.log_scale, kScaleDim, keep);
  compact_rows(state.rotation, kRotationDim, keep);
  compact_rows(state.opacity, kOpacityDim, keep);
  compact_rows(state.sh, kShDim, keep);
  state.grad_accum.assign(cloud.size(), 0.0);
  state.grad_count.assign(cloud.size(), 0);
  return stats;
}

void reset_opacity(Model& model, TrainState& state) {
  const double cap = logit(kOpacityResetCap);
  for (double& o : model.cloud.opacity_raw) o = std::min(o, cap);
  std::fill(state.opacity.m.begin(), state.opacity.m.end(), 0.0);
  std::fill(state.opacity.v.begin(), state.opacity.v.end(), 0.0);
}

std::string format_metric(double value) {
  if (std::isinf(value) && value > 0) return "inf";
  return fmt(value, "%.12g");
}

EvalReport evaluate(const Model& model, const Dataset& dataset, const std::vector<std::size_t>& indices,
                    const PipelineOptions& options) {
  EvalReport report;
  for (std::size_t idx : indices) {
    const ThermalView& v = dataset.views.at(idx);
    const RadianceImage out = clamp01(render_view(model, v.camera, v.time_norm, options));
    EvalRow row;
    row.frame_index = v.frame_index;
    row.name = idx < dataset.scene.views.size() ? dataset.scene.views[idx].name : std::to_string(idx);
    row.psnr = psnr(out, v.image);
    row.ssim = ssim(out, v.image);
    report.rows.push_back(row);
  }
  double sp = 0.0, ss = 0.0;
  for (const auto& r : report.rows) {
    sp += r.psnr;
    ss += r.ssim;
  }
  if (!report.rows.empty()) {
    report.mean_psnr = sp / static_cast<double>(report.rows.size());
    report.mean_ssim = ss / static_cast<double>(report.rows.size());
  }
  return report;
}

void write_eval_report(const EvalReport& report, std::ostream& out) {
  for (const auto& r : report.rows)
    out << "frame=" << r.frame_index << " name=" << r.name << " psnr=" << format_metric(r.psnr)
        << " ssim=" << format_metric(r.ssim) << "\n";
  out << "mean views=" << report.rows.size() << " psnr=" << format_metric(report.mean_psnr)
      << " ssim=" << format_metric(report.mean_ssim) << "\n";
}

Trainer::Trainer(const Dataset& dataset, const TrainConfig& config) : dataset_(dataset), config_(config) {
  config_.validate();
  if (dataset.split.train.empty()) throw DataError("dataset has no training views");
  model_ = initialize_model(dataset.scene, config_);
  state_ = initialize_state(model_, config_, camera_extent(dataset.views));
  corner_maps_.resize(dataset.views.size());
}

Trainer::Trainer(const Dataset& dataset, Checkpoint ck)
    : dataset_(dataset), config_(std::move(ck.config)), model_(std::move(ck.model)), state_(std::move(ck.state)) {
  config_.validate();
  if (dataset.split.train.empty()) throw DataError("dataset has no training views");
  if (config_.use_atf && !model_.atf) {
    Rng rng(config_.seed + 1);
    model_.atf = AtfNetwork::create(rng, config_.atf_depth, config_.atf_width, config_.atf_frequencies);
    size_group(state_.atf, model_.atf->parameter_count());
  }
  if (config_.use_tcm && !model_.tcm) {
    Rng rng(config_.seed + 2);
    model_.tcm = TcmNetwork::create(rng, 1);
    size_group(state_.tcm, model_.tcm->parameter_count());
  }
  corner_maps_.resize(dataset.views.size());
}

std::size_t Trainer::next_view() {
  if (state_.view_cursor >= state_.view_order.size()) {
    const auto& train = dataset_.split.train;
    state_.view_order.assign(train.begin(), train.end());
    for (std::size_t i = state_.view_order.size(); i > 1; --i) {
      const std::size_t j = static_cast<std::size_t>(state_.rng.below(i));
      std::swap(state_.view_order[i - 1], state_.view_order[j]);
    }
    state_.view_cursor = 0;
  }
  return state_.view_order[state_.view_cursor++];
}

std::string Trainer::diagnose(std::size_t view, const LossTerms& loss) const {
  std::ostringstream os;
  const auto& c = model_.cloud;
  std::size_t bad = 0;
  double max_pos = 0.0, max_scale = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < c.size(); ++i) {
    const Gaussian g = c.gaussian(i);
    bool finite = std::isfinite(g.opacity_raw);
    for (int a = 0; a < 3; ++a) {
      finite = finite && std::isfinite(g.position[a]) && std::isfinite(g.log_scale[a]);
      max_pos = std::max(max_pos, std::abs(g.position[a]));
      max_scale = std::max(max_scale, g.log_scale[a]);
    }
    for (double s : g.sh) finite = finite && std::isfinite(s);
    if (!finite) ++bad;
  }
  const std::string name = view < dataset_.scene.views.size() ? dataset_.scene.views[view].name : "?";
  os << "non-finite loss at iteration " << state_.iteration << " on view " << view << " (" << name
     << ", frame " << dataset_.views[view].frame_index << "): dis=" << loss.dis << " dssim=" << loss.dssim
     << " l1=" << loss.l1 << "; gaussians=" << c.size() << " non-finite=" << bad << " max|position|=" << max_pos
     << " max log-scale=" << max_scale;
  return os.str();
}

StepInfo Trainer::step() {
  const int it = state_.iteration;
  StepInfo info;

  if (it > 0 && it % config_.sh_degree_interval == 0 && model_.cloud.sh_degree_active < config_.sh_degree_max)
    ++model_.cloud.sh_degree_active;

  const std::size_t vi = next_view();
  info.view = vi;
  const ThermalView& view = dataset_.views[vi];
  const PipelineOptions options = pipeline_options(config_);
  const PipelineForward fwd = pipeline_forward(model_, view.camera, view.time_norm, options);

  const RadianceImage* corners = nullptr;
  if (config_.use_dis && it < config_.iter_t) {
    if (!corner_maps_[vi]) corner_maps_[vi] = corner_weights(view.image, config_.k_harris);
    corners = &*corner_maps_[vi];
  }
  const TotalLoss loss = total_loss(fwd.output, view.image, it, config_.loss_weights(), config_.use_dis, corners);
  info.loss = loss.terms;
  if (!std::isfinite(loss.terms.total)) throw NumericalError(diagnose(vi, loss.terms));

  ModelGradients grads = pipeline_backward(model_, fwd, loss.d_pred);
  GaussianGradients& gg = grads.gaussians;

  const double half_w = 0.5 * view.camera.width, half_h = 0.5 * view.camera.height;
  for (std::size_t i = 0; i < model_.cloud.size(); ++i) {
    if (!fwd.render.aux.splats[i].visible) continue;
    state_.grad_accum[i] += std::hypot(gg.d_mean2d_x[i] * half_w, gg.d_mean2d_y[i] * half_h);
    state_.grad_count[i] += 1;
  }

  GaussianCloud& c = model_.cloud;
  const double lr_pos = position_lr(config_, it);
  adam_step(flat(c.positions), flat(gg.d_position), state_.position, lr_pos * state_.scene_extent);
  adam_step(flat(c.log_scales), flat(gg.d_log_scale), state_.log_scale, config_.scale_lr);
  adam_step(flat(c.rotations), flat(gg.d_rotation), state_.rotation, config_.rotation_lr);
  adam_step(std::span<double>(c.opacity_raw), std::span<const double>(gg.d_opacity_raw), state_.opacity,
            config_.opacity_lr);
  adam_step(flat(c.sh), flat(gg.d_sh), state_.sh, config_.sh_lr);
  for (Quat& q : c.rotations) q = normalized(q);

  if (model_.atf && grads.atf) {
    adam_step(model_.atf->parameter_blocks(), std::as_const(*grads.atf).parameter_blocks(), state_.atf,
              atf_lr(config_, it));
    ++model_.atf->version;
  }
  if (model_.tcm && grads.tcm) {
    adam_step(model_.tcm->parameter_blocks(), std::as_const(*grads.tcm).parameter_blocks(), state_.tcm, lr_pos * state_.scene_extent);
    ++model_.tcm->version;
  }

  state_.iteration = it + 1;
  const int done = state_.iteration;
  if (done < config_.densify_until && done != config_.total_iterations) {
    if (done > config_.densify_from && done % config_.densify_interval == 0)
      info.densify = densify_and_prune(model_, state_, config_, true);
    if (done % config_.opacity_reset_interval == 0) {
      reset_opacity(model_, state_);
      info.opacity_reset = true;
    }
  }
  return info;
}

TrainOutcome train(const Dataset& dataset, const TrainConfig& config, const std::filesystem::path& out_dir,
                   std::ostream& console, std::optional<Checkpoint> resume) {
  std::filesystem::create_directories(out_dir);
  Trainer trainer = resume ? Trainer(dataset, std::move(*resume)) : Trainer(dataset, config);
  const TrainConfig& cfg = trainer.config();
  const int total = cfg.total_iterations;

  std::vector<int> stops;
  for (int c : cfg.checkpoint_iterations)
    if (c >= trainer.state().iteration && c <= total) stops.push_back(c);
  stops.push_back(total);
  std::sort(stops.begin(), stops.end());
  stops.erase(std::unique(stops.begin(), stops.end()), stops.end());

  std::ofstream log(out_dir / "metrics.log", resume ? std::ios::app : std::ios::trunc);
  if (!log) throw DataError("cannot write " + (out_dir / "metrics.log").string());
  log << "# thermalsplat metrics log\n";
  for (const auto& line : cfg.to_lines()) log << "# " << line << "\n";
  log << "# views=" << dataset.views.size() << " train=" << dataset.split.train.size()
      << " test=" << dataset.split.test.size() << " gaussians=" << trainer.model().cloud.size() << std::endl;

  TrainOutcome outcome;
  const PipelineOptions options = pipeline_options(cfg);
  LossTerms window{};
  int window_n = 0;

  auto at_stop = [&](int iteration) {
    const auto path = out_dir / ("checkpoint_" + std::to_string(iteration) + ".ckpt");
    outcome.final = trainer.checkpoint();
    save_checkpoint(outcome.final, path);
    outcome.checkpoints.push_back(path);
    EvalReport rep = evaluate(trainer.model(), dataset, dataset.split.test, options);
    rep.iteration = iteration;
    for (const auto& r : rep.rows)
      log << "eval iter=" << iteration << " frame=" << r.frame_index << " name=" << r.name
          << " psnr=" << format_metric(r.psnr) << " ssim=" << format_metric(r.ssim) << "\n";
    log << "eval_mean iter=" << iteration << " views=" << rep.rows.size() << " psnr=" << format_metric(rep.mean_psnr)
        << " ssim=" << format_metric(rep.mean_ssim) << "\n";
    log.flush();
    console << "[checkpoint " << iteration << "] " << path.filename().string()
            << " test psnr=" << format_metric(rep.mean_psnr) << " ssim=" << format_metric(rep.mean_ssim) << "\n";
    outcome.evaluations.push_back(std::move(rep));
  };

  std::size_t next_stop = 0;
  while (next_stop < stops.size() && stops[next_stop] <= trainer.state().iteration) {
    if (stops[next_stop] == trainer.state().iteration) at_stop(trainer.state().iteration);
    ++next_stop;
  }
  while (trainer.state().iteration < total) {
    const StepInfo info = trainer.step();
    const int done = trainer.state().iteration;
    window.dis += info.loss.dis;
    window.dssim += info.loss.dssim;
    window.l1 += info.loss.l1;
    window.total += info.loss.total;
    ++window_n;
    if (info.densify && info.densify->capped)
      console << "warning: densification skipped at iteration " << done << " (max_gaussians=" << cfg.max_gaussians
              << ")\n";
    if (done % cfg.log_interval == 0 || done == total) {
      const double k = 1.0 / window_n;
      log << "iter=" << done << " loss=" << fmt(window.total * k) << " dis=" << fmt(window.dis * k)
          << " dssim=" << fmt(window.dssim * k) << " l1=" << fmt(window.l1 * k)
          << " gaussians=" << trainer.model().cloud.size() << " sh_degree=" << trainer.model().cloud.sh_degree_active
          << std::endl;
      console << "iter " << done << "/" << total << "  loss " << fmt(window.total * k, "%.6f") << "  l1 "
              << fmt(window.l1 * k, "%.6f") << "  gaussians " << trainer.model().cloud.size() << "\n";
      window = {};
      window_n = 0;
    }
    if (next_stop < stops.size() && done == stops[next_stop]) {
      at_stop(done);
      ++next_stop;
    }
  }
  if (outcome.checkpoints.empty()) outcome.final = trainer.checkpoint();
  return outcome;
}

}  // namespace thermalsplat
