#include "thermalsplat/config.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <sstream>

#include "thermalsplat/error.hpp"

namespace thermalsplat {
namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

std::string format(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}
std::string format(int v) { return std::to_string(v); }
std::string format(std::uint64_t v) { return std::to_string(v); }
std::string format(bool v) { return v ? "true" : "false"; }
std::string format(const std::vector<int>& v) {
  std::string s;
  for (std::size_t i = 0; i < v.size(); ++i) s += (i ? "," : "") + std::to_string(v[i]);
  return s;
}

[[noreturn]] void bad_value(const std::string& key, const std::string& value) {
  throw UsageError("invalid value '" + value + "' for config key '" + key + "'");
}

void parse(const std::string& key, const std::string& s, double& out) {
  try {
    std::size_t used = 0;
    out = std::stod(s, &used);
    if (used != s.size()) bad_value(key, s);
  } catch (const std::logic_error&) {
    bad_value(key, s);
  }
}
template <typename Int>
void parse_int(const std::string& key, const std::string& s, Int& out) {
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
  if (ec != std::errc{} || ptr != s.data() + s.size()) bad_value(key, s);
}
void parse(const std::string& key, const std::string& s, int& out) { parse_int(key, s, out); }
void parse(const std::string& key, const std::string& s, std::uint64_t& out) { parse_int(key, s, out); }
void parse(const std::string& key, const std::string& s, bool& out) {
  if (s == "1" || s == "true" || s == "on") out = true;
  else if (s == "0" || s == "false" || s == "off") out = false;
  else bad_value(key, s);
}
void parse(const std::string& key, const std::string& s, std::vector<int>& out) {
  out.clear();
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    int v = 0;
    parse(key, trim(item), v);
    out.push_back(v);
  }
}

struct Field {
  const char* key;
  std::function<void(TrainConfig&, const std::string&)> set;
  std::function<std::string(const TrainConfig&)> get;
};

template <typename T>
Field field(const char* key, T TrainConfig::*member) {
  return {key, [key, member](TrainConfig& c, const std::string& v) { parse(key, v, c.*member); },
          [member](const TrainConfig& c) { return format(c.*member); }};
}

const std::vector<Field>& fields() {
  static const std::vector<Field> table = {
      field("total_iterations", &TrainConfig::total_iterations),
      field("atf_lr_start", &TrainConfig::atf_lr_start),
      field("atf_lr_end", &TrainConfig::atf_lr_end),
      field("position_lr_start", &TrainConfig::position_lr_start),
      field("position_lr_end", &TrainConfig::position_lr_end),
      field("sh_lr", &TrainConfig::sh_lr),
      field("opacity_lr", &TrainConfig::opacity_lr),
      field("scale_lr", &TrainConfig::scale_lr),
      field("rotation_lr", &TrainConfig::rotation_lr),
      field("densify_interval", &TrainConfig::densify_interval),
      field("densify_from", &TrainConfig::densify_from),
      field("densify_until", &TrainConfig::densify_until),
      field("densify_grad_threshold", &TrainConfig::densify_grad_threshold),
      field("prune_opacity", &TrainConfig::prune_opacity),
      field("opacity_reset_interval", &TrainConfig::opacity_reset_interval),
      field("percent_dense", &TrainConfig::percent_dense),
      field("max_gaussians", &TrainConfig::max_gaussians),
      field("sh_degree_max", &TrainConfig::sh_degree_max),
      field("sh_degree_interval", &TrainConfig::sh_degree_interval),
      field("init_opacity", &TrainConfig::init_opacity),
      field("use_atf", &TrainConfig::use_atf),
      field("use_tcm", &TrainConfig::use_tcm),
      field("use_dis", &TrainConfig::use_dis),
      field("lambda_dis", &TrainConfig::lambda_dis),
      field("lambda_dssim", &TrainConfig::lambda_dssim),
      field("iter_t", &TrainConfig::iter_t),
      field("k_harris", &TrainConfig::k_harris),
      field("atf_depth", &TrainConfig::atf_depth),
      field("atf_width", &TrainConfig::atf_width),
      field("atf_frequencies", &TrainConfig::atf_frequencies),
      field("background", &TrainConfig::background),
      field("seed", &TrainConfig::seed),
      field("checkpoint_iterations", &TrainConfig::checkpoint_iterations),
      field("log_interval", &TrainConfig::log_interval),
  };
  return table;
}

}  // namespace

void TrainConfig::set(const std::string& key, const std::string& value) {
  for (const Field& f : fields()) {
    if (key == f.key) {
      f.set(*this, trim(value));
      return;
    }
  }
  throw UsageError("unknown config key '" + key + "'");
}

void TrainConfig::apply(const std::string& assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string::npos) throw UsageError("expected key=value, got '" + assignment + "'");
  set(trim(assignment.substr(0, eq)), assignment.substr(eq + 1));
}

void TrainConfig::apply_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw UsageError("cannot read config file " + path.string());
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const std::string t = trim(line.substr(0, line.find('#')));
    if (t.empty()) continue;
    try {
      apply(t);
    } catch (const UsageError& e) {
      throw UsageError(path.string() + ":" + std::to_string(lineno) + ": " + e.what());
    }
  }
}

std::vector<std::string> TrainConfig::to_lines() const {
  std::vector<std::string> out;
  for (const Field& f : fields()) out.push_back(std::string(f.key) + "=" + f.get(*this));
  return out;
}

std::string TrainConfig::to_text() const {
  std::string s;
  for (const auto& line : to_lines()) s += line + "\n";
  return s;
}

TrainConfig TrainConfig::from_text(const std::string& text) {
  TrainConfig c;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line))
    if (!trim(line).empty()) c.apply(line);
  return c;
}

void TrainConfig::validate() const {
  auto fail = [](const std::string& why) { throw UsageError("invalid config: " + why); };
  if (total_iterations < 0) fail("total_iterations must be >= 0");
  if (!(atf_lr_end > 0.0 && atf_lr_end <= atf_lr_start)) fail("need 0 < atf_lr_end <= atf_lr_start");
  if (!(position_lr_end > 0.0 && position_lr_end <= position_lr_start))
    fail("need 0 < position_lr_end <= position_lr_start");
  if (!(sh_lr > 0 && opacity_lr > 0 && scale_lr > 0 && rotation_lr > 0)) fail("learning rates must be positive");
  if (densify_interval <= 0 || opacity_reset_interval <= 0 || sh_degree_interval <= 0 || log_interval <= 0)
    fail("intervals must be positive");
  if (sh_degree_max < 0 || sh_degree_max > 3) fail("sh_degree_max must be in [0, 3]");
  if (!(init_opacity > 0.0 && init_opacity < 1.0)) fail("init_opacity must be in (0, 1)");
  if (atf_depth < 1 || atf_width < 1 || atf_frequencies < 1) fail("ATF shape must be positive");
  if (max_gaussians < 1) fail("max_gaussians must be positive");
  try {
    loss_weights().validate();
  } catch (const std::invalid_argument& e) {
    fail(e.what());
  }
}

double exponential_lr(double lr_start, double lr_end, int iteration, int total) {
  if (total <= 0) return lr_start;
  const double t = std::clamp(static_cast<double>(iteration) / static_cast<double>(total), 0.0, 1.0);
  return std::exp((1.0 - t) * std::log(lr_start) + t * std::log(lr_end));
}

}  // namespace thermalsplat
