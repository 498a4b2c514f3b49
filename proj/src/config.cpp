#include "evtrap/config.hpp"

#include <charconv>
#include <cmath>
#include <limits>
#include <fstream>
#include <functional>
#include <istream>
#include <sstream>

#include <fmt/format.h>

#include "evtrap/fields.hpp"

namespace evtrap {

namespace {

std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

double parse_double(std::string_view key, std::string_view text) {
  double v = 0;
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  if (ec != std::errc() || ptr != text.data() + text.size() || text.empty())
    throw ConfigError(std::string(key), fmt::format("'{}' is not a number", text));
  return v;
}

std::uint64_t parse_unsigned(std::string_view key, std::string_view text) {
  std::uint64_t v = 0;
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  if (ec != std::errc() || ptr != text.data() + text.size() || text.empty())
    throw ConfigError(std::string(key), fmt::format("'{}' is not a non-negative integer", text));
  return v;
}

bool parse_bool(std::string_view key, std::string_view text) {
  if (text == "true" || text == "1" || text == "yes" || text == "on") return true;
  if (text == "false" || text == "0" || text == "no" || text == "off") return false;
  throw ConfigError(std::string(key), fmt::format("'{}' is not a boolean", text));
}

std::string format_double(double v) { return fmt::format("{}", v); }

struct Entry {
  const char* key;
  std::function<void(RunConfig&, std::string_view, std::string_view)> set;
  std::function<std::string(const RunConfig&)> get;
};

Entry number(const char* key, double RunConfig::*field) {
  return {key, [field](RunConfig& c, std::string_view k, std::string_view v) { c.*field = parse_double(k, v); },
          [field](const RunConfig& c) { return format_double(c.*field); }};
}

Entry physical(const char* key, double PhysicalParams::*field) {
  return {key,
          [field](RunConfig& c, std::string_view k, std::string_view v) { c.physical.*field = parse_double(k, v); },
          [field](const RunConfig& c) { return format_double(c.physical.*field); }};
}

template <typename T>
Entry integer(const char* key, T RunConfig::*field) {
  return {key,
          [field](RunConfig& c, std::string_view k, std::string_view v) {
            const std::uint64_t parsed = parse_unsigned(k, v);
            if (parsed > std::numeric_limits<T>::max()) throw ConfigError(std::string(k), "value out of range");
            c.*field = static_cast<T>(parsed);
          },
          [field](const RunConfig& c) { return std::to_string(c.*field); }};
}

Entry text(const char* key, std::string RunConfig::*field) {
  return {key, [field](RunConfig& c, std::string_view, std::string_view v) { c.*field = std::string(v); },
          [field](const RunConfig& c) { return c.*field; }};
}

const std::vector<Entry>& entries() {
  static const std::vector<Entry> table = [] {
    std::vector<Entry> t{
        physical("gamma", &PhysicalParams::gamma),
        physical("kappa", &PhysicalParams::kappa),
        physical("g", &PhysicalParams::g),
        physical("delta_A", &PhysicalParams::delta_A),
        physical("delta_C", &PhysicalParams::delta_C),
        physical("eta_r", &PhysicalParams::eta_r),
        physical("eta_b", &PhysicalParams::eta_b),
        physical("k", &PhysicalParams::k),
        physical("mass", &PhysicalParams::mass),
        physical("c3_vdw", &PhysicalParams::c3_vdw),
        physical("u2_bar", &PhysicalParams::u2_bar),
        physical("k_opt_r", &PhysicalParams::k_opt_r),
        physical("k_opt_b", &PhysicalParams::k_opt_b),
        number("field_noise_factor", &RunConfig::field_noise_factor),
        number("dt", &RunConfig::dt),
        number("horizon", &RunConfig::horizon),
        {"noise", [](RunConfig& c, std::string_view k, std::string_view v) { c.noise = parse_bool(k, v); },
         [](const RunConfig& c) { return std::string(c.noise ? "true" : "false"); }},
        text("scheme", &RunConfig::scheme),
        {"noise_substeps",
         [](RunConfig& c, std::string_view k, std::string_view v) {
           const auto parsed = parse_unsigned(k, v);
           if (parsed < 1 || parsed > 64) throw ConfigError(std::string(k), "must be in [1, 64]");
           c.noise_substeps = static_cast<int>(parsed);
         },
         [](const RunConfig& c) { return std::to_string(c.noise_substeps); }},
        integer("n_traj", &RunConfig::n_traj),
        integer("seed", &RunConfig::seed),
        integer("workers", &RunConfig::workers),
        number("bin_width", &RunConfig::bin_width),
        text("ic", &RunConfig::ic),
        {"x0",
         [](RunConfig& c, std::string_view k, std::string_view v) {
           if (v == "auto")
             c.x0.reset();
           else
             c.x0 = parse_double(k, v);
         },
         [](const RunConfig& c) { return c.x0 ? format_double(*c.x0) : std::string("auto"); }},
        number("v0", &RunConfig::v0),
        number("x0_spread", &RunConfig::x0_spread),
        number("v0_spread", &RunConfig::v0_spread),
        number("x_escape", &RunConfig::x_escape),
        number("x_stick", &RunConfig::x_stick),
        text("out", &RunConfig::out),
        integer("stride", &RunConfig::stride),
        number("grid_min", &RunConfig::grid_min),
        number("grid_max", &RunConfig::grid_max),
        number("grid_step", &RunConfig::grid_step),
    };
    return t;
  }();
  return table;
}

}  // namespace

const std::vector<std::string>& config_keys() {
  static const std::vector<std::string> keys = [] {
    std::vector<std::string> k;
    for (const auto& e : entries()) k.emplace_back(e.key);
    return k;
  }();
  return keys;
}

void apply_setting(RunConfig& config, std::string_view key, std::string_view value) {
  for (const auto& e : entries()) {
    if (key == e.key) {
      e.set(config, key, trim(value));
      return;
    }
  }
  throw ConfigError(std::string(key), "unknown configuration key");
}

RunConfig parse_config(std::istream& in, RunConfig base) {
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    std::string_view view(line);
    if (const auto hash = view.find('#'); hash != std::string_view::npos) view = view.substr(0, hash);
    view = trim(view);
    if (view.empty()) continue;
    const auto eq = view.find('=');
    if (eq == std::string_view::npos)
      throw ConfigError(std::string(view), fmt::format("line {}: expected 'key = value'", line_no));
    const std::string_view key = trim(view.substr(0, eq));
    apply_setting(base, key, trim(view.substr(eq + 1)));
  }
  return base;
}

RunConfig load_config_file(const std::filesystem::path& path, RunConfig base) {
  std::ifstream in(path);
  if (!in) throw ConfigError("", fmt::format("cannot read config file '{}'", path.string()));
  return parse_config(in, std::move(base));
}

void validate(const RunConfig& c) {
  if (!(c.dt > 0)) throw ConfigError("dt", "must be positive");
  if (!(c.horizon > 0)) throw ConfigError("horizon", "must be positive");
  if (c.scheme != "heun" && c.scheme != "rk4" && c.scheme != "euler")
    throw ConfigError("scheme", "must be 'heun', 'rk4' or 'euler'");
  if (c.n_traj < 1) throw ConfigError("n_traj", "must be >= 1");
  if (c.workers < 1) throw ConfigError("workers", "must be >= 1");
  if (!(c.bin_width > 0)) throw ConfigError("bin_width", "must be positive");
  if (c.ic != "fixed" && c.ic != "uniform" && c.ic != "gaussian")
    throw ConfigError("ic", "must be 'fixed', 'uniform' or 'gaussian'");
  if (c.x0 && !(*c.x0 > 0)) throw ConfigError("x0", "must be positive");
  if (!std::isfinite(c.v0)) throw ConfigError("v0", "must be finite");
  if (!(c.x0_spread >= 0)) throw ConfigError("x0_spread", "must be non-negative");
  if (!(c.v0_spread >= 0)) throw ConfigError("v0_spread", "must be non-negative");
  if (!(c.x_stick > 0)) throw ConfigError("x_stick", "must be positive");
  if (!(c.x_escape > c.x_stick)) throw ConfigError("x_escape", "must exceed x_stick");
  if (!(c.grid_min > 0)) throw ConfigError("grid_min", "must be positive");
  if (!(c.grid_max >= c.grid_min)) throw ConfigError("grid_max", "must be >= grid_min");
  if (!(c.grid_step > 0)) throw ConfigError("grid_step", "must be positive");
  if (c.out.empty()) throw ConfigError("out", "must not be empty");
}

std::string to_config_text(const RunConfig& config) {
  std::string text;
  for (const auto& e : entries()) text += fmt::format("{} = {}\n", e.key, e.get(config));
  return text;
}

nlohmann::ordered_json to_json(const RunConfig& config) {
  nlohmann::ordered_json j;
  for (const auto& e : entries()) j[e.key] = e.get(config);
  return j;
}

Model make_model(const RunConfig& config) { return Model::from(config.physical, config.field_noise_factor); }

TrajectorySettings trajectory_settings(const RunConfig& c) {
  TrajectorySettings s;
  s.horizon = c.horizon;
  s.dt = c.dt;
  s.noiseless = !c.noise;
  s.thresholds = {c.x_escape, c.x_stick};
  s.scheme = c.scheme == "euler" ? StochasticScheme::euler_maruyama
             : c.scheme == "rk4"   ? StochasticScheme::rk4_additive
                                   : StochasticScheme::heun_additive;
  s.noise_substeps = c.noise_substeps;
  return s;
}

EnsembleSettings ensemble_settings(const RunConfig& c) {
  EnsembleSettings s;
  s.n_traj = c.n_traj;
  s.seed = c.seed;
  s.workers = c.workers;
  s.bin_width = c.bin_width;
  s.trajectory = trajectory_settings(c);
  return s;
}

InitialCondition initial_condition(const RunConfig& c, const Model& model) {
  InitialCondition ic;
  if (c.x0) {
    ic.x0 = *c.x0;
  } else {
    ic = default_initial_condition(model, characterize_trap(model));
  }
  ic.v0 = c.v0;
  ic.x_spread = c.x0_spread;
  ic.v_spread = c.v0_spread;
  ic.distribution = c.ic == "uniform"    ? IcDistribution::uniform
                    : c.ic == "gaussian" ? IcDistribution::gaussian
                                         : IcDistribution::fixed;
  return ic;
}

}  // namespace evtrap
