#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"

#include "evtrap/ensemble.hpp"
#include "evtrap/params.hpp"

namespace evtrap {

class ConfigError : public std::runtime_error {
 public:
  ConfigError(std::string key, const std::string& what)
      : std::runtime_error(key.empty() ? what : key + ": " + what), key_(std::move(key)) {}
  const std::string& key() const noexcept { return key_; }

 private:
  std::string key_;
};

// Everything a run needs. Physical parameters are SI; times (dt, horizon,
// bin_width) are in 1/gamma; positions in 1/k; velocities in m/s.
struct RunConfig {
  PhysicalParams physical = default_params();
  double field_noise_factor = 2.0;

  double dt = 5e-3;
  double horizon = 2e4;
  bool noise = true;
  std::string scheme = "heun";  // heun | rk4 | euler (drift of the noisy step)
  int noise_substeps = 1;

  std::size_t n_traj = 1000;
  std::uint64_t seed = 1;
  unsigned workers = 1;
  double bin_width = 50.0;

  std::string ic = "fixed";  // fixed | uniform | gaussian
  std::optional<double> x0;  // unset: U(x0) = -0.01 depth on the outer slope
  double v0 = 0.0;
  double x0_spread = 0.0;
  double v0_spread = 0.0;
  double x_escape = 8.0;
  double x_stick = 0.1;

  std::string out = ".";
  std::size_t stride = 200;
  double grid_min = 0.05;
  double grid_max = 5.0;
  double grid_step = 0.005;
};

// Recognized keys, in the order they are written out.
const std::vector<std::string>& config_keys();

// Sets one key from its text form. Throws ConfigError naming the key.
void apply_setting(RunConfig& config, std::string_view key, std::string_view value);

// Flat "key = value" lines; '#' starts a comment. Unknown keys are errors.
RunConfig parse_config(std::istream& in, RunConfig base = {});
RunConfig load_config_file(const std::filesystem::path& path, RunConfig base = {});

// Checks the run settings (not the physics). Throws ConfigError.
void validate(const RunConfig& config);

// Re-readable text form with every key; values round-trip exactly.
std::string to_config_text(const RunConfig& config);
nlohmann::ordered_json to_json(const RunConfig& config);

// Physical model; throws ValidationError for bad physics.
Model make_model(const RunConfig& config);
TrajectorySettings trajectory_settings(const RunConfig& config);
EnsembleSettings ensemble_settings(const RunConfig& config);
// Configured initial condition; x0 defaults from the trap profile.
InitialCondition initial_condition(const RunConfig& config, const Model& model);

}  // namespace evtrap
