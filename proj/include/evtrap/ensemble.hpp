#pragma once

#include <array>
#include <complex>
#include <cstdint>
#include <optional>
#include <vector>

#include "evtrap/fields.hpp"
#include "evtrap/params.hpp"
#include "evtrap/sde.hpp"

namespace evtrap {

struct BoundaryThresholds {
  double x_escape = 8.0;  // 1/k
  double x_stick = 0.1;   // 1/k
};

enum class Boundary { inside, escaped, stuck };

// escaped iff x >= x_escape moving outward; stuck iff x <= x_stick.
Boundary classify_boundary(const SystemState& state, const BoundaryThresholds& thresholds);

// epsilon p^2 / 2 + U_adiabatic(x), hbar gamma.
double mechanical_energy(const SystemState& state, const Model& model);

enum class IcDistribution { fixed, uniform, gaussian };

struct InitialCondition {
  double x0 = 0;    // 1/k
  double v0 = 0;    // m/s, negative = towards the surface
  IcDistribution distribution = IcDistribution::fixed;
  double x_spread = 0;  // half-width (uniform) or standard deviation (gaussian), 1/k
  double v_spread = 0;  // same for v0, m/s
  // Initial amplitudes; local steady state when unset.
  std::optional<std::array<std::complex<double>, 2>> alpha0;
};

// Atom released at rest on the outer slope where U(x0) = -0.01 depth, fields
// at their local steady state.
InitialCondition default_initial_condition(const Model& model, const TrapProfile& trap);

// Draws the starting state. Positions at or inside the barrier are redrawn.
SystemState sample_initial_state(const InitialCondition& ic, const Model& model, double x_barrier, Rng& rng);

enum class TrajectoryStatus { trapped, escaped, stuck, aborted };
const char* name(TrajectoryStatus status);

struct SeriesSample {
  double t, x, p, n_red, n_blue, e_mech;
};

struct TurningPoint {
  double t, x, e_mech;
};

struct TrajectorySettings {
  double horizon = 2e4;  // 1/gamma
  double dt = 5e-3;      // 1/gamma
  bool noiseless = false;
  BoundaryThresholds thresholds;
  StochasticScheme scheme = StochasticScheme::heun_additive;
  int noise_substeps = 1;
  double bounce_guard = 10.0;  // minimum spacing of counted turning points, 1/gamma
};

struct RecordSpec {
  std::size_t stride = 0;   // series every `stride` steps; 0 disables
  double bin_width = 0;     // mechanical energy every bin_width; 0 disables
  bool turning_points = false;
};

struct TrajectoryOutcome {
  TrajectoryStatus status = TrajectoryStatus::trapped;
  double t_end = 0;
  int bounce_count = 0;
  SystemState initial_state;
  SystemState final_state;
  double initial_energy = 0;
  double final_energy = 0;  // NaN unless the atom ends inside
  // Mean kinetic energy over the last 10% of the horizon; NaN unless trapped.
  double tail_kinetic = 0;
  std::uint64_t noise_fallbacks = 0;
  std::vector<SeriesSample> series;
  std::vector<TurningPoint> outer_turns;
  // Mechanical energy at t = k * bin_width for every bin the atom is still inside.
  std::vector<double> bin_energy;
};

// Integrates single trajectories for one model; the trap characterization
// and the step bound are computed once.
class TrajectoryRunner {
 public:
  TrajectoryRunner(const Model& model, TrajectorySettings settings);

  TrajectoryOutcome run(const InitialCondition& ic, Rng& rng, const RecordSpec& record = {}) const;

  const Model& model() const { return *model_; }
  const TrajectorySettings& settings() const { return settings_; }
  // Inner barrier position, 0 if the potential has no well.
  double x_barrier() const { return x_barrier_; }

 private:
  const Model* model_;
  TrajectorySettings settings_;
  double x_barrier_ = 0;
  double max_rate_ = 0;
};

TrajectoryOutcome run_trajectory(const InitialCondition& ic, const Model& model, const TrajectorySettings& settings,
                                 Rng& rng, const RecordSpec& record = {});

struct TrajectorySummary {
  TrajectoryStatus status;
  double t_end;
  int bounce_count;
};

struct EnsembleSettings {
  std::size_t n_traj = 1000;
  std::uint64_t seed = 1;
  unsigned workers = 1;
  double bin_width = 50.0;
  TrajectorySettings trajectory;
};

struct EnsembleStats {
  std::size_t n_traj = 0;
  std::uint64_t seed = 0;
  double bin_width = 0;
  std::vector<double> bin_times;
  std::vector<double> p_trapped;
  std::vector<std::size_t> n_inside;
  // Mean mechanical energy over the trajectories still inside; NaN if none.
  std::vector<double> e_mech;
  double plateau_probability = 0;
  double plateau_stderr = 0;
  double e_kin_final = 0;  // NaN if nothing is trapped
  std::size_t n_trapped = 0;
  std::size_t n_escaped = 0;
  std::size_t n_stuck = 0;
  std::size_t n_aborted = 0;
  std::uint64_t noise_fallbacks = 0;
  std::vector<TrajectorySummary> trajectories;

  // Fraction still inside at time t (right-continuous step function).
  double trapped_at(double t) const;
};

// Trajectory i uses make_stream(seed, i); results do not depend on `workers`.
EnsembleStats run_ensemble(const InitialCondition& ic, const Model& model, const EnsembleSettings& settings);

}  // namespace evtrap
