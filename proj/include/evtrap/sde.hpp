#pragma once

#include <array>
#include <complex>
#include <cstdint>
#include <stdexcept>

#include <boost/random/mersenne_twister.hpp>

#include "evtrap/params.hpp"

namespace evtrap {

// Atom phase-space point plus the two cavity amplitudes, internal units.
struct SystemState {
  double x = 0;   // 1/k
  double p = 0;   // hbar k
  std::array<std::complex<double>, 2> alpha{};
  double t = 0;   // 1/gamma

  std::complex<double>& amplitude(Mode m) { return alpha[index(m)]; }
  const std::complex<double>& amplitude(Mode m) const { return alpha[index(m)]; }
  double photons(Mode m) const { return std::norm(alpha[index(m)]); }
};

// Fields at their local steady state alpha_ss(x).
SystemState steady_state_at(double x, double p, const Model& model);

struct StateDerivative {
  double dx = 0;
  double dp = 0;
  std::array<std::complex<double>, 2> dalpha{};
};

StateDerivative drift(const SystemState& state, const Model& model);

// Ordering of the noise vector.
enum NoiseComponent : std::size_t { kNoiseP = 0, kNoiseRedRe, kNoiseRedIm, kNoiseBlueRe, kNoiseBlueIm };
inline constexpr std::size_t kNoiseDim = 5;

using Matrix5 = std::array<std::array<double, kNoiseDim>, kNoiseDim>;
using Vector5 = std::array<double, kNoiseDim>;

// Covariance per unit time of (xi_p, Re xi_r, Im xi_r, Re xi_b, Im xi_b).
struct NoiseCovariance {
  Matrix5 m{};
  double operator()(std::size_t i, std::size_t j) const { return m[i][j]; }
};

NoiseCovariance noise_covariance(const SystemState& state, const Model& model);

// Lower-triangular L with L L^T = cov. Zero pivots are accepted when the
// rest of their column vanishes too, so semidefinite matrices factor.
// Returns false if the matrix is not positive semidefinite within tolerance.
bool factorize(const NoiseCovariance& cov, Matrix5& lower);

using Rng = boost::random::mt19937_64;

// Independent stream for trajectory `index` of a run seeded with `master_seed`.
Rng make_stream(std::uint64_t master_seed, std::uint64_t index);

double standard_normal(Rng& rng);

struct NoiseDiagnostics {
  // Steps where the full covariance did not factor and the cross terms
  // between momentum and field noise were dropped.
  std::uint64_t fallbacks = 0;
};

// Gaussian increment with covariance cov * dt.
Vector5 sample_noise(const NoiseCovariance& cov, double dt, Rng& rng, NoiseDiagnostics& diagnostics);

// Same, from a given vector of independent standard normals.
Vector5 correlate_noise(const NoiseCovariance& cov, double dt, const Vector5& normals,
                        NoiseDiagnostics& diagnostics);

// Compact form of noise_covariance: the only nonzero off-diagonal entries
// couple the momentum noise to the four field quadratures.
struct NoiseTerms {
  double var_p = 0;
  std::array<double, 2> var_quadrature{};  // per mode, same for Re and Im
  Vector5 cross{};                         // cov(xi_p, component i), i >= 1
};

NoiseTerms noise_terms(const SystemState& state, const Model& model);

// Correlated increment from the compact terms, factoring the quadratures
// first and the momentum through its Schur complement. Drops the cross
// terms (and counts a fallback) when the complement is negative.
Vector5 correlate_noise(const NoiseTerms& terms, double dt, const Vector5& normals, NoiseDiagnostics& diagnostics);

// One classical RK4 step of the noiseless equations of motion.
SystemState step_deterministic(const SystemState& state, double dt, const Model& model);

// One explicit Euler step of the drift.
SystemState step_euler(const SystemState& state, double dt, const Model& model);

struct PhasePoint {
  double x;
  double p;
};

// RK4 step of the conservative limit: fields slaved to alpha_ss(x), so the
// atom moves in the adiabatic potential.
PhasePoint step_conservative(PhasePoint point, double dt, const Model& model);

class StepTooLarge : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Drift integrators for the stochastic step. The noise increment is always
// the Ito increment built from the start-of-step state and added once.
enum class StochasticScheme {
  heun_additive,   // explicit trapezoidal drift
  rk4_additive,    // classical RK4 drift
  euler_maruyama,  // explicit Euler drift
};

// Largest rate the step has to resolve: max(kappa, |Delta_C|, omega_trap),
// internal units. The trap frequency is omitted when there is no trap.
double max_resolved_rate(const Model& model);

struct StepperOptions {
  double dt = 5e-3;
  StochasticScheme scheme = StochasticScheme::heun_additive;
  // Number of independent normal vectors combined into one increment. Two
  // runs with (dt, substeps=2) and (dt/2, substeps=1) then share their
  // Brownian paths.
  int noise_substeps = 1;
};

// Fixed-step stochastic integrator. Checks dt * max_resolved_rate <= 0.1 on
// construction.
class StochasticStepper {
 public:
  StochasticStepper(const Model& model, StepperOptions options);
  StochasticStepper(const Model& model, StepperOptions options, double max_rate);

  SystemState step(const SystemState& state, Rng& rng);
  SystemState step_noiseless(const SystemState& state) const;

  const StepperOptions& options() const { return options_; }
  const NoiseDiagnostics& diagnostics() const { return diagnostics_; }

 private:
  const Model* model_;
  StepperOptions options_;
  NoiseDiagnostics diagnostics_;
};

// Convenience wrapper around StochasticStepper; recomputes the step bound on
// every call, so loops should hold a stepper instead.
SystemState step_stochastic(const SystemState& state, double dt, const Model& model, Rng& rng,
                            NoiseDiagnostics& diagnostics,
                            StochasticScheme scheme = StochasticScheme::heun_additive);

}  // namespace evtrap
