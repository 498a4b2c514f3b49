#pragma once

#include <array>
#include <cstddef>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace evtrap {

// Physical constants (SI, CODATA 2018).
inline constexpr double kHbar = 1.054571817e-34;
inline constexpr double kAtomicMassUnit = 1.66053906660e-27;
inline constexpr double kMassRb85 = 84.911789738 * kAtomicMassUnit;
inline constexpr double kPi = 3.14159265358979323846;

// Raised for parameter sets that violate a model invariant. `field()` names
// the offending parameter.
class ValidationError : public std::invalid_argument {
 public:
  ValidationError(std::string field, const std::string& what)
      : std::invalid_argument(field + ": " + what), field_(std::move(field)) {}
  const std::string& field() const noexcept { return field_; }

 private:
  std::string field_;
};

// Input parameters, SI units. Rates are angular (s^-1).
struct PhysicalParams {
  double gamma;     // atomic linewidth
  double kappa;     // cavity linewidth
  double g;         // dipole coupling
  double delta_A;   // atom-pump detuning magnitude, sign applied per mode
  double delta_C;   // pump-cavity detuning (negative)
  double eta_r;     // red pump amplitude
  double eta_b;     // blue pump amplitude
  double k;         // evanescent decay constant of the red mode, m^-1
  double mass;      // kg
  double c3_vdw;    // Van der Waals coefficient, units hbar*gamma/(k x)^3
  double u2_bar;    // angular factor of spontaneous emission
  double k_opt_r;   // optical wavevector of the red transition, m^-1
  double k_opt_b;   // optical wavevector of the blue transition, m^-1
};

// The configuration of the bichromatic trap: 85Rb, 795/780 nm transitions,
// gamma = 2e7 s^-1, kappa = gamma/2, g = 2.5 gamma, Delta_A = 1e3 gamma,
// Delta_C = -0.8 kappa, 1/k = 0.3 um, eta_r = 60 gamma, eta_b = 75 gamma.
PhysicalParams default_params();

// Throws ValidationError on the first violated invariant.
void validate(const PhysicalParams& params);

struct DerivedParams {
  double u0;        // light shift per photon, s^-1
  double gamma0;    // scattering rate per photon, s^-1
  double n_sat;     // saturation photon number
  double epsilon;   // recoil parameter hbar k^2 / (M gamma)
  double n_empty_r;
  double n_empty_b;
  int sign_r;       // -1: red mode attracts
  int sign_b;       // +1: blue mode repels
  std::vector<std::string> warnings;
};

// Validates and evaluates the derived quantities. Non-fatal problems (weak
// semiclassical validity) are reported in `warnings`.
DerivedParams derive(const PhysicalParams& params);

// Scale record of the internal dimensionless system: time in 1/gamma,
// length in 1/k, momentum in hbar k, energy in hbar gamma, rates in gamma.
struct UnitSystem {
  double time_s;        // seconds per internal time unit
  double length_m;      // metres per internal length unit
  double momentum_si;   // kg m/s per hbar k
  double energy_j;      // joules per hbar gamma
  double rate_hz;       // s^-1 per internal rate unit
  double velocity_ms;   // m/s per (hbar k / M)

  double time_to_internal(double seconds) const { return seconds / time_s; }
  double time_to_si(double tau) const { return tau * time_s; }
  double length_to_internal(double metres) const { return metres / length_m; }
  double length_to_si(double x) const { return x * length_m; }
  double momentum_to_internal(double p) const { return p / momentum_si; }
  double momentum_to_si(double p) const { return p * momentum_si; }
  double energy_to_internal(double joules) const { return joules / energy_j; }
  double energy_to_si(double e) const { return e * energy_j; }
  double rate_to_internal(double per_s) const { return per_s / rate_hz; }
  double rate_to_si(double r) const { return r * rate_hz; }
  // Velocity in m/s to momentum in units of hbar k.
  double velocity_to_momentum(double v) const { return v / velocity_ms; }
  double momentum_to_velocity(double p) const { return p * velocity_ms; }
};

UnitSystem to_internal_units(const PhysicalParams& params, const DerivedParams& derived);

enum class Mode { red = 0, blue = 1 };
inline constexpr std::array<Mode, 2> kModes{Mode::red, Mode::blue};
inline constexpr std::size_t index(Mode m) { return static_cast<std::size_t>(m); }
const char* name(Mode m);

// Per-mode constants in internal units.
struct ModeConstants {
  double eta;     // pump amplitude / gamma
  double sign;    // sign of the light shift
  double decay;   // mode exponent in units of k (f = exp(-decay x))
  double k_opt;   // optical wavevector / k
};

// Everything the dynamics needs, already in internal units. Immutable and
// shareable between threads.
struct Model {
  PhysicalParams physical;
  DerivedParams derived;
  UnitSystem units;

  double kappa;     // kappa / gamma
  double delta_C;   // Delta_C / gamma
  double u0;        // U0 / gamma
  double gamma0;    // Gamma0 / gamma
  double epsilon;
  double c3;
  double u2_bar;
  // Scales the field-quadrature noise. 2 gives the symmetric-ordering vacuum
  // <|d alpha|^2> = 1/2 that the (|alpha|^2 - 1/2) terms of the force assume;
  // 1 takes <xi* xi> literally as the increment variance (vacuum 1/4).
  double field_noise_factor = 2.0;
  std::array<ModeConstants, 2> modes;

  const ModeConstants& mode(Mode m) const { return modes[index(m)]; }

  static Model from(const PhysicalParams& params, double field_noise_factor = 2.0);
};

}  // namespace evtrap
