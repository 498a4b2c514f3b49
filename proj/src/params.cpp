#include "evtrap/params.hpp"

#include <cmath>

#include <fmt/format.h>

namespace evtrap {

PhysicalParams default_params() {
  const double gamma = 2e7;
  PhysicalParams p{};
  p.gamma = gamma;
  p.kappa = gamma / 2;
  p.g = 2.5 * gamma;
  p.delta_A = 1e3 * gamma;
  p.delta_C = -0.8 * p.kappa;
  // Pump amplitudes 1200 and 1500 in units of 1e6 s^-1; reproduces the
  // empty-mode photon numbers 8780 / 13720.
  p.eta_r = 1200e6;
  p.eta_b = 1500e6;
  p.k = 1.0 / 0.3e-6;
  p.mass = kMassRb85;
  p.c3_vdw = 5e-3;
  p.u2_bar = 2.0 / 5.0;
  p.k_opt_r = 2 * kPi / 795e-9;
  p.k_opt_b = 2 * kPi / 780e-9;
  return p;
}

namespace {

void require(bool ok, const char* field, const char* what) {
  if (!ok) throw ValidationError(field, what);
}

}  // namespace

void validate(const PhysicalParams& p) {
  const auto finite = [](double v) { return std::isfinite(v); };
  require(finite(p.gamma) && p.gamma > 0, "gamma", "must be positive");
  require(finite(p.kappa) && p.kappa > 0, "kappa", "must be positive");
  require(finite(p.g) && p.g >= 0, "g", "must be non-negative");
  require(finite(p.delta_A) && p.delta_A > 0, "delta_A", "must be positive (magnitude)");
  require(finite(p.delta_C) && p.delta_C < 0, "delta_C", "must be negative");
  require(finite(p.eta_r) && p.eta_r >= 0, "eta_r", "must be non-negative");
  require(finite(p.eta_b) && p.eta_b >= 0, "eta_b", "must be non-negative");
  require(finite(p.k) && p.k > 0, "k", "must be positive");
  require(finite(p.mass) && p.mass > 0, "mass", "must be positive");
  require(finite(p.c3_vdw) && p.c3_vdw >= 0, "c3_vdw", "must be non-negative");
  require(finite(p.u2_bar) && p.u2_bar > 0 && p.u2_bar <= 1, "u2_bar", "must lie in (0, 1]");
  require(finite(p.k_opt_r) && p.k_opt_r > 0, "k_opt_r", "must be positive");
  require(finite(p.k_opt_b) && p.k_opt_b > 0, "k_opt_b", "must be positive");
}

DerivedParams derive(const PhysicalParams& p) {
  validate(p);
  DerivedParams d{};
  const double lorentz = p.delta_A * p.delta_A + p.gamma * p.gamma;
  d.u0 = p.g * p.g * p.delta_A / lorentz;
  d.gamma0 = p.g * p.g * p.gamma / lorentz;
  d.n_sat = p.g > 0 ? lorentz / (2 * p.g * p.g) : INFINITY;
  d.epsilon = kHbar * p.k * p.k / (p.mass * p.gamma);
  const double cavity = p.delta_C * p.delta_C + p.kappa * p.kappa;
  d.n_empty_r = p.eta_r * p.eta_r / cavity;
  d.n_empty_b = p.eta_b * p.eta_b / cavity;
  d.sign_r = -1;
  d.sign_b = +1;
  if (d.epsilon >= 0.1) {
    d.warnings.push_back(fmt::format(
        "recoil parameter epsilon = {:.3g} >= 0.1; semiclassical motion is questionable",
        d.epsilon));
  }
  return d;
}

UnitSystem to_internal_units(const PhysicalParams& p, const DerivedParams&) {
  UnitSystem u{};
  u.time_s = 1.0 / p.gamma;
  u.length_m = 1.0 / p.k;
  u.momentum_si = kHbar * p.k;
  u.energy_j = kHbar * p.gamma;
  u.rate_hz = p.gamma;
  u.velocity_ms = kHbar * p.k / p.mass;
  return u;
}

const char* name(Mode m) { return m == Mode::red ? "red" : "blue"; }

Model Model::from(const PhysicalParams& params, double field_noise_factor) {
  if (!(field_noise_factor > 0) || !std::isfinite(field_noise_factor))
    throw ValidationError("field_noise_factor", "must be positive");
  Model m{};
  m.physical = params;
  m.derived = derive(params);
  m.units = to_internal_units(params, m.derived);
  const double gamma = params.gamma;
  m.kappa = params.kappa / gamma;
  m.delta_C = params.delta_C / gamma;
  m.u0 = m.derived.u0 / gamma;
  m.gamma0 = m.derived.gamma0 / gamma;
  m.epsilon = m.derived.epsilon;
  m.c3 = params.c3_vdw;
  m.u2_bar = params.u2_bar;
  m.field_noise_factor = field_noise_factor;
  m.modes[index(Mode::red)] = {params.eta_r / gamma, double(m.derived.sign_r), 1.0,
                               params.k_opt_r / params.k};
  m.modes[index(Mode::blue)] = {params.eta_b / gamma, double(m.derived.sign_b), 2.0,
                                params.k_opt_b / params.k};
  return m;
}

}  // namespace evtrap
