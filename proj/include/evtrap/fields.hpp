#pragma once

#include <complex>
#include <iosfwd>
#include <span>
#include <stdexcept>
#include <vector>

#include "evtrap/params.hpp"

namespace evtrap {

// No interior potential minimum below zero (e.g. blue pump switched off).
class NoTrapError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Mode function f(x) = exp(-decay x) and its derivative; x in 1/k, x >= 0.
struct ModeValue {
  double f;
  double df;
};

ModeValue mode_f(Mode mode, double x);

// Stationary photon number as a function of the local intensity u = f^2:
// n(u) = eta^2 / [(kappa + Gamma0 u)^2 + (Delta_C - s U0 u)^2].
double photon_number_at_intensity(Mode mode, double u, const Model& model);

// N(u) = integral_0^u n(u') du', evaluated in closed form.
double integrated_photon_number(Mode mode, double u, const Model& model);

// alpha_ss = eta / [kappa + Gamma0 f^2 - i (Delta_C - s U0 f^2)].
std::complex<double> steady_state_alpha(Mode mode, double x, const Model& model);

double steady_photon_number(Mode mode, double x, const Model& model);

// -c3 / x^3, hbar gamma.
double vdw_potential(double x, const Model& model);

// Line integral of the steady-state force, including the vacuum -1/2 terms
// and the Van der Waals attraction. Normalized to U(inf) = 0; units hbar gamma.
double adiabatic_potential(double x, const Model& model);

// Mode-resolved piece s U0 [N(f^2) - f^2/2] of the adiabatic potential.
double mode_potential(Mode mode, double x, const Model& model);

// -dU/dx with the fields at their steady state; units hbar k gamma.
double adiabatic_force(double x, const Model& model);

struct TrapProfile {
  double x_min;           // 1/k
  double depth;           // hbar gamma
  double x_barrier;       // 1/k
  double barrier_height;  // hbar gamma
  double curvature;       // U''(x_min), hbar gamma k^2
  double omega_trap;      // sqrt(U''/M), s^-1
  double omega_internal;  // same, units of gamma
  // Largest excited-state population of either transition over position,
  // g^2 n_i f_i^2 / (Delta_A^2 + gamma^2).
  double sat_max;
  // Largest sum over both modes of n_i f_i^2 / n_sat.
  double sat_param_sum_max;
};

// Locates the trap from a dx = 1e-2 coarse scan refined by bracketed root
// solves of the potential gradient. Throws NoTrapError when no bound well
// exists.
TrapProfile characterize_trap(const Model& model);

struct PotentialRow {
  double x;
  double u_total;
  double u_vdw;
  double n_red;
  double n_blue;
};

// Grid must be non-empty, strictly increasing and positive.
std::vector<PotentialRow> potential_scan(const Model& model, std::span<const double> grid);

// Comma-separated, header "x,U_total,U_vdw,n_red,n_blue".
void write_potential_table(std::ostream& out, std::span<const PotentialRow> rows);

std::vector<double> uniform_grid(double first, double last, double step);

}  // namespace evtrap
