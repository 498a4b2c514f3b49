#include "evtrap/fields.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <ostream>

#include <boost/math/tools/roots.hpp>
#include <fmt/format.h>

namespace evtrap {

ModeValue mode_f(Mode mode, double x) {
  if (!(x >= 0)) throw std::domain_error("mode_f: position must be >= 0 (x < 0 is inside the dielectric)");
  const double decay = mode == Mode::red ? 1.0 : 2.0;
  const double f = std::exp(-decay * x);
  return {f, -decay * f};
}

double photon_number_at_intensity(Mode mode, double u, const Model& m) {
  const auto& c = m.mode(mode);
  const double loss = m.kappa + m.gamma0 * u;
  const double detuning = m.delta_C - c.sign * m.u0 * u;
  return c.eta * c.eta / (loss * loss + detuning * detuning);
}

double integrated_photon_number(Mode mode, double u, const Model& m) {
  const auto& c = m.mode(mode);
  // 1 / (a u^2 + b u + c0) with discriminant 4 a c0 - b^2 = (2 (Gamma0 Delta_C + s kappa U0))^2.
  const double a = m.gamma0 * m.gamma0 + m.u0 * m.u0;
  const double b = 2 * m.kappa * m.gamma0 - 2 * c.sign * m.delta_C * m.u0;
  const double c0 = m.kappa * m.kappa + m.delta_C * m.delta_C;
  const double root_disc = 2 * std::abs(m.gamma0 * m.delta_C + c.sign * m.kappa * m.u0);
  const double eta2 = c.eta * c.eta;
  if (root_disc == 0) {
    // Perfect-square (or constant) denominator.
    return eta2 * u / (c0 + 0.5 * b * u);
  }
  const double disc = root_disc * root_disc;
  const double y = 2 * a * u * root_disc;
  const double x = disc + b * (2 * a * u + b);
  return eta2 * 2 * std::atan2(y, x) / root_disc;
}

std::complex<double> steady_state_alpha(Mode mode, double x, const Model& m) {
  const auto& c = m.mode(mode);
  const double u = std::exp(-2 * c.decay * x);
  const std::complex<double> denom(m.kappa + m.gamma0 * u, -(m.delta_C - c.sign * m.u0 * u));
  return c.eta / denom;
}

double steady_photon_number(Mode mode, double x, const Model& m) {
  const double u = std::exp(-2 * m.mode(mode).decay * x);
  return photon_number_at_intensity(mode, u, m);
}

double vdw_potential(double x, const Model& m) { return -m.c3 / (x * x * x); }

double mode_potential(Mode mode, double x, const Model& m) {
  const auto& c = m.mode(mode);
  const double u = std::exp(-2 * c.decay * x);
  return c.sign * m.u0 * (integrated_photon_number(mode, u, m) - 0.5 * u);
}

double adiabatic_potential(double x, const Model& m) {
  if (!(x > 0)) throw std::domain_error("adiabatic_potential: position must be > 0");
  return mode_potential(Mode::red, x, m) + mode_potential(Mode::blue, x, m) + vdw_potential(x, m);
}

double adiabatic_force(double x, const Model& m) {
  if (!(x > 0)) throw std::domain_error("adiabatic_force: position must be > 0");
  double force = -3 * m.c3 / (x * x * x * x);
  for (Mode mode : kModes) {
    const auto& c = m.mode(mode);
    const double u = std::exp(-2 * c.decay * x);
    const double du = -2 * c.decay * u;
    force -= c.sign * m.u0 * (photon_number_at_intensity(mode, u, m) - 0.5) * du;
  }
  return force;
}

namespace {

constexpr double kScanStart = 0.01;
constexpr double kScanEnd = 10.0;
constexpr double kScanStep = 1e-2;

// Root of the potential gradient inside [lo, hi], where it changes sign.
double gradient_root(const Model& m, double lo, double hi) {
  auto gradient = [&m](double x) { return -adiabatic_force(x, m); };
  boost::math::tools::eps_tolerance<double> tol(std::numeric_limits<double>::digits - 4);
  std::uintmax_t max_iter = 200;
  const auto [a, b] = boost::math::tools::toms748_solve(gradient, lo, hi, tol, max_iter);
  return 0.5 * (a + b);
}

}  // namespace

TrapProfile characterize_trap(const Model& m) {
  const auto n_points = static_cast<std::size_t>(std::llround((kScanEnd - kScanStart) / kScanStep)) + 1;
  std::vector<double> xs(n_points), grad(n_points);
  for (std::size_t i = 0; i < n_points; ++i) {
    xs[i] = kScanStart + static_cast<double>(i) * kScanStep;
    grad[i] = -adiabatic_force(xs[i], m);
  }

  // Interior minima: gradient crosses from negative to positive.
  double best_x = NAN;
  double best_u = 0;
  std::size_t best_i = 0;
  for (std::size_t i = 0; i + 1 < n_points; ++i) {
    if (grad[i] < 0 && grad[i + 1] >= 0) {
      const double x = gradient_root(m, xs[i], xs[i + 1]);
      const double u = adiabatic_potential(x, m);
      if (u < best_u) {
        best_u = u;
        best_x = x;
        best_i = i;
      }
    }
  }
  if (std::isnan(best_x)) throw NoTrapError("adiabatic potential has no interior minimum below zero");

  TrapProfile t{};
  t.x_min = best_x;
  t.depth = -best_u;

  // Barrier: the maximum closest to the well on its inner side.
  t.x_barrier = 0;
  for (std::size_t i = best_i; i-- > 0;) {
    if (grad[i] > 0 && grad[i + 1] <= 0) {
      t.x_barrier = gradient_root(m, xs[i], xs[i + 1]);
      break;
    }
  }
  if (t.x_barrier > 0) {
    t.barrier_height = adiabatic_potential(t.x_barrier, m);
  } else {
    // No Van der Waals wall: the potential rises all the way to the surface.
    t.barrier_height = mode_potential(Mode::red, 0, m) + mode_potential(Mode::blue, 0, m);
  }

  const double h = 1e-3;
  t.curvature = (adiabatic_potential(t.x_min + h, m) - 2 * adiabatic_potential(t.x_min, m) +
                 adiabatic_potential(t.x_min - h, m)) /
                (h * h);
  t.omega_internal = std::sqrt(m.epsilon * t.curvature);
  t.omega_trap = m.units.rate_to_si(t.omega_internal);

  const double lorentz = m.physical.delta_A * m.physical.delta_A + m.physical.gamma * m.physical.gamma;
  const double excitation = m.physical.g * m.physical.g / lorentz;
  const double inv_n_sat = 2 * excitation;
  t.sat_max = 0;
  t.sat_param_sum_max = 0;
  for (int i = 0; i <= 10000; ++i) {
    const double x = 1e-3 * i;
    double sum = 0;
    for (Mode mode : kModes) {
      const double u = std::exp(-2 * m.mode(mode).decay * x);
      const double nu = photon_number_at_intensity(mode, u, m) * u;
      t.sat_max = std::max(t.sat_max, excitation * nu);
      sum += nu * inv_n_sat;
    }
    t.sat_param_sum_max = std::max(t.sat_param_sum_max, sum);
  }
  return t;
}

std::vector<PotentialRow> potential_scan(const Model& m, std::span<const double> grid) {
  if (grid.empty()) throw std::invalid_argument("potential_scan: empty grid");
  for (std::size_t i = 0; i < grid.size(); ++i) {
    if (!(grid[i] > 0)) throw std::invalid_argument("potential_scan: grid positions must be positive");
    if (i > 0 && !(grid[i] > grid[i - 1]))
      throw std::invalid_argument("potential_scan: grid must be strictly increasing");
  }
  std::vector<PotentialRow> rows;
  rows.reserve(grid.size());
  for (double x : grid) {
    rows.push_back({x, adiabatic_potential(x, m), vdw_potential(x, m),
                    steady_photon_number(Mode::red, x, m), steady_photon_number(Mode::blue, x, m)});
  }
  return rows;
}

void write_potential_table(std::ostream& out, std::span<const PotentialRow> rows) {
  out << "x,U_total,U_vdw,n_red,n_blue\n";
  for (const auto& r : rows)
    out << fmt::format("{:.10g},{:.12g},{:.12g},{:.10g},{:.10g}\n", r.x, r.u_total, r.u_vdw, r.n_red,
                       r.n_blue);
}

std::vector<double> uniform_grid(double first, double last, double step) {
  if (!(step > 0) || !(last >= first)) throw std::invalid_argument("uniform_grid: need step > 0 and last >= first");
  const auto n = static_cast<std::size_t>(std::floor((last - first) / step + 1e-9)) + 1;
  std::vector<double> grid(n);
  for (std::size_t i = 0; i < n; ++i) grid[i] = first + static_cast<double>(i) * step;
  return grid;
}

}  // namespace evtrap
