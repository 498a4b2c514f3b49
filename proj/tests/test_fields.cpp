#include <algorithm>
#include <cmath>
#include <random>
#include <sstream>
#include <vector>

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "doctest.h"
#include "evtrap/fields.hpp"
#include "evtrap/sde.hpp"

using namespace evtrap;

namespace {

const Model& default_model() {
  static const Model m = Model::from(default_params());
  return m;
}

double potential_gradient(double x, const Model& m) {
  // 4th-order central difference, used as an independent check on the force
  const double h = 1e-4 * std::max(1.0, x);
  return (-adiabatic_potential(x + 2 * h, m) + 8 * adiabatic_potential(x + h, m) -
          8 * adiabatic_potential(x - h, m) + adiabatic_potential(x - 2 * h, m)) /
         (12 * h);
}

}  // namespace

TEST_CASE("mode functions") {
  CHECK(mode_f(Mode::red, 0).f == 1);
  CHECK(mode_f(Mode::blue, 0).f == 1);
  CHECK(mode_f(Mode::blue, 0.5678).f == doctest::Approx(0.3212).epsilon(1e-4));
  CHECK(mode_f(Mode::red, 0.0).df == -1);
  CHECK(mode_f(Mode::blue, 0.0).df == -2);
  CHECK_THROWS_AS(mode_f(Mode::red, -1e-9), std::domain_error);

  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> pos(0, 20);
  for (int i = 0; i < 1000; ++i) {
    const double x = pos(rng);
    const double r = mode_f(Mode::red, x).f;
    CHECK(r * r == doctest::Approx(mode_f(Mode::blue, x).f).epsilon(1e-14));
    CHECK(mode_f(Mode::red, x).df == doctest::Approx(-r).epsilon(1e-15));
  }
}

TEST_CASE("steady-state amplitudes") {
  const Model& m = default_model();
  CHECK(steady_photon_number(Mode::red, 1e3, m) == doctest::Approx(8780).epsilon(0.01));
  CHECK(steady_photon_number(Mode::blue, 1e3, m) == doctest::Approx(13720).epsilon(0.01));

  // alpha_ss solves the field equation with the noise switched off
  for (double x : {0.05, 0.3, 0.57, 1.5}) {
    const StateDerivative d = drift(steady_state_at(x, 0, m), m);
    CHECK(std::abs(d.dalpha[0]) < 1e-9);
    CHECK(std::abs(d.dalpha[1]) < 1e-9);
  }

  PhysicalParams p = default_params();
  p.eta_r = 0;
  const Model dark = Model::from(p);
  CHECK(steady_state_alpha(Mode::red, 0.5, dark) == std::complex<double>(0, 0));
}

TEST_CASE("integrated photon number agrees with adaptive quadrature") {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> unit(0, 1);
  std::vector<Model> models{default_model()};
  // Stronger coupling so the Lorentzian structure is actually resolved in u.
  for (double g_scale : {20.0, 80.0}) {
    PhysicalParams p = default_params();
    p.g *= g_scale;
    models.push_back(Model::from(p));
  }
  for (const Model& m : models) {
    for (Mode mode : kModes) {
      for (int i = 0; i < 20; ++i) {
        const double u = unit(rng);
        const auto n = [&](double v) { return photon_number_at_intensity(mode, v, m); };
        const double oracle = boost::math::quadrature::gauss_kronrod<double, 61>::integrate(n, 0.0, u, 15, 1e-12);
        CHECK(integrated_photon_number(mode, u, m) == doctest::Approx(oracle).epsilon(1e-8));
      }
    }
  }
}

TEST_CASE("frozen photon number oracle and full depth") {
  const Model& m = default_model();
  // U = U0 (-n_r u + n_b u^2), u = exp(-2x), with the empty-mode numbers
  const double n_r = 8800, n_b = 13700;
  const double u_star = n_r / (2 * n_b);
  const double x_frozen = -std::log(u_star) / 2;
  const double depth_frozen = m.u0 * n_r * n_r / (4 * n_b);
  CHECK(x_frozen == doctest::Approx(0.568).epsilon(2e-3));
  CHECK(depth_frozen == doctest::Approx(8.83).epsilon(2e-3));

  const TrapProfile t = characterize_trap(m);
  CHECK(t.depth == doctest::Approx(8.9).epsilon(0.10));
  CHECK(std::abs(t.depth - depth_frozen) / depth_frozen < 0.03);
  CHECK(std::abs(adiabatic_potential(1e3, m)) < 1e-8);
  CHECK_THROWS(adiabatic_potential(0, m));
  CHECK_THROWS(adiabatic_potential(-1, m));
}

TEST_CASE("force equals minus the potential gradient") {
  const Model& m = default_model();
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> pos(0.05, 4.0);
  for (int i = 0; i < 100; ++i) {
    const double x = pos(rng);
    const double f_drift = drift(steady_state_at(x, 0, m), m).dp;
    const double f_analytic = adiabatic_force(x, m);
    CHECK(f_analytic == doctest::Approx(f_drift).epsilon(1e-6));
    // finite-difference cross-check limited by cancellation in U itself
    CHECK(-potential_gradient(x, m) == doctest::Approx(f_drift).epsilon(1e-5).scale(1e-6));
  }
}

TEST_CASE("trap characterization at defaults") {
  const Model& m = default_model();
  const TrapProfile t = characterize_trap(m);
  CHECK(t.x_min >= 0.45);
  CHECK(t.x_min <= 0.70);
  CHECK(t.x_barrier >= 0.08);
  CHECK(t.x_barrier <= 0.15);
  CHECK(0 < t.x_barrier);
  CHECK(t.x_barrier < t.x_min);
  CHECK(t.depth > 0);
  CHECK(t.depth == doctest::Approx(-adiabatic_potential(t.x_min, m)).epsilon(1e-14));
  CHECK(t.barrier_height == doctest::Approx(adiabatic_potential(t.x_barrier, m)).epsilon(1e-14));
  CHECK(t.sat_max < 0.10);
  CHECK(t.sat_param_sum_max < 0.5);
  CHECK(t.curvature > 0);
  CHECK(t.omega_trap == doctest::Approx(t.omega_internal * m.physical.gamma).epsilon(1e-12));

  SUBCASE("dense grid oracle") {
    double best_min = 0, u_min = 0, best_max = 0, u_max = -1e300;
    for (double x = 0.2; x <= 3.0; x += 1e-4) {
      const double u = adiabatic_potential(x, m);
      if (u < u_min) u_min = u, best_min = x;
    }
    for (double x = 0.03; x <= best_min; x += 1e-4) {
      const double u = adiabatic_potential(x, m);
      if (u > u_max) u_max = u, best_max = x;
    }
    CHECK(std::abs(t.x_min - best_min) <= 1e-4);
    CHECK(std::abs(t.x_barrier - best_max) <= 1e-4);
    CHECK(t.depth >= -u_min);
    CHECK(t.barrier_height >= u_max);
    CHECK(t.depth == doctest::Approx(-u_min).epsilon(1e-7));
  }

  SUBCASE("extrema to 1e-8 in x") {
    CHECK(std::abs(adiabatic_force(t.x_min, m)) < 1e-9);
    CHECK(std::abs(adiabatic_force(t.x_barrier, m)) < 1e-7);
    CHECK(adiabatic_potential(t.x_min - 1e-6, m) > -t.depth);
    CHECK(adiabatic_potential(t.x_min + 1e-6, m) > -t.depth);
  }

  SUBCASE("saturation oracle on a dense grid") {
    double sat = 0;
    for (double x = 0; x <= 10; x += 1e-4) {
      for (Mode mode : kModes) {
        const double f = mode_f(mode, x).f;
        sat = std::max(sat, m.physical.g * m.physical.g * steady_photon_number(mode, x, m) * f * f /
                                (m.physical.delta_A * m.physical.delta_A + m.physical.gamma * m.physical.gamma));
      }
    }
    CHECK(t.sat_max == doctest::Approx(sat).epsilon(1e-4));
  }
}

TEST_CASE("no blue pump, no trap") {
  PhysicalParams p = default_params();
  p.eta_b = 0;
  CHECK_THROWS_AS(characterize_trap(Model::from(p)), NoTrapError);
}

TEST_CASE("photon numbers: resonance bound and anticorrelation near the trap") {
  const Model& m = default_model();
  const TrapProfile t = characterize_trap(m);
  for (Mode mode : kModes) {
    const double bound = m.mode(mode).eta * m.mode(mode).eta / (m.kappa * m.kappa);
    for (double x = 0; x <= 10; x += 1e-3) {
      const double n = steady_photon_number(mode, x, m);
      CHECK_MESSAGE(n >= 0, x);
      CHECK_MESSAGE(n <= bound, x);
    }
  }
  double prev_r = steady_photon_number(Mode::red, t.x_barrier, m);
  double prev_b = steady_photon_number(Mode::blue, t.x_barrier, m);
  for (double x = t.x_barrier + 1e-3; x <= 3.0; x += 1e-3) {
    const double r = steady_photon_number(Mode::red, x, m);
    const double b = steady_photon_number(Mode::blue, x, m);
    CHECK(r <= prev_r);
    CHECK(b >= prev_b);
    prev_r = r;
    prev_b = b;
  }
}

TEST_CASE("pump scaling") {
  std::mt19937_64 rng(17);
  std::uniform_real_distribution<double> scale(0.1, 10), pos(0.05, 5);
  for (int i = 0; i < 50; ++i) {
    const double c = scale(rng);
    PhysicalParams p = default_params();
    p.eta_r *= c;
    p.eta_b *= c;
    const Model scaled = Model::from(p);
    const Model& m = default_model();
    const double x = pos(rng);
    for (Mode mode : kModes) {
      CHECK(steady_photon_number(mode, x, scaled) ==
            doctest::Approx(c * c * steady_photon_number(mode, x, m)).epsilon(1e-12));
      // the vacuum -f^2/2 part does not scale, the pumped part does
      const double f2 = std::pow(mode_f(mode, x).f, 2);
      const double vac = -m.mode(mode).sign * m.u0 * f2 / 2;
      CHECK(mode_potential(mode, x, scaled) - vac ==
            doctest::Approx(c * c * (mode_potential(mode, x, m) - vac)).epsilon(1e-10));
    }
    CHECK(vdw_potential(x, scaled) == vdw_potential(x, m));
  }
}

TEST_CASE("potential scan") {
  const Model& m = default_model();
  const std::vector<double> one{1.0};
  const auto rows = potential_scan(m, one);
  REQUIRE(rows.size() == 1);
  CHECK(rows[0].u_total == adiabatic_potential(1.0, m));
  CHECK(rows[0].u_vdw == vdw_potential(1.0, m));
  CHECK(rows[0].n_red == steady_photon_number(Mode::red, 1.0, m));

  CHECK_THROWS(potential_scan(m, std::vector<double>{}));
  CHECK_THROWS(potential_scan(m, std::vector<double>{0.5, 0.5}));
  CHECK_THROWS(potential_scan(m, std::vector<double>{0.0, 0.5}));
  CHECK_THROWS(potential_scan(m, std::vector<double>{0.6, 0.5}));

  const auto grid = uniform_grid(0.05, 5, 0.005);
  CHECK(grid.size() == 991);
  CHECK(grid.back() == doctest::Approx(5.0));
  const auto table = potential_scan(m, grid);
  CHECK(table.size() == grid.size());
  double prev = 1e300;
  for (const auto& r : table) {
    if (r.x <= 2) continue;
    CHECK(r.u_total < 0);
    CHECK(std::abs(r.u_total) < prev);
    prev = std::abs(r.u_total);
  }

  std::ostringstream out;
  write_potential_table(out, rows);
  std::istringstream in(out.str());
  std::string header, line;
  std::getline(in, header);
  std::getline(in, line);
  CHECK(header == "x,U_total,U_vdw,n_red,n_blue");
  CHECK(std::count(line.begin(), line.end(), ',') == 4);
  CHECK(std::stod(line.substr(line.find(',') + 1)) == doctest::Approx(rows[0].u_total).epsilon(1e-12));
}
