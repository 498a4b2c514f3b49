// Acceptance gate: one PASS/FAIL line per criterion. Optional arguments pick
// a subset, e.g. `acceptance 1 2 9`.
#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <functional>
#include <numbers>
#include <optional>
#include <random>
#include <set>
#include <string>
#include <thread>

#include <Eigen/Dense>
#include <fmt/core.h>

#include "evtrap/ensemble.hpp"
#include "evtrap/fields.hpp"
#include "evtrap/params.hpp"
#include "evtrap/sde.hpp"

using namespace evtrap;

namespace {

using Clock = std::chrono::steady_clock;

struct Check {
  bool ok = true;
  std::string detail;
  void require(bool cond, const std::string& what) {
    ok = ok && cond;
    if (!detail.empty()) detail += "; ";
    detail += what + (cond ? "" : " [x]");
  }
};

int failures = 0;

void report(int id, const char* title, Check c, double seconds, double limit) {
  c.require(seconds < limit, fmt::format("runtime {:.1f}s < {:g}s", seconds, limit));
  if (!c.ok) ++failures;
  fmt::print("CRITERION {} {}: {} | {}\n", id, c.ok ? "PASS" : "FAIL", title, c.detail);
  std::fflush(stdout);
}

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

unsigned worker_count() { return std::max(1u, std::thread::hardware_concurrency()); }

const Model& model() {
  static const Model m = Model::from(default_params());
  return m;
}

const TrapProfile& trap() {
  static const TrapProfile t = characterize_trap(model());
  return t;
}

void criterion1() {
  const auto t0 = Clock::now();
  const PhysicalParams p = default_params();
  const DerivedParams d = derive(p);
  Check c;
  const double ratio = d.u0 / p.kappa;
  c.require(std::abs(ratio - 0.0125) <= 1e-4, fmt::format("U0/kappa = {:.7f} (0.0125 +- 1e-4)", ratio));
  c.require(std::abs(d.n_empty_r - 8800) <= 0.01 * 8800, fmt::format("n_r = {:.1f} (8800 +- 1%)", d.n_empty_r));
  c.require(std::abs(d.n_empty_b - 13700) <= 0.01 * 13700, fmt::format("n_b = {:.1f} (13700 +- 1%)", d.n_empty_b));
  report(1, "parameter identities", c, seconds_since(t0), 1);
}

void criterion2() {
  const auto t0 = Clock::now();
  const Model& m = model();
  const TrapProfile t = characterize_trap(m);
  // frozen photon numbers, no surface term: U = U0 (-n_r u + n_b u^2), u = exp(-2x)
  const double oracle = m.u0 * 8800.0 * 8800.0 / (4 * 13700.0);
  Check c;
  c.require(std::abs(t.depth - 8.9) <= 0.89, fmt::format("depth = {:.4f} hbar gamma (8.9 +- 10%)", t.depth));
  c.require(std::abs(t.depth - oracle) <= 0.03 * oracle,
            fmt::format("frozen-photon oracle {:.4f}, deviation {:.2f}% (< 3%)", oracle,
                        100 * std::abs(t.depth - oracle) / oracle));
  report(2, "trap depth", c, seconds_since(t0), 1);
}

void criterion3() {
  const auto t0 = Clock::now();
  const TrapProfile t = characterize_trap(model());
  Check c;
  c.require(t.sat_max < 0.10, fmt::format("max excited fraction per transition = {:.4f} (< 0.10)", t.sat_max));
  c.detail += fmt::format("; summed saturation parameter max = {:.4f} (reported only)", t.sat_param_sum_max);
  report(3, "saturation bound", c, seconds_since(t0), 1);
}

void criterion4() {
  const auto t0 = Clock::now();
  const Model& m = model();
  TrajectorySettings cfg;
  cfg.noiseless = true;
  cfg.horizon = 2000;
  Rng rng = make_stream(0, 0);
  RecordSpec rec;
  rec.turning_points = true;
  const TrajectoryOutcome o = run_trajectory(default_initial_condition(m, trap()), m, cfg, rng, rec);
  Check c;
  bool staircase = !o.outer_turns.empty();
  double prev = o.initial_energy;
  for (const TurningPoint& tp : o.outer_turns) {
    staircase = staircase && tp.e_mech <= prev + 1e-9;
    prev = tp.e_mech;
  }
  c.require(staircase, fmt::format("E_mech nonincreasing over {} outer turning points", o.outer_turns.size()));
  const double loss = o.outer_turns.empty() ? NAN : o.initial_energy - o.outer_turns.front().e_mech;
  c.require(std::abs(loss - 0.17) <= 0.3 * 0.17, fmt::format("first-bounce loss = {:.4f} hbar gamma (0.17 +- 30%)", loss));

  InitialCondition ic = default_initial_condition(m, trap());
  ic.v0 = -0.07;
  const TrajectoryOutcome slow = run_trajectory(ic, m, cfg, rng);
  ic.v0 = -0.20;
  const TrajectoryOutcome fast = run_trajectory(ic, m, cfg, rng);
  c.require(slow.status == TrajectoryStatus::trapped, fmt::format("7 cm/s -> {}", name(slow.status)));
  c.require(fast.status == TrajectoryStatus::escaped, fmt::format("20 cm/s -> {}", name(fast.status)));
  report(4, "noiseless Sisyphus staircase and capture velocity", c, seconds_since(t0), 10);
}

void criterion5() {
  const auto t0 = Clock::now();
  const Model& m = model();
  TrajectorySettings cfg;
  cfg.noiseless = true;
  cfg.horizon = 2e4;
  Rng rng = make_stream(0, 0);
  const TrajectoryOutcome o = run_trajectory(default_initial_condition(m, trap()), m, cfg, rng);
  Check c;
  c.require(o.status == TrajectoryStatus::trapped, fmt::format("status {}", name(o.status)));
  const double gap = o.final_energy + trap().depth;
  c.require(std::abs(gap) < 1e-2, fmt::format("E_mech(2e4) = {:.5f}, E + depth = {:.2e} (< 1e-2)", o.final_energy, gap));
  report(5, "noiseless asymptote", c, seconds_since(t0), 30);
}

struct MainRun {
  EnsembleStats stats;
  double seconds;
};

const MainRun& main_run() {
  static const MainRun run = [] {
    const auto t0 = Clock::now();
    EnsembleSettings es;
    es.n_traj = 1000;
    es.seed = 1;
    es.workers = worker_count();
    es.trajectory.horizon = 2e4;
    MainRun r{run_ensemble(default_initial_condition(model(), trap()), model(), es), 0};
    r.seconds = seconds_since(t0);
    return r;
  }();
  return run;
}

void criterion6() {
  const MainRun& run = main_run();
  const EnsembleStats& st = run.stats;
  const double horizon = st.bin_times.back();
  const double p_end = st.trapped_at(horizon), p_half = st.trapped_at(horizon / 2);
  Check c;
  c.require(std::abs(p_end - p_half) < 0.03,
            fmt::format("p(T) = {:.3f}, p(T/2) = {:.3f}, |diff| = {:.3f} (< 0.03)", p_end, p_half, std::abs(p_end - p_half)));
  c.require(p_end >= 0.40 && p_end <= 0.60,
            fmt::format("plateau = {:.3f} +- {:.3f} in [0.40, 0.60]", p_end, st.plateau_stderr));
  c.require(st.n_aborted == 0, fmt::format("aborted = {}", st.n_aborted));
  c.detail += fmt::format("; escaped {}, stuck {}, noise fallbacks {}, workers {}", st.n_escaped, st.n_stuck,
                          st.noise_fallbacks, worker_count());
  report(6, "ensemble capture plateau (n = 1000, T = 2e4)", c, run.seconds, 15 * 60);
}

void criterion7() {
  const MainRun& run = main_run();
  const EnsembleStats& st = run.stats;
  Check c;
  c.require(st.e_kin_final >= 0.25 && st.e_kin_final <= 0.70,
            fmt::format("mean kinetic energy, trapped, last 10% = {:.4f} hbar gamma (in [0.25, 0.70])", st.e_kin_final));
  const double e_osc = st.e_mech.back() + trap().depth;
  c.detail += fmt::format("; oscillation energy E_mech + depth at T = {:.4f} hbar gamma (reported only)", e_osc);
  report(7, "cooling asymptote with noise (same run as 6)", c, run.seconds, 15 * 60);
}

double plateau_with(double dt, int substeps, double horizon) {
  EnsembleSettings es;
  es.n_traj = 1000;
  es.seed = 1;
  es.workers = worker_count();
  es.trajectory.horizon = horizon;
  es.trajectory.dt = dt;
  es.trajectory.noise_substeps = substeps;
  return run_ensemble(default_initial_condition(model(), trap()), model(), es).plateau_probability;
}

void criterion8() {
  const auto t0 = Clock::now();
  const Model& m = model();
  const TrapProfile& t = trap();
  Check c;

  {  // force vs potential gradient
    std::mt19937_64 rng(1);
    std::uniform_real_distribution<double> pos(0.05, 5);
    double worst = 0;
    for (int i = 0; i < 100; ++i) {
      const double x = pos(rng);
      const double f = drift(steady_state_at(x, 0, m), m).dp;
      worst = std::max(worst, std::abs(adiabatic_force(x, m) - f) / std::abs(f));
    }
    c.require(worst <= 1e-6, fmt::format("gradient consistency {:.1e}", worst));
  }

  {  // PSD along a reference trajectory
    StochasticStepper stepper(m, {});
    Rng rng = make_stream(7, 0);
    SystemState s = sample_initial_state(default_initial_condition(m, t), m, t.x_barrier, rng);
    double worst = 0;
    int visited = 0;
    Matrix5 lower;
    bool factored = true;
    for (int n = 0; n < 400000 && s.x > 0.1 && s.x < 8; ++n) {
      s = stepper.step(s, rng);
      if (n % 20) continue;
      const NoiseCovariance cov = noise_covariance(s, m);
      Eigen::Matrix<double, 5, 5> e;
      for (std::size_t i = 0; i < kNoiseDim; ++i)
        for (std::size_t j = 0; j < kNoiseDim; ++j) e(i, j) = cov(i, j);
      const Eigen::SelfAdjointEigenSolver<Eigen::Matrix<double, 5, 5>> eig(e);
      worst = std::min(worst, eig.eigenvalues().minCoeff() / eig.eigenvalues().cwiseAbs().maxCoeff());
      factored = factored && factorize(cov, lower);
      ++visited;
    }
    c.require(worst >= -1e-12 && factored && stepper.diagnostics().fallbacks == 0,
              fmt::format("covariance PSD at {} states (min rel eigenvalue {:.1e})", visited, worst));
  }

  {  // sampled covariance, 1e6 samples
    const SystemState s = steady_state_at(0.3, 0, m);
    const NoiseCovariance cov = noise_covariance(s, m);
    const double dt = 5e-3;
    const int n = 1'000'000;
    Rng rng = make_stream(11, 0);
    NoiseDiagnostics diag;
    Eigen::Matrix<double, 5, 5> acc = Eigen::Matrix<double, 5, 5>::Zero();
    for (int k = 0; k < n; ++k) {
      const Vector5 v = sample_noise(cov, dt, rng, diag);
      const Eigen::Map<const Eigen::Matrix<double, 5, 1>> e(v.data());
      acc += e * e.transpose();
    }
    acc /= n;
    double worst = 0;
    for (std::size_t i = 0; i < kNoiseDim; ++i)
      for (std::size_t j = 0; j < kNoiseDim; ++j) {
        const double sij = cov(i, j) * dt;
        const double sigma = std::sqrt((cov(i, i) * cov(j, j) * dt * dt + sij * sij) / n);
        worst = std::max(worst, std::abs(acc(i, j) - sij) / sigma);
      }
    c.require(worst <= 5, fmt::format("sampled covariance worst deviation {:.2f} sigma", worst));
  }

  {  // energy conservation in the frozen-field limit
    const double period = 2 * std::numbers::pi / t.omega_internal;
    double lo = t.x_min, hi = 10;
    for (int i = 0; i < 200; ++i) {
      const double mid = (lo + hi) / 2;
      (adiabatic_potential(mid, m) < -4.0 ? lo : hi) = mid;
    }
    PhasePoint pt{lo, 0};
    const auto energy = [&](PhasePoint q) { return m.epsilon * q.p * q.p / 2 + adiabatic_potential(q.x, m); };
    const double e0 = energy(pt);
    const int steps = static_cast<int>(period / 5e-3);
    double worst = 0, prev = e0;
    for (int k = 0; k < 10; ++k) {
      for (int i = 0; i < steps; ++i) pt = step_conservative(pt, 5e-3, m);
      worst = std::max(worst, std::abs(energy(pt) - prev) / std::abs(e0));
      prev = energy(pt);
    }
    c.require(worst <= 1e-8, fmt::format("energy drift per period {:.1e}", worst));
  }

  {  // bit-reproducibility across worker counts
    EnsembleSettings es;
    es.n_traj = 32;
    es.seed = 3;
    es.trajectory.horizon = 500;
    es.workers = 1;
    InitialCondition ic = default_initial_condition(m, t);
    const EnsembleStats a = run_ensemble(ic, m, es);
    es.workers = 8;
    const EnsembleStats b = run_ensemble(ic, m, es);
    bool same = a.p_trapped == b.p_trapped && a.n_inside == b.n_inside &&
                std::equal(a.e_mech.begin(), a.e_mech.end(), b.e_mech.begin(), b.e_mech.end(),
                           [](double u, double v) { return u == v || (std::isnan(u) && std::isnan(v)); });
    for (std::size_t i = 0; i < a.trajectories.size(); ++i)
      same = same && a.trajectories[i].t_end == b.trajectories[i].t_end &&
             a.trajectories[i].status == b.trajectories[i].status;
    c.require(same, "workers 1 vs 8 bit-identical");
  }

  {  // dt halving with shared Brownian paths
    const double horizon = 5e3;
    const double coarse = plateau_with(5e-3, 2, horizon);
    const double fine = plateau_with(2.5e-3, 1, horizon);
    const double sigma = std::sqrt(coarse * (1 - coarse) / 1000);
    c.require(std::abs(coarse - fine) < sigma,
              fmt::format("plateau at T = 5e3: dt 5e-3 -> {:.3f}, dt 2.5e-3 -> {:.3f}, 1 sigma = {:.3f}", coarse,
                          fine, sigma));
  }
  const double own = seconds_since(t0);

  {  // statistical stability: disjoint seed ranges from the main run
    const EnsembleStats& st = main_run().stats;
    const auto half = [&](std::size_t from, std::size_t to) {
      std::size_t k = 0;
      for (std::size_t i = from; i < to; ++i) k += st.trajectories[i].status == TrajectoryStatus::trapped;
      return static_cast<double>(k) / static_cast<double>(to - from);
    };
    const double p1 = half(0, 500), p2 = half(500, 1000);
    const double se = std::sqrt(p1 * (1 - p1) / 500 + p2 * (1 - p2) / 500);
    c.require(std::abs(p1 - p2) <= 3 * se,
              fmt::format("halves {:.3f} vs {:.3f} within 3 combined SE ({:.3f})", p1, p2, 3 * se));
  }
  report(8, "property suite", c, own, 5 * 60);
}

void criterion9() {
  const auto t0 = Clock::now();
  const DerivedParams d = derive(default_params());
  Check c;
  c.require(std::abs(d.epsilon - 4.15e-4) <= 0.01 * 4.15e-4, fmt::format("epsilon = {:.4e} (~4.15e-4)", d.epsilon));
  c.require(d.epsilon < 0.1, "epsilon < 0.1");
  report(9, "semiclassical validity", c, seconds_since(t0), 1);
}

}  // namespace

int main(int argc, char** argv) {
  std::set<int> only;
  for (int i = 1; i < argc; ++i) only.insert(std::atoi(argv[i]));
  const std::function<void()> criteria[] = {criterion1, criterion2, criterion3, criterion4, criterion5,
                                            criterion6, criterion7, criterion8, criterion9};
  for (int id = 1; id <= 9; ++id) {
    if (!only.empty() && !only.count(id)) continue;
    try {
      criteria[id - 1]();
    } catch (const std::exception& e) {
      ++failures;
      fmt::print("CRITERION {} FAIL: exception: {}\n", id, e.what());
    }
  }
  fmt::print("{} criteria failed\n", failures);
  return failures == 0 ? 0 : 1;
}
