#include "evtrap/ensemble.hpp"

#include <atomic>
#include <cmath>
#include <exception>
#include <limits>
#include <mutex>
#include <numeric>
#include <thread>

#include <boost/math/tools/roots.hpp>
#include <boost/random/uniform_real_distribution.hpp>

namespace evtrap {

Boundary classify_boundary(const SystemState& s, const BoundaryThresholds& th) {
  if (s.x <= th.x_stick) return Boundary::stuck;
  if (s.x >= th.x_escape && s.p > 0) return Boundary::escaped;
  return Boundary::inside;
}

double mechanical_energy(const SystemState& s, const Model& m) {
  return 0.5 * m.epsilon * s.p * s.p + adiabatic_potential(s.x, m);
}

InitialCondition default_initial_condition(const Model& m, const TrapProfile& trap) {
  const double target = -0.01 * trap.depth;
  auto excess = [&](double x) { return adiabatic_potential(x, m) - target; };
  double lo = trap.x_min;
  double hi = lo + 0.5;
  while (excess(hi) < 0) {
    lo = hi;
    hi += 0.5;
    if (hi > 1e3) throw NoTrapError("potential does not return to zero outside the well");
  }
  boost::math::tools::eps_tolerance<double> tol(std::numeric_limits<double>::digits - 4);
  std::uintmax_t iters = 200;
  const auto [a, b] = boost::math::tools::toms748_solve(excess, lo, hi, tol, iters);
  InitialCondition ic;
  ic.x0 = 0.5 * (a + b);
  ic.v0 = 0;
  return ic;
}

SystemState sample_initial_state(const InitialCondition& ic, const Model& m, double x_barrier, Rng& rng) {
  if (!(ic.x0 > x_barrier)) throw std::invalid_argument("initial position must lie outside the inner barrier");
  double x = ic.x0;
  double v = ic.v0;
  if (ic.distribution != IcDistribution::fixed) {
    for (int attempt = 0;; ++attempt) {
      if (ic.distribution == IcDistribution::uniform) {
        boost::random::uniform_real_distribution<double> unit(-1.0, 1.0);
        x = ic.x0 + ic.x_spread * unit(rng);
        v = ic.v0 + ic.v_spread * unit(rng);
      } else {
        x = ic.x0 + ic.x_spread * standard_normal(rng);
        v = ic.v0 + ic.v_spread * standard_normal(rng);
      }
      if (x > x_barrier) break;
      if (attempt > 1000) throw std::invalid_argument("initial-condition distribution lies inside the barrier");
    }
  }
  if (!std::isfinite(v)) throw std::invalid_argument("sampled initial velocity is not finite");
  SystemState s = steady_state_at(x, m.units.velocity_to_momentum(v), m);
  if (ic.alpha0) s.alpha = *ic.alpha0;
  return s;
}

const char* name(TrajectoryStatus status) {
  switch (status) {
    case TrajectoryStatus::trapped: return "trapped";
    case TrajectoryStatus::escaped: return "escaped";
    case TrajectoryStatus::stuck: return "stuck";
    case TrajectoryStatus::aborted: return "aborted";
  }
  return "?";
}

TrajectoryRunner::TrajectoryRunner(const Model& model, TrajectorySettings settings)
    : model_(&model), settings_(settings) {
  if (!(settings_.horizon > 0)) throw std::invalid_argument("horizon must be positive");
  max_rate_ = std::max(model.kappa, std::abs(model.delta_C));
  try {
    const TrapProfile trap = characterize_trap(model);
    x_barrier_ = trap.x_barrier;
    max_rate_ = std::max(max_rate_, trap.omega_internal);
  } catch (const NoTrapError&) {
  }
  // Validates dt.
  StochasticStepper(model, {settings_.dt, settings_.scheme, settings_.noise_substeps}, max_rate_);
}

TrajectoryOutcome TrajectoryRunner::run(const InitialCondition& ic, Rng& rng, const RecordSpec& record) const {
  const Model& m = *model_;
  const TrajectorySettings& cfg = settings_;
  StochasticStepper stepper(m, {cfg.dt, cfg.scheme, cfg.noise_substeps}, max_rate_);

  TrajectoryOutcome out;
  SystemState s = sample_initial_state(ic, m, x_barrier_, rng);
  out.initial_state = s;
  out.initial_energy = mechanical_energy(s, m);

  const auto n_steps = static_cast<std::uint64_t>(std::llround(cfg.horizon / cfg.dt));
  const std::uint64_t tail_start = n_steps - static_cast<std::uint64_t>(std::ceil(0.1 * static_cast<double>(n_steps)));
  std::uint64_t bin_steps = 0;
  if (record.bin_width > 0) {
    bin_steps = std::max<std::uint64_t>(1, static_cast<std::uint64_t>(std::llround(record.bin_width / cfg.dt)));
    out.bin_energy.push_back(out.initial_energy);
  }

  double last_inner = -std::numeric_limits<double>::infinity();
  double last_outer = -std::numeric_limits<double>::infinity();
  double tail_sum = 0;
  std::uint64_t tail_count = 0;
  out.status = TrajectoryStatus::trapped;

  std::uint64_t n = 1;
  for (; n <= n_steps; ++n) {
    const double p_prev = s.p;
    s = cfg.noiseless ? step_deterministic(s, cfg.dt, m) : stepper.step(s, rng);
    s.t = static_cast<double>(n) * cfg.dt;

    if (!std::isfinite(s.x) || !std::isfinite(s.p) || !std::isfinite(s.alpha[0].real()) ||
        !std::isfinite(s.alpha[0].imag()) || !std::isfinite(s.alpha[1].real()) ||
        !std::isfinite(s.alpha[1].imag())) {
      out.status = TrajectoryStatus::aborted;
      break;
    }
    const Boundary where = classify_boundary(s, cfg.thresholds);
    if (where == Boundary::escaped) {
      out.status = TrajectoryStatus::escaped;
      break;
    }
    if (where == Boundary::stuck) {
      out.status = TrajectoryStatus::stuck;
      break;
    }

    if (p_prev < 0 && s.p >= 0 && s.t - last_inner >= cfg.bounce_guard) {
      ++out.bounce_count;
      last_inner = s.t;
    }
    if (record.turning_points && p_prev > 0 && s.p <= 0 && s.t - last_outer >= cfg.bounce_guard) {
      out.outer_turns.push_back({s.t, s.x, mechanical_energy(s, m)});
      last_outer = s.t;
    }
    if (n > tail_start) {
      tail_sum += 0.5 * m.epsilon * s.p * s.p;
      ++tail_count;
    }
    if (bin_steps != 0 && n % bin_steps == 0) out.bin_energy.push_back(mechanical_energy(s, m));
    if (record.stride != 0 && n % record.stride == 0) {
      out.series.push_back({s.t, s.x, s.p, s.photons(Mode::red), s.photons(Mode::blue), mechanical_energy(s, m)});
    }
  }

  out.t_end = static_cast<double>(std::min(n, n_steps)) * cfg.dt;
  out.final_state = s;
  out.noise_fallbacks = stepper.diagnostics().fallbacks;
  const bool trapped = out.status == TrajectoryStatus::trapped;
  out.final_energy = trapped ? mechanical_energy(s, m) : std::numeric_limits<double>::quiet_NaN();
  out.tail_kinetic = trapped && tail_count > 0 ? tail_sum / static_cast<double>(tail_count)
                                              : std::numeric_limits<double>::quiet_NaN();
  return out;
}

TrajectoryOutcome run_trajectory(const InitialCondition& ic, const Model& model, const TrajectorySettings& settings,
                                 Rng& rng, const RecordSpec& record) {
  return TrajectoryRunner(model, settings).run(ic, rng, record);
}

double EnsembleStats::trapped_at(double t) const {
  if (bin_times.empty()) return NAN;
  std::size_t k = 0;
  while (k + 1 < bin_times.size() && bin_times[k + 1] <= t) ++k;
  return p_trapped[k];
}

namespace {

struct PerTrajectory {
  TrajectorySummary summary{};
  std::vector<double> bin_energy;
  double tail_kinetic = 0;
  std::uint64_t fallbacks = 0;
};

}  // namespace

EnsembleStats run_ensemble(const InitialCondition& ic, const Model& model, const EnsembleSettings& settings) {
  if (settings.n_traj < 1) throw std::invalid_argument("n_traj must be >= 1");
  if (!(settings.bin_width > 0)) throw std::invalid_argument("bin_width must be positive");
  const TrajectoryRunner runner(model, settings.trajectory);
  RecordSpec record;
  record.bin_width = settings.bin_width;

  std::vector<PerTrajectory> results(settings.n_traj);
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;

  auto work = [&] {
    for (std::size_t i = next++; i < settings.n_traj; i = next++) {
      try {
        Rng rng = make_stream(settings.seed, i);
        TrajectoryOutcome o = runner.run(ic, rng, record);
        results[i] = {{o.status, o.t_end, o.bounce_count}, std::move(o.bin_energy), o.tail_kinetic,
                      o.noise_fallbacks};
      } catch (...) {
        std::lock_guard lock(failure_mutex);
        if (!failure) failure = std::current_exception();
        next = settings.n_traj;
      }
    }
  };

  const unsigned workers = std::max(1u, std::min<unsigned>(settings.workers, static_cast<unsigned>(settings.n_traj)));
  if (workers == 1) {
    work();
  } else {
    std::vector<std::jthread> pool;
    pool.reserve(workers);
    for (unsigned w = 0; w < workers; ++w) pool.emplace_back(work);
  }
  if (failure) std::rethrow_exception(failure);

  // Aggregation in trajectory order, independent of scheduling.
  EnsembleStats st;
  st.n_traj = settings.n_traj;
  st.seed = settings.seed;
  st.bin_width = settings.bin_width;
  const auto n_steps = static_cast<std::uint64_t>(std::llround(settings.trajectory.horizon / settings.trajectory.dt));
  const auto bin_steps =
      std::max<std::uint64_t>(1, static_cast<std::uint64_t>(std::llround(settings.bin_width / settings.trajectory.dt)));
  const std::size_t n_bins = static_cast<std::size_t>(n_steps / bin_steps) + 1;
  st.bin_times.resize(n_bins);
  st.p_trapped.assign(n_bins, 0.0);
  st.n_inside.assign(n_bins, 0);
  st.e_mech.assign(n_bins, 0.0);
  for (std::size_t k = 0; k < n_bins; ++k)
    st.bin_times[k] = static_cast<double>(k * bin_steps) * settings.trajectory.dt;

  double tail_sum = 0;
  for (const PerTrajectory& r : results) {
    st.trajectories.push_back(r.summary);
    st.noise_fallbacks += r.fallbacks;
    switch (r.summary.status) {
      case TrajectoryStatus::trapped:
        ++st.n_trapped;
        tail_sum += r.tail_kinetic;
        break;
      case TrajectoryStatus::escaped: ++st.n_escaped; break;
      case TrajectoryStatus::stuck: ++st.n_stuck; break;
      case TrajectoryStatus::aborted: ++st.n_aborted; break;
    }
    for (std::size_t k = 0; k < r.bin_energy.size() && k < n_bins; ++k) {
      ++st.n_inside[k];
      st.e_mech[k] += r.bin_energy[k];
    }
  }
  const double n = static_cast<double>(settings.n_traj);
  for (std::size_t k = 0; k < n_bins; ++k) {
    st.p_trapped[k] = static_cast<double>(st.n_inside[k]) / n;
    st.e_mech[k] = st.n_inside[k] > 0 ? st.e_mech[k] / static_cast<double>(st.n_inside[k])
                                      : std::numeric_limits<double>::quiet_NaN();
  }
  st.plateau_probability = static_cast<double>(st.n_trapped) / n;
  st.plateau_stderr = std::sqrt(st.plateau_probability * (1 - st.plateau_probability) / n);
  st.e_kin_final = st.n_trapped > 0 ? tail_sum / static_cast<double>(st.n_trapped)
                                    : std::numeric_limits<double>::quiet_NaN();
  return st;
}

}  // namespace evtrap
