#include "evtrap/commands.hpp"

#include <cmath>
#include <fstream>
#include <functional>
#include <ostream>
#include <sstream>

#include <fmt/format.h>

#include "CLI11.hpp"
#include "evtrap/ensemble.hpp"
#include "evtrap/fields.hpp"

namespace evtrap {

namespace fs = std::filesystem;
using nlohmann::ordered_json;

namespace {

fs::path prepare_out_dir(const RunConfig& config) {
  const fs::path dir(config.out);
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec || !fs::is_directory(dir))
    throw IoError(fmt::format("cannot create output directory '{}': {}", dir.string(), ec.message()));
  return dir;
}

void write_file(const fs::path& path, const std::string& content) {
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw IoError(fmt::format("cannot open '{}' for writing", path.string()));
  f << content;
  f.close();
  if (!f) throw IoError(fmt::format("write to '{}' failed", path.string()));
}

// null for NaN, so JSON stays valid.
ordered_json number_or_null(double v) { return std::isfinite(v) ? ordered_json(v) : ordered_json(nullptr); }

ordered_json units_json(const UnitSystem& u) {
  return {{"time_s", u.time_s},           {"length_m", u.length_m}, {"momentum_kg_m_per_s", u.momentum_si},
          {"energy_J", u.energy_j},       {"rate_per_s", u.rate_hz}, {"velocity_m_per_s", u.velocity_ms}};
}

int guarded(std::ostream& err, const std::function<int()>& body) {
  try {
    return body();
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const ValidationError& e) {
    err << "invalid parameter " << e.what() << '\n';
    return kExitConfig;
  } catch (const StepTooLarge& e) {
    err << "config error: dt: " << e.what() << '\n';
    return kExitConfig;
  } catch (const NoTrapError& e) {
    err << "NoTrapError: " << e.what() << '\n';
    return kExitNoTrap;
  } catch (const IoError& e) {
    err << "I/O error: " << e.what() << '\n';
    return kExitIo;
  } catch (const std::invalid_argument& e) {
    err << "config error: " << e.what() << '\n';
    return kExitConfig;
  }
}

}  // namespace

ordered_json characterize_report(const RunConfig& config) {
  validate(config);
  const Model model = make_model(config);
  const DerivedParams& d = model.derived;
  const UnitSystem& u = model.units;
  const double gamma = config.physical.gamma;
  const double kappa = config.physical.kappa;

  ordered_json derived = {
      {"u0_per_s", d.u0},
      {"u0_over_kappa", d.u0 / kappa},
      {"u0_over_gamma", d.u0 / gamma},
      {"gamma0_per_s", d.gamma0},
      {"gamma0_over_gamma", d.gamma0 / gamma},
      {"n_sat", number_or_null(d.n_sat)},
      {"epsilon", d.epsilon},
      {"n_empty_r", d.n_empty_r},
      {"n_empty_b", d.n_empty_b},
      {"sign_r", d.sign_r},
      {"sign_b", d.sign_b},
      {"warnings", d.warnings},
  };

  const TrapProfile t = characterize_trap(model);
  ordered_json trap = {
      {"x_min_k", t.x_min},
      {"x_min_m", u.length_to_si(t.x_min)},
      {"depth_hbar_gamma", t.depth},
      {"depth_J", u.energy_to_si(t.depth)},
      {"x_barrier_k", t.x_barrier},
      {"x_barrier_m", u.length_to_si(t.x_barrier)},
      {"barrier_height_hbar_gamma", t.barrier_height},
      {"barrier_height_J", u.energy_to_si(t.barrier_height)},
      {"omega_trap_per_s", t.omega_trap},
      {"omega_trap_over_gamma", t.omega_internal},
      {"sat_max", t.sat_max},
      {"sat_param_sum_max", t.sat_param_sum_max},
  };
  return {{"derived", derived}, {"trap", trap}, {"units", units_json(u)}, {"config", to_json(config)}};
}

int cmd_characterize(const RunConfig& config, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    const ordered_json report = characterize_report(config);
    for (const auto& w : report["derived"]["warnings"]) err << "warning: " << w.get<std::string>() << '\n';
    out << report.dump(2) << '\n';
    return kExitOk;
  });
}

int cmd_potential(const RunConfig& config, std::ostream& err) {
  return guarded(err, [&] {
    validate(config);
    const Model model = make_model(config);
    const std::vector<double> grid = uniform_grid(config.grid_min, config.grid_max, config.grid_step);
    const auto rows = potential_scan(model, grid);
    std::ostringstream table;
    write_potential_table(table, rows);
    const fs::path dir = prepare_out_dir(config);
    write_file(dir / "potential.csv", table.str());
    write_file(dir / "potential.cfg", to_config_text(config));
    return kExitOk;
  });
}

int cmd_trajectory(const RunConfig& config, std::ostream& err) {
  return guarded(err, [&] {
    validate(config);
    const Model model = make_model(config);
    const InitialCondition ic = initial_condition(config, model);
    const TrajectoryRunner runner(model, trajectory_settings(config));
    Rng rng = make_stream(config.seed, 0);
    RecordSpec record;
    record.stride = config.stride;
    record.turning_points = true;
    const TrajectoryOutcome o = runner.run(ic, rng, record);

    std::string series = "t,x,p,n_r,n_b,E_mech\n";
    for (const auto& s : o.series)
      series += fmt::format("{:.10g},{:.12g},{:.12g},{:.10g},{:.10g},{:.12g}\n", s.t, s.x, s.p, s.n_red, s.n_blue,
                            s.e_mech);

    ordered_json turns = ordered_json::array();
    for (const auto& tp : o.outer_turns) turns.push_back({tp.t, tp.x, tp.e_mech});
    const UnitSystem& u = model.units;
    ordered_json summary = {
        {"status", name(o.status)},
        {"seed", config.seed},
        {"noise", config.noise},
        {"t_end", o.t_end},
        {"t_end_s", u.time_to_si(o.t_end)},
        {"bounce_count", o.bounce_count},
        {"initial_x_k", o.initial_state.x},
        {"initial_p_hbar_k", o.initial_state.p},
        {"initial_energy_hbar_gamma", o.initial_energy},
        {"final_x_k", o.final_state.x},
        {"final_p_hbar_k", o.final_state.p},
        {"final_energy_hbar_gamma", number_or_null(o.final_energy)},
        {"final_energy_J", number_or_null(u.energy_to_si(o.final_energy))},
        {"tail_kinetic_hbar_gamma", number_or_null(o.tail_kinetic)},
        {"noise_fallbacks", o.noise_fallbacks},
        {"series_rows", o.series.size()},
        {"outer_turning_points_t_x_E", turns},
        {"units", units_json(u)},
        {"config", to_json(config)},
    };
    const fs::path dir = prepare_out_dir(config);
    write_file(dir / "trajectory.csv", series);
    write_file(dir / "trajectory_summary.json", summary.dump(2) + "\n");
    write_file(dir / "trajectory.cfg", to_config_text(config));
    if (o.status == TrajectoryStatus::aborted) {
      err << "numeric abort: non-finite state at t = " << o.t_end << '\n';
      return kExitNumericAbort;
    }
    return kExitOk;
  });
}

int cmd_ensemble(const RunConfig& config, std::ostream& err) {
  return guarded(err, [&] {
    validate(config);
    const Model model = make_model(config);
    const InitialCondition ic = initial_condition(config, model);
    const EnsembleStats st = run_ensemble(ic, model, ensemble_settings(config));

    std::string trapping = "t,p_trapped,n_inside\n";
    std::string energy = "t,e_mech,n_inside\n";
    for (std::size_t k = 0; k < st.bin_times.size(); ++k) {
      trapping += fmt::format("{:.10g},{:.10g},{}\n", st.bin_times[k], st.p_trapped[k], st.n_inside[k]);
      if (st.n_inside[k] > 0)
        energy += fmt::format("{:.10g},{:.12g},{}\n", st.bin_times[k], st.e_mech[k], st.n_inside[k]);
    }
    std::string trajectories = "index,status,t_end,bounce_count\n";
    for (std::size_t i = 0; i < st.trajectories.size(); ++i) {
      const auto& tr = st.trajectories[i];
      trajectories += fmt::format("{},{},{:.10g},{}\n", i, name(tr.status), tr.t_end, tr.bounce_count);
    }

    const UnitSystem& u = model.units;
    ordered_json summary = {
        {"n_traj", st.n_traj},
        {"seed", st.seed},
        {"horizon", config.horizon},
        {"horizon_s", u.time_to_si(config.horizon)},
        {"plateau_probability", st.plateau_probability},
        {"plateau_stderr", st.plateau_stderr},
        {"p_trapped_half_horizon", st.trapped_at(0.5 * config.horizon)},
        {"e_kin_final_hbar_gamma", number_or_null(st.e_kin_final)},
        {"e_kin_final_J", number_or_null(u.energy_to_si(st.e_kin_final))},
        {"n_trapped", st.n_trapped},
        {"n_escaped", st.n_escaped},
        {"n_stuck", st.n_stuck},
        {"n_aborted", st.n_aborted},
        {"noise_fallbacks", st.noise_fallbacks},
        {"initial_x_k", ic.x0},
        {"initial_v_m_per_s", ic.v0},
        {"units", units_json(u)},
        {"config", to_json(config)},
    };
    const fs::path dir = prepare_out_dir(config);
    write_file(dir / "trapping.csv", trapping);
    write_file(dir / "energy.csv", energy);
    write_file(dir / "trajectories.csv", trajectories);
    write_file(dir / "ensemble_summary.json", summary.dump(2) + "\n");
    write_file(dir / "ensemble.cfg", to_config_text(config));
    if (st.n_aborted > 0) {
      err << "numeric abort in " << st.n_aborted << " trajectories\n";
      return kExitNumericAbort;
    }
    return kExitOk;
  });
}

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Atom capture and cooling in a bichromatic evanescent-wave cavity trap"};
  app.require_subcommand(1);

  std::string config_path;
  std::vector<std::string> overrides;
  std::optional<std::uint64_t> seed;
  std::optional<double> dt, horizon;
  std::optional<std::size_t> n_traj;
  std::optional<unsigned> workers;
  bool no_noise = false;
  std::optional<std::string> out_dir;

  app.add_option("--config", config_path, "flat key = value config file");
  app.add_option("--set", overrides, "override one config key, key=value (repeatable)");
  app.add_option("--seed", seed, "master seed");
  app.add_option("--dt", dt, "time step, 1/gamma");
  app.add_option("--horizon", horizon, "integration horizon, 1/gamma");
  app.add_option("--n-traj", n_traj, "number of trajectories");
  app.add_option("--workers", workers, "worker threads");
  app.add_flag("--no-noise", no_noise, "integrate the noiseless equations");
  app.add_option("--out", out_dir, "output directory");

  auto* characterize = app.add_subcommand("characterize", "print derived parameters and the trap profile");
  auto* potential = app.add_subcommand("potential", "write the adiabatic potential table");
  auto* trajectory = app.add_subcommand("trajectory", "run and record one trajectory");
  auto* ensemble = app.add_subcommand("ensemble", "run a trajectory ensemble");
  for (auto* sub : {characterize, potential, trajectory, ensemble}) sub->fallthrough();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "config error: " << e.what() << '\n';
    return kExitConfig;
  }

  RunConfig config;
  const int status = guarded(err, [&] {
    if (!config_path.empty()) config = load_config_file(config_path, config);
    for (const auto& kv : overrides) {
      const auto eq = kv.find('=');
      if (eq == std::string::npos) throw ConfigError(kv, "--set expects key=value");
      apply_setting(config, kv.substr(0, eq), kv.substr(eq + 1));
    }
    if (seed) config.seed = *seed;
    if (dt) config.dt = *dt;
    if (horizon) config.horizon = *horizon;
    if (n_traj) config.n_traj = *n_traj;
    if (workers) config.workers = *workers;
    if (no_noise) config.noise = false;
    if (out_dir) config.out = *out_dir;
    return kExitOk;
  });
  if (status != kExitOk) return status;

  if (*characterize) return cmd_characterize(config, out, err);
  if (*potential) return cmd_potential(config, err);
  if (*trajectory) return cmd_trajectory(config, err);
  return cmd_ensemble(config, err);
}

}  // namespace evtrap
