#include "evtrap/sde.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include <boost/random/normal_distribution.hpp>

#include "evtrap/fields.hpp"

namespace evtrap {

namespace {

// Flat view (x, p, Re a_r, Im a_r, Re a_b, Im a_b) used by the integrators.
using Flat = std::array<double, 6>;

Flat flatten(const SystemState& s) {
  return {s.x, s.p, s.alpha[0].real(), s.alpha[0].imag(), s.alpha[1].real(), s.alpha[1].imag()};
}

SystemState unflatten(const Flat& y, double t) {
  SystemState s;
  s.x = y[0];
  s.p = y[1];
  s.alpha[0] = {y[2], y[3]};
  s.alpha[1] = {y[4], y[5]};
  s.t = t;
  return s;
}

// exp(-d) for the small position increments inside one step.
inline double exp_neg_small(double d) {
  if (std::abs(d) > 1e-3) return std::exp(-d);
  return 1 - d * (1 - d / 2 * (1 - d / 3 * (1 - d / 4 * (1 - d / 5))));
}

// Drift with fr = exp(-x) supplied by the caller.
Flat flat_drift(const Flat& y, const Model& m, double fr) {
  const double x = y[0];
  Flat d{};
  d[0] = m.epsilon * y[1];
  const double x2 = x * x;
  double dp = -3 * m.c3 / (x2 * x2);
  const double ur = fr * fr;
  const double intensity[2] = {ur, ur * ur};
  for (std::size_t i = 0; i < 2; ++i) {
    const ModeConstants& c = m.modes[i];
    const double u = intensity[i];
    const double re = y[2 + 2 * i];
    const double im = y[3 + 2 * i];
    const double n = re * re + im * im;
    const double du = -2 * c.decay * u;
    dp -= c.sign * m.u0 * (n - 0.5) * du;
    const double w = m.delta_C - c.sign * m.u0 * u;
    const double loss = m.kappa + m.gamma0 * u;
    // d alpha = eta + (i w - loss) alpha
    d[2 + 2 * i] = c.eta - w * im - loss * re;
    d[3 + 2 * i] = w * re - loss * im;
  }
  d[1] = dp;
  return d;
}

Flat flat_drift(const Flat& y, const Model& m) { return flat_drift(y, m, std::exp(-y[0])); }

Flat axpy(const Flat& y, double h, const Flat& k) {
  Flat r;
  for (std::size_t i = 0; i < r.size(); ++i) r[i] = y[i] + h * k[i];
  return r;
}

// fr0 = exp(-y[0]).
Flat rk4(const Flat& y, double dt, const Model& m, double fr0) {
  const Flat k1 = flat_drift(y, m, fr0);
  const Flat y2 = axpy(y, 0.5 * dt, k1);
  const Flat k2 = flat_drift(y2, m, fr0 * exp_neg_small(y2[0] - y[0]));
  const Flat y3 = axpy(y, 0.5 * dt, k2);
  const Flat k3 = flat_drift(y3, m, fr0 * exp_neg_small(y3[0] - y[0]));
  const Flat y4 = axpy(y, dt, k3);
  const Flat k4 = flat_drift(y4, m, fr0 * exp_neg_small(y4[0] - y[0]));
  Flat r;
  for (std::size_t i = 0; i < r.size(); ++i) r[i] = y[i] + dt / 6 * (k1[i] + 2 * k2[i] + 2 * k3[i] + k4[i]);
  return r;
}

Flat rk4(const Flat& y, double dt, const Model& m) { return rk4(y, dt, m, std::exp(-y[0])); }

// Heun (explicit trapezoidal) step; fr0 = exp(-y[0]).
Flat heun(const Flat& y, double dt, const Model& m, double fr0) {
  const Flat k1 = flat_drift(y, m, fr0);
  const Flat y2 = axpy(y, dt, k1);
  const Flat k2 = flat_drift(y2, m, fr0 * exp_neg_small(y2[0] - y[0]));
  Flat r;
  for (std::size_t i = 0; i < r.size(); ++i) r[i] = y[i] + 0.5 * dt * (k1[i] + k2[i]);
  return r;
}

NoiseTerms noise_terms(const SystemState& s, const Model& m, double fr) {
  NoiseTerms t;
  const double f[2] = {fr, fr * fr};
  for (std::size_t i = 0; i < 2; ++i) {
    const ModeConstants& mc = m.modes[i];
    const double df = -mc.decay * f[i];
    const double f2 = f[i] * f[i];
    const auto& a = s.alpha[i];
    const double excess = std::max(std::norm(a) - 0.5, 0.0);
    t.var_p += 2 * m.gamma0 * excess * (df * df + mc.k_opt * mc.k_opt * m.u2_bar * f2);
    t.var_quadrature[i] = m.field_noise_factor * (m.kappa + m.gamma0 * f2) / 4;
    const double cross = m.gamma0 * f[i] * df;
    t.cross[1 + 2 * i] = -cross * a.imag();
    t.cross[2 + 2 * i] = cross * a.real();
  }
  return t;
}

}  // namespace

SystemState steady_state_at(double x, double p, const Model& model) {
  SystemState s;
  s.x = x;
  s.p = p;
  for (Mode m : kModes) s.amplitude(m) = steady_state_alpha(m, x, model);
  return s;
}

StateDerivative drift(const SystemState& state, const Model& model) {
  const Flat d = flat_drift(flatten(state), model);
  StateDerivative r;
  r.dx = d[0];
  r.dp = d[1];
  r.dalpha[0] = {d[2], d[3]};
  r.dalpha[1] = {d[4], d[5]};
  return r;
}

NoiseTerms noise_terms(const SystemState& state, const Model& model) {
  return noise_terms(state, model, std::exp(-state.x));
}

NoiseCovariance noise_covariance(const SystemState& state, const Model& model) {
  const NoiseTerms t = noise_terms(state, model);
  NoiseCovariance cov;
  auto& c = cov.m;
  c[kNoiseP][kNoiseP] = t.var_p;
  for (std::size_t i = 0; i < 2; ++i) {
    c[1 + 2 * i][1 + 2 * i] = t.var_quadrature[i];
    c[2 + 2 * i][2 + 2 * i] = t.var_quadrature[i];
  }
  for (std::size_t j = 1; j < kNoiseDim; ++j) c[kNoiseP][j] = c[j][kNoiseP] = t.cross[j];
  return cov;
}

Vector5 correlate_noise(const NoiseTerms& t, double dt, const Vector5& z, NoiseDiagnostics& diagnostics) {
  const double sqrt_dt = std::sqrt(dt);
  Vector5 out{};
  double schur = t.var_p;
  double correlated = 0;
  for (std::size_t i = 0; i < 2; ++i) {
    const double v = t.var_quadrature[i];
    const double sd = std::sqrt(v);
    for (std::size_t j = 1 + 2 * i; j <= 2 + 2 * i; ++j) {
      out[j] = sd * z[j] * sqrt_dt;
      if (v > 0) {
        schur -= t.cross[j] * t.cross[j] / v;
        correlated += t.cross[j] / sd * z[j];
      }
    }
  }
  if (schur < -1e-12 * t.var_p) {
    ++diagnostics.fallbacks;
    out[kNoiseP] = std::sqrt(std::max(t.var_p, 0.0)) * z[kNoiseP] * sqrt_dt;
    return out;
  }
  out[kNoiseP] = (correlated + std::sqrt(std::max(schur, 0.0)) * z[kNoiseP]) * sqrt_dt;
  return out;
}

bool factorize(const NoiseCovariance& cov, Matrix5& l) {
  const auto& a = cov.m;
  double scale = 0;
  for (std::size_t i = 0; i < kNoiseDim; ++i) scale = std::max(scale, std::abs(a[i][i]));
  l = Matrix5{};
  if (scale == 0) {
    for (std::size_t i = 0; i < kNoiseDim; ++i)
      for (std::size_t j = 0; j < kNoiseDim; ++j)
        if (a[i][j] != 0) return false;
    return true;
  }
  const double pivot_tol = 1e-14 * scale;
  for (std::size_t j = 0; j < kNoiseDim; ++j) {
    double d = a[j][j];
    for (std::size_t k = 0; k < j; ++k) d -= l[j][k] * l[j][k];
    if (d < -pivot_tol) return false;
    if (d <= pivot_tol) {
      // Zero pivot: the remaining column must vanish as well.
      for (std::size_t i = j + 1; i < kNoiseDim; ++i) {
        double v = a[i][j];
        for (std::size_t k = 0; k < j; ++k) v -= l[i][k] * l[j][k];
        if (std::abs(v) > 1e-10 * std::sqrt(std::abs(a[i][i]) * scale) + pivot_tol) return false;
      }
      continue;
    }
    const double ljj = std::sqrt(d);
    l[j][j] = ljj;
    for (std::size_t i = j + 1; i < kNoiseDim; ++i) {
      double v = a[i][j];
      for (std::size_t k = 0; k < j; ++k) v -= l[i][k] * l[j][k];
      l[i][j] = v / ljj;
    }
  }
  return true;
}

Rng make_stream(std::uint64_t master_seed, std::uint64_t index) {
  std::seed_seq seq{static_cast<std::uint32_t>(master_seed), static_cast<std::uint32_t>(master_seed >> 32),
                    static_cast<std::uint32_t>(index), static_cast<std::uint32_t>(index >> 32)};
  return Rng(seq);
}

double standard_normal(Rng& rng) {
  boost::random::normal_distribution<double> normal;
  return normal(rng);
}

Vector5 correlate_noise(const NoiseCovariance& cov, double dt, const Vector5& z, NoiseDiagnostics& diagnostics) {
  Matrix5 l;
  if (!factorize(cov, l)) {
    ++diagnostics.fallbacks;
    l = Matrix5{};
    for (std::size_t i = 0; i < kNoiseDim; ++i) l[i][i] = std::sqrt(std::max(cov.m[i][i], 0.0));
  }
  const double sqrt_dt = std::sqrt(dt);
  Vector5 out{};
  for (std::size_t i = 0; i < kNoiseDim; ++i) {
    double v = 0;
    for (std::size_t k = 0; k <= i; ++k) v += l[i][k] * z[k];
    out[i] = v * sqrt_dt;
  }
  return out;
}

Vector5 sample_noise(const NoiseCovariance& cov, double dt, Rng& rng, NoiseDiagnostics& diagnostics) {
  Vector5 z;
  for (auto& v : z) v = standard_normal(rng);
  return correlate_noise(cov, dt, z, diagnostics);
}

SystemState step_deterministic(const SystemState& state, double dt, const Model& model) {
  return unflatten(rk4(flatten(state), dt, model), state.t + dt);
}

SystemState step_euler(const SystemState& state, double dt, const Model& model) {
  const Flat y = flatten(state);
  return unflatten(axpy(y, dt, flat_drift(y, model)), state.t + dt);
}

PhasePoint step_conservative(PhasePoint pt, double dt, const Model& m) {
  auto rhs = [&m](double x, double p) { return PhasePoint{m.epsilon * p, adiabatic_force(x, m)}; };
  const PhasePoint k1 = rhs(pt.x, pt.p);
  const PhasePoint k2 = rhs(pt.x + 0.5 * dt * k1.x, pt.p + 0.5 * dt * k1.p);
  const PhasePoint k3 = rhs(pt.x + 0.5 * dt * k2.x, pt.p + 0.5 * dt * k2.p);
  const PhasePoint k4 = rhs(pt.x + dt * k3.x, pt.p + dt * k3.p);
  return {pt.x + dt / 6 * (k1.x + 2 * k2.x + 2 * k3.x + k4.x),
          pt.p + dt / 6 * (k1.p + 2 * k2.p + 2 * k3.p + k4.p)};
}

double max_resolved_rate(const Model& model) {
  double rate = std::max(model.kappa, std::abs(model.delta_C));
  try {
    rate = std::max(rate, characterize_trap(model).omega_internal);
  } catch (const NoTrapError&) {
  }
  return rate;
}

StochasticStepper::StochasticStepper(const Model& model, StepperOptions options)
    : StochasticStepper(model, options, max_resolved_rate(model)) {}

StochasticStepper::StochasticStepper(const Model& model, StepperOptions options, double max_rate)
    : model_(&model), options_(options) {
  if (!(options_.dt > 0)) throw StepTooLarge("time step must be positive");
  if (options_.dt * max_rate > 0.1) {
    throw StepTooLarge("time step " + std::to_string(options_.dt) + " does not resolve the fastest rate " +
                       std::to_string(max_rate) + " (need dt * rate <= 0.1)");
  }
  if (options_.noise_substeps < 1) throw std::invalid_argument("noise_substeps must be >= 1");
}

SystemState StochasticStepper::step_noiseless(const SystemState& state) const {
  switch (options_.scheme) {
    case StochasticScheme::heun_additive: {
      const Flat y = flatten(state);
      return unflatten(heun(y, options_.dt, *model_, std::exp(-y[0])), state.t + options_.dt);
    }
    case StochasticScheme::euler_maruyama: return step_euler(state, options_.dt, *model_);
    case StochasticScheme::rk4_additive: break;
  }
  return step_deterministic(state, options_.dt, *model_);
}

SystemState StochasticStepper::step(const SystemState& state, Rng& rng) {
  Vector5 z{};
  for (int s = 0; s < options_.noise_substeps; ++s)
    for (auto& v : z) v += standard_normal(rng);
  if (options_.noise_substeps > 1) {
    const double norm = 1 / std::sqrt(static_cast<double>(options_.noise_substeps));
    for (auto& v : z) v *= norm;
  }
  const double fr = std::exp(-state.x);
  const Vector5 xi = correlate_noise(noise_terms(state, *model_, fr), options_.dt, z, diagnostics_);
  const Flat y = flatten(state);
  Flat next;
  switch (options_.scheme) {
    case StochasticScheme::heun_additive: next = heun(y, options_.dt, *model_, fr); break;
    case StochasticScheme::rk4_additive: next = rk4(y, options_.dt, *model_, fr); break;
    case StochasticScheme::euler_maruyama: next = axpy(y, options_.dt, flat_drift(y, *model_, fr)); break;
  }
  next[1] += xi[kNoiseP];
  next[2] += xi[kNoiseRedRe];
  next[3] += xi[kNoiseRedIm];
  next[4] += xi[kNoiseBlueRe];
  next[5] += xi[kNoiseBlueIm];
  return unflatten(next, state.t + options_.dt);
}

SystemState step_stochastic(const SystemState& state, double dt, const Model& model, Rng& rng,
                            NoiseDiagnostics& diagnostics, StochasticScheme scheme) {
  StochasticStepper stepper(model, {dt, scheme, 1});
  SystemState next = stepper.step(state, rng);
  diagnostics.fallbacks += stepper.diagnostics().fallbacks;
  return next;
}

}  // namespace evtrap
