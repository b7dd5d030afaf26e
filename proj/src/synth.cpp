#include "scres/synth.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "scres/error.hpp"
#include "scres/resonance.hpp"
#include "scres/rng.hpp"

namespace scres {
namespace {

Rng stream(const DeviceTruth& truth, Stream s) { return Rng(truth.seed, static_cast<std::uint64_t>(s)); }

double interp_clamped(std::span<const double> x, std::span<const double> y, double t) {
  if (t <= x.front()) return y.front();
  if (t >= x.back()) return y.back();
  const auto it = std::upper_bound(x.begin(), x.end(), t);
  const auto i = static_cast<std::size_t>(it - x.begin());
  const double u = (t - x[i - 1]) / (x[i] - x[i - 1]);
  return y[i - 1] + u * (y[i] - y[i - 1]);
}

}  // namespace

void validate(const DeviceTruth& truth) {
  validate(truth.resonance);
  validate(truth.tls);
  validate(truth.mb);
  require(truth.thermal_tau_s > 0, ErrorCode::InvariantViolation, "thermal_tau_s must be > 0");
  const auto& n = truth.noise;
  require(n.trace >= 0 && n.loss_log >= 0 && n.temp_sweep_hz >= 0 && n.thermal_hz >= 0 && n.phase_rad >= 0,
          ErrorCode::InvariantViolation, "noise levels must be >= 0");
}

DeviceTruth representative_device(std::uint64_t seed) {
  DeviceTruth d;
  d.resonance = ResonanceFit::from_qi_qc(Hertz(6e9), 1e5, 5e4, 0.0, Background{1.0, 0.0, 0.0});
  d.tls.delta_tls0 = 8e-6;
  d.tls.n_c = 10.0;
  d.tls.beta = 0.5;
  d.tls.delta_other = 4e-6;
  d.tls.frequency = Hertz(6e9);
  d.tls.temperature = Kelvin(0.1);
  d.mb.omega = to_angular(Hertz(6e9));
  d.mb.t_c = Kelvin(1.14);
  d.mb.gap_ratio = 3.31;
  d.mb.g_reduced = 3.65e4;
  d.mb.delta_tls0 = 5e-6;
  // Offsets put f near 6 GHz and Qi near 3e5 at the bottom of the sweep.
  d.mb.f_r = Complex(6e9 + 48.0 * 3.65e4, -1e4);
  d.thermal_tau_s = 10.0;
  d.noise = {0.005, 0.05, 30.0, 2.0, 0.0};
  d.seed = seed;
  return d;
}

std::vector<double> linewidth_grid(const ResonanceFit& fit, std::size_t n, double half_span_linewidths) {
  require(n >= 2, ErrorCode::InvalidArgument, "grid needs >= 2 points");
  const double lw = fit.f0.value() / fit.q_total;
  std::vector<double> f(n);
  for (std::size_t i = 0; i < n; ++i) {
    f[i] = fit.f0.value() + lw * half_span_linewidths * (2.0 * static_cast<double>(i) / static_cast<double>(n - 1) - 1.0);
  }
  return f;
}

ComplexTrace gen_trace(const DeviceTruth& truth, std::span<const double> f_grid_hz) {
  Rng rng = stream(truth, Stream::Trace);
  const double sigma = truth.noise.trace * truth.resonance.background.amplitude;
  std::vector<double> f(f_grid_hz.begin(), f_grid_hz.end());
  std::vector<Complex> v(f.size());
  for (std::size_t i = 0; i < f.size(); ++i) {
    const double re = rng.normal();
    const double im = rng.normal();
    v[i] = model_s21(truth.resonance, Hertz(f[i]));
    if (sigma > 0) v[i] += sigma * Complex(re, im);
  }
  return ComplexTrace(std::move(f), std::move(v));
}

std::vector<PowerSweepPoint> gen_power_sweep(const DeviceTruth& truth, std::span<const double> n_bars) {
  Rng rng = stream(truth, Stream::PowerSweep);
  std::vector<PowerSweepPoint> out;
  out.reserve(n_bars.size());
  for (std::size_t i = 0; i < n_bars.size(); ++i) {
    require(n_bars[i] > 0 && (i == 0 || n_bars[i] > n_bars[i - 1]), ErrorCode::InvalidArgument,
            "photon numbers must be positive and increasing");
    const double clean = eval_tls_loss(truth.tls, n_bars[i], truth.tls.temperature);
    const double z = rng.normal();
    const double s = truth.noise.loss_log;
    out.push_back({n_bars[i], s > 0 ? clean * std::exp(s * z) : clean, s * clean});
  }
  return out;
}

double self_consistent_qi(const DeviceTruth& truth, Watt applied_power) {
  const auto& r = truth.resonance;
  double qi = 1.0 / eval_tls_loss(truth.tls, 1e-12, truth.tls.temperature);
  // The map is a contraction: delta_i falls slowly (at most as n^-beta/2).
  for (int it = 0; it < 200; ++it) {
    const auto fit = ResonanceFit::from_qi_qc(r.f0, qi, r.q_coupling_mag, r.phi, r.background, r.geometry);
    const double next = 1.0 / eval_tls_loss(truth.tls, photon_number(fit, applied_power), truth.tls.temperature);
    if (std::abs(next - qi) <= 1e-13 * qi) return next;
    qi = next;
  }
  return qi;
}

std::vector<ComplexTrace> gen_power_sweep_traces(const DeviceTruth& truth, std::span<const double> applied_dbm,
                                                 double attenuation_db, std::size_t points,
                                                 double half_span_linewidths) {
  require(std::isfinite(attenuation_db), ErrorCode::InvalidArgument, "attenuation_db must be finite");
  std::vector<ComplexTrace> out;
  out.reserve(applied_dbm.size());
  const auto& r = truth.resonance;
  for (std::size_t k = 0; k < applied_dbm.size(); ++k) {
    const double qi = self_consistent_qi(truth, dbm_to_watt(applied_dbm[k]));
    DeviceTruth level = truth;
    level.resonance = ResonanceFit::from_qi_qc(r.f0, qi, r.q_coupling_mag, r.phi, r.background, r.geometry);
    level.seed = splitmix64(truth.seed + k);
    auto trace = gen_trace(level, linewidth_grid(level.resonance, points, half_span_linewidths));
    trace.power_dbm = applied_dbm[k] + attenuation_db;
    trace.temperature_k = truth.tls.temperature.value();
    out.push_back(std::move(trace));
  }
  return out;
}

std::vector<TempSweepPoint> gen_temp_sweep(const DeviceTruth& truth, std::span<const double> temps_k) {
  Rng rng = stream(truth, Stream::TempSweep);
  const double s = truth.noise.temp_sweep_hz;
  std::vector<TempSweepPoint> out;
  out.reserve(temps_k.size());
  for (std::size_t i = 0; i < temps_k.size(); ++i) {
    require(i == 0 || temps_k[i] > temps_k[i - 1], ErrorCode::InvalidArgument, "temperatures must increase");
    const Complex z = model_complex_frequency(truth.mb, Kelvin(temps_k[i]));
    const double a = rng.normal();
    const double b = rng.normal();
    out.push_back({Kelvin(temps_k[i]), s > 0 ? z.real() + s * a : z.real(), s > 0 ? z.imag() + s * b : z.imag()});
  }
  return out;
}

TimeSeries gen_device_temperature(const DeviceTruth& truth, const TimeSeries& bath_k) {
  require(bath_k.size() >= 2, ErrorCode::InsufficientData, "bath profile needs >= 2 samples");
  const double tau = truth.thermal_tau_s;
  require(tau > 0, ErrorCode::InvalidArgument, "thermal_tau_s must be > 0");
  std::vector<TimePoint> out(bath_k.points().begin(), bath_k.points().end());
  // Start in the steady state of the initial bath ramp.
  const double s0 = (bath_k[1].value - bath_k[0].value) / (bath_k[1].time_s - bath_k[0].time_s);
  double td = bath_k[0].value - s0 * tau;
  out[0].value = td;
  for (std::size_t k = 1; k < bath_k.size(); ++k) {
    const double dt = bath_k[k].time_s - bath_k[k - 1].time_s;
    if (dt <= 0) {
      td = bath_k[k].value;
    } else {
      const double s = (bath_k[k].value - bath_k[k - 1].value) / dt;
      td = bath_k[k].value - s * tau + (td - bath_k[k - 1].value + s * tau) * std::exp(-dt / tau);
    }
    out[k].value = td;
  }
  return TimeSeries(std::move(out), "K");
}

TimeSeries gen_thermal_response(const DeviceTruth& truth, const TimeSeries& bath_k) {
  const TimeSeries device = gen_device_temperature(truth, bath_k);
  Rng rng = stream(truth, Stream::Thermal);
  const double s = truth.noise.thermal_hz;
  return device.map_values(
      [&](double t) {
        const double f = model_complex_frequency(truth.mb, Kelvin(t)).real();
        const double z = rng.normal();
        return s > 0 ? f + s * z : f;
      },
      "Hz");
}

std::vector<CalibrationKnot> gen_calibration_knots(const DeviceTruth& truth, double t_lo_k, double t_hi_k,
                                                   double step_k) {
  require(step_k > 0 && t_hi_k > t_lo_k, ErrorCode::InvalidArgument, "invalid calibration grid");
  std::vector<CalibrationKnot> knots;
  const auto n = static_cast<int>(std::floor((t_hi_k - t_lo_k) / step_k + 1e-9));
  for (int k = 0; k <= n; ++k) {
    const double t = t_lo_k + k * step_k;
    knots.push_back({Kelvin(t), model_complex_frequency(truth.mb, Kelvin(t)).real()});
  }
  return knots;
}

BathSchedule adr_sweep_schedule() {
  BathSchedule s;
  s.times_s = {-300, -20, 20, 60, 260, 320, 520, 560, 2000};
  s.setpoints_k = {0.32, 0.32, 0.30, 0.30, 0.50, 0.50, 0.30, 0.30, 0.30};
  return s;
}

RegionBounds adr_sweep_regions() { return {{{10, 159}, {230, 379}, {300, 449}, {480, 699}}}; }

TimeSeries gen_bath_profile(const BathSchedule& sc, std::uint64_t seed) {
  require(sc.times_s.size() == sc.setpoints_k.size() && sc.times_s.size() >= 2, ErrorCode::InvalidArgument,
          "schedule needs matching times and set points");
  require(sc.natural_period_s > 0 && sc.damping > 0 && sc.substeps >= 1 && sc.sample_period_s > 0,
          ErrorCode::InvalidArgument, "invalid bath loop parameters");
  const double wn = 2.0 * std::numbers::pi / sc.natural_period_s;
  const double z = sc.damping;
  auto setpoint = [&](double t) { return interp_clamped(sc.times_s, sc.setpoints_k, t); };
  // State (T, dT/dt), RK4.
  auto deriv = [&](double t, double x, double v, double& dx, double& dv) {
    dx = v;
    dv = wn * wn * (setpoint(t) - x) - 2.0 * z * wn * v;
  };
  const double h = sc.sample_period_s / sc.substeps;
  double t = -sc.settle_s;
  double x = setpoint(t);
  double v = 0.0;
  auto advance = [&](double until) {
    while (t < until - 1e-12) {
      const double step = std::min(h, until - t);
      double k1x, k1v, k2x, k2v, k3x, k3v, k4x, k4v;
      deriv(t, x, v, k1x, k1v);
      deriv(t + step / 2, x + step / 2 * k1x, v + step / 2 * k1v, k2x, k2v);
      deriv(t + step / 2, x + step / 2 * k2x, v + step / 2 * k2v, k3x, k3v);
      deriv(t + step, x + step * k3x, v + step * k3v, k4x, k4v);
      x += step / 6 * (k1x + 2 * k2x + 2 * k3x + k4x);
      v += step / 6 * (k1v + 2 * k2v + 2 * k3v + k4v);
      t += step;
    }
    t = until;
  };
  Rng rng(seed, static_cast<std::uint64_t>(Stream::Bath));
  std::vector<TimePoint> pts;
  pts.reserve(sc.samples);
  for (std::size_t k = 0; k < sc.samples; ++k) {
    const double tk = static_cast<double>(k) * sc.sample_period_s;
    advance(tk);
    const double noise = rng.normal();
    pts.push_back({static_cast<std::int64_t>(k), tk, sc.jitter_k > 0 ? x + sc.jitter_k * noise : x});
  }
  return TimeSeries(std::move(pts), "K");
}

TimeSeries gen_phase_series(const DeviceTruth& truth, std::size_t count, double sample_period_s, double sigma_hz,
                            PhaseModel model, std::vector<double>* excursions_hz) {
  require(count >= 1 && sample_period_s > 0 && sigma_hz >= 0, ErrorCode::InvalidArgument,
          "invalid phase-series parameters");
  Rng rng = stream(truth, Stream::Phase);
  const double q = truth.resonance.q_total;
  const double f0 = truth.resonance.f0.value();
  std::vector<TimePoint> pts;
  pts.reserve(count);
  if (excursions_hz) excursions_hz->clear();
  for (std::size_t k = 0; k < count; ++k) {
    const double df = sigma_hz * rng.normal();
    const double pn = rng.normal();
    const double u = 2.0 * q * df / f0;
    double theta = model == PhaseModel::Barkhausen ? u : std::atan(u);
    if (truth.noise.phase_rad > 0) theta += truth.noise.phase_rad * pn;
    pts.push_back({static_cast<std::int64_t>(k), static_cast<double>(k) * sample_period_s, theta});
    if (excursions_hz) excursions_hz->push_back(df);
  }
  return TimeSeries(std::move(pts), "rad");
}

}  // namespace scres
