#pragma once

// Forward models with seeded noise: scattering traces, power sweeps,
// temperature sweeps, thermal responses to a bath profile, and phase
// monitoring series. Every generator is a pure function of its inputs; each
// draws from its own stream of the truth's seed.

#include <cstdint>
#include <span>
#include <vector>

#include "scres/mattis_bardeen.hpp"
#include "scres/thermalization.hpp"
#include "scres/tls.hpp"
#include "scres/types.hpp"

namespace scres {

struct NoiseLevels {
  double trace = 0.0;          // per-quadrature sigma, fraction of the background amplitude
  double loss_log = 0.0;       // sigma of log(delta_i)
  double temp_sweep_hz = 0.0;  // per channel, additive
  double thermal_hz = 0.0;     // additive on thermal-response frequencies
  double phase_rad = 0.0;      // additive on phase-monitoring samples
};

struct DeviceTruth {
  ResonanceFit resonance;
  TlsFit tls;
  MbTempFit mb;
  double thermal_tau_s = 10.0;
  NoiseLevels noise;
  std::uint64_t seed = 0;
};

void validate(const DeviceTruth& truth);

/// Representative device: 6 GHz notch resonator with Qi = 1e5, |Qc| = 5e4,
/// an aluminium-like temperature model with Tc = 1.14 K and 2 Delta0 / kB Tc
/// = 3.31, and a TLS loss model.
DeviceTruth representative_device(std::uint64_t seed = 0);

/// Stream identifiers, one per generator.
enum class Stream : std::uint64_t { Trace = 1, PowerSweep = 2, TempSweep = 3, Thermal = 4, Phase = 5, Bath = 6 };

/// Uniform grid of n points spanning +-half_span_linewidths f0 / Q around f0.
std::vector<double> linewidth_grid(const ResonanceFit& fit, std::size_t n, double half_span_linewidths);

ComplexTrace gen_trace(const DeviceTruth& truth, std::span<const double> f_grid_hz);

std::vector<PowerSweepPoint> gen_power_sweep(const DeviceTruth& truth, std::span<const double> n_bars);

/// One trace per applied power (dBm at the device). Qi at each power solves
/// Qi = 1 / delta_i(n(Qi)) with the photon number of the loaded resonance, so
/// the traces carry the TLS power dependence. power_dbm on each trace is the
/// source power, applied + attenuation_db. Level k draws its trace noise
/// with the seed splitmix64(seed + k).
std::vector<ComplexTrace> gen_power_sweep_traces(const DeviceTruth& truth, std::span<const double> applied_dbm,
                                                 double attenuation_db, std::size_t points = 401,
                                                 double half_span_linewidths = 4.0);

/// Self-consistent internal Q at an applied power.
double self_consistent_qi(const DeviceTruth& truth, Watt applied_power);

std::vector<TempSweepPoint> gen_temp_sweep(const DeviceTruth& truth, std::span<const double> temps_k);

/// Device temperature relaxing toward the bath with time constant
/// thermal_tau_s. Between samples the bath is taken as linear in time and the
/// first-order response is integrated exactly.
TimeSeries gen_device_temperature(const DeviceTruth& truth, const TimeSeries& bath_k);

/// Frequency of the device (real part of the temperature model) plus noise.
TimeSeries gen_thermal_response(const DeviceTruth& truth, const TimeSeries& bath_k);

/// Knots of the device's f(T) at a fixed temperature step (noiseless).
std::vector<CalibrationKnot> gen_calibration_knots(const DeviceTruth& truth, double t_lo_k, double t_hi_k,
                                                   double step_k);

/// Set-point schedule (piecewise linear in time) and a bath that tracks it
/// like an underdamped second-order loop.
struct BathSchedule {
  std::vector<double> times_s;
  std::vector<double> setpoints_k;
  double natural_period_s = 100.0;
  double damping = 0.4;
  int substeps = 20;
  double settle_s = 300.0;  // simulated before t = 0, holding the first set point
  double sample_period_s = 1.0;
  std::size_t samples = 800;
  double jitter_k = 0.0;  // additive bath-reading noise
};

/// The sweep used for thermalization comparisons: approach 300 mK from above,
/// hold, ramp to 500 mK, hold, and return.
BathSchedule adr_sweep_schedule();

/// Region intervals (sample indices) matching adr_sweep_schedule at 1 s per
/// sample: ramp onset, warm extremum, cool-down onset, cold extremum.
RegionBounds adr_sweep_regions();

TimeSeries gen_bath_profile(const BathSchedule& schedule, std::uint64_t seed);

enum class PhaseModel {
  Barkhausen,  // theta = (2Q / f0) df
  Circle,      // theta = atan(2Q df / f0), the exact resonance-circle phase
};

/// Phase samples at a fixed probe for Gaussian frequency excursions of the
/// given sigma. Returns the phase series; the excursions are written to
/// excursions_hz when provided.
TimeSeries gen_phase_series(const DeviceTruth& truth, std::size_t count, double sample_period_s, double sigma_hz,
                            PhaseModel model, std::vector<double>* excursions_hz = nullptr);

}  // namespace scres
