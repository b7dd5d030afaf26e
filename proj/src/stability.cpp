#include "scres/stability.hpp"

#include <cmath>
#include <numbers>
#include <sstream>

#include "scres/error.hpp"
#include "scres/numeric.hpp"

namespace scres {

double PhaseCalibration::slope_mismatch() const {
  const double b = barkhausen_slope();
  return std::abs(slope - b) / b;
}

double PhaseCalibration::linear_half_range_rad() const {
  return std::abs(slope) * 0.5 * (window_hi_hz - window_lo_hz);
}

double resonance_phase(const ResonanceFit& fit, Hertz f, Complex s21) {
  const auto& b = fit.background;
  const Complex bg = std::polar(b.amplitude, b.phase - 2.0 * std::numbers::pi * f.value() * b.delay_s);
  // 1 - s21 / bg = k (Q/|Qc|) e^{i phi} / (1 + 2iQx)
  const Complex response = (1.0 - s21 / bg) * std::polar(1.0, -fit.phi);
  return -std::arg(response);
}

PhaseCalibration calibrate_phase(std::span<const double> f_hz, std::span<const double> theta_rad,
                                 const ResonanceFit& fit, double window_linewidths) {
  validate(fit);
  require(f_hz.size() == theta_rad.size(), ErrorCode::InvalidArgument, "frequency and phase lengths differ");
  require(window_linewidths >= 0 && std::isfinite(window_linewidths), ErrorCode::InvalidArgument,
          "window_linewidths must be >= 0");
  const double f0 = fit.f0.value();
  const double half = window_linewidths * f0 / (2.0 * fit.q_total);
  std::vector<double> f;
  std::vector<double> theta;
  for (std::size_t i = 0; i < f_hz.size(); ++i) {
    if (std::abs(f_hz[i] - f0) > half) continue;
    f.push_back(f_hz[i]);
    theta.push_back(theta_rad[i]);
  }
  if (f.size() < 8) {
    std::ostringstream os;
    os << f.size() << " points inside the +-" << half << " Hz phase window (need 8)";
    throw Error(ErrorCode::WindowTooNarrow, os.str());
  }
  const auto unwrapped = unwrap_phase(theta);
  const LineFit line = fit_line(f, unwrapped);
  PhaseCalibration cal;
  cal.slope = line.slope;
  cal.intercept = line.intercept;
  cal.f0 = fit.f0;
  cal.q_total = fit.q_total;
  cal.window_lo_hz = f0 - half;
  cal.window_hi_hz = f0 + half;
  cal.points = f.size();
  return cal;
}

PhaseCalibration calibrate_phase(const ComplexTrace& trace, const ResonanceFit& fit, double window_linewidths) {
  validate(fit);
  std::vector<double> theta(trace.size());
  for (std::size_t i = 0; i < trace.size(); ++i) {
    theta[i] = resonance_phase(fit, Hertz(trace.frequencies()[i]), trace.values()[i]);
  }
  return calibrate_phase(trace.frequencies(), theta, fit, window_linewidths);
}

PhaseCalibration barkhausen_calibration(Hertz f0, double q_total, double window_linewidths) {
  require(f0.value() > 0 && q_total > 0 && window_linewidths > 0, ErrorCode::InvalidArgument,
          "f0, q_total and window must be positive");
  PhaseCalibration cal;
  cal.f0 = f0;
  cal.q_total = q_total;
  cal.slope = cal.barkhausen_slope();
  cal.intercept = -cal.slope * f0.value();
  const double half = window_linewidths * f0.value() / (2.0 * q_total);
  cal.window_lo_hz = f0.value() - half;
  cal.window_hi_hz = f0.value() + half;
  return cal;
}

Hertz phase_to_frequency_shift(const PhaseCalibration& cal, double delta_theta) {
  require(cal.slope != 0 && std::isfinite(cal.slope), ErrorCode::InvalidArgument, "calibration slope is zero");
  if (!(std::abs(delta_theta) <= cal.linear_half_range_rad())) {
    std::ostringstream os;
    os << "phase excursion " << delta_theta << " rad beyond the calibrated linear range +-"
       << cal.linear_half_range_rad() << " rad";
    throw Error(ErrorCode::OutOfLinearRange, os.str());
  }
  return Hertz(delta_theta / cal.slope);
}

TimeSeries phase_series_to_frequency(const PhaseCalibration& cal, const TimeSeries& phase_rad, double reference_rad) {
  return phase_rad.map_values([&](double th) { return phase_to_frequency_shift(cal, th - reference_rad).value(); },
                              "Hz");
}

double stability_sigma(const TimeSeries& frequencies_hz) {
  require(frequencies_hz.size() >= 2, ErrorCode::InsufficientData, "stability needs >= 2 points");
  const auto v = frequencies_hz.values();
  return population_stddev(v);
}

}  // namespace scres
