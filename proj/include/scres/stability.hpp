#pragma once

// Phase-to-frequency conversion near resonance (Barkhausen relation
// df/f = dtheta / 2Q) and frequency-stability statistics.

#include <span>

#include "scres/types.hpp"

namespace scres {

struct PhaseCalibration {
  double slope = 0.0;      // rad per Hz
  double intercept = 0.0;  // rad
  Hertz f0{};
  double q_total = 0.0;
  double window_lo_hz = 0.0;
  double window_hi_hz = 0.0;
  std::size_t points = 0;

  [[nodiscard]] double barkhausen_slope() const { return 2.0 * q_total / f0.value(); }
  /// |slope - 2Q/f0| / (2Q/f0).
  [[nodiscard]] double slope_mismatch() const;
  [[nodiscard]] bool barkhausen_consistent() const { return slope_mismatch() < 0.1; }
  /// Largest phase excursion the linear map accepts.
  [[nodiscard]] double linear_half_range_rad() const;
};

/// Phase of the resonance circle about its centre, theta = atan(2Q (f/f0 - 1))
/// for an ideal resonator: the response term is isolated by dividing out the
/// fitted background and the asymmetry rotation.
double resonance_phase(const ResonanceFit& fit, Hertz f, Complex s21);

/// Line through the unwrapped resonance phase over
/// |f - f0| <= window_linewidths * f0 / (2 q_total), i.e. window_linewidths
/// is the full window width in linewidths. Throws WindowTooNarrow with fewer
/// than 8 points inside.
PhaseCalibration calibrate_phase(const ComplexTrace& trace, const ResonanceFit& fit, double window_linewidths = 0.5);

/// Same, from phases already extracted at the given frequencies.
PhaseCalibration calibrate_phase(std::span<const double> f_hz, std::span<const double> theta_rad,
                                 const ResonanceFit& fit, double window_linewidths = 0.5);

/// Calibration with exactly the Barkhausen slope, centred on f0.
PhaseCalibration barkhausen_calibration(Hertz f0, double q_total, double window_linewidths = 0.5);

/// df = dtheta / slope. Throws OutOfLinearRange beyond linear_half_range_rad.
Hertz phase_to_frequency_shift(const PhaseCalibration& cal, double delta_theta);

/// Converts each phase sample, taken relative to reference_rad, to Hz.
TimeSeries phase_series_to_frequency(const PhaseCalibration& cal, const TimeSeries& phase_rad, double reference_rad);

/// Population standard deviation of the values. Throws InsufficientData
/// below 2 points.
double stability_sigma(const TimeSeries& frequencies_hz);

}  // namespace scres
