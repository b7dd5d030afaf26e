#pragma once

#include <vector>

#include "scres/types.hpp"

namespace scres {

struct FitConfig {
  Geometry geometry = Geometry::Notch;
  int max_iterations = 500;
  double convergence_tol = 1e-10;  // relative parameter step, in (0, 1e-2]
  bool delay_estimation = true;
};

void validate(const FitConfig& config);

/// Resonance model with background a e^{i alpha} e^{-2 pi i f tau}:
///   notch:      1 -     (Q/|Qc|) e^{i phi} / (1 + 2i Q (f/f0 - 1))
///   reflection: 1 - 2 * (Q/|Qc|) e^{i phi} / (1 + 2i Q (f/f0 - 1))
Complex model_s21(const ResonanceFit& params, Hertz f);

struct ResonanceFitReport {
  ResonanceFit fit;
  std::vector<Complex> residuals;  // model - data, per frequency
  int iterations = 0;
  double residual_rms = 0.0;
  double durbin_watson = 0.0;  // on the stacked (re, im) residuals ordered by frequency
  double noise_floor = 0.0;    // off-resonance |S| scatter relative to the baseline
  double dip_depth = 0.0;      // relative to the baseline
};

/// Least-squares fit of the complex trace to the configured geometry.
/// Throws NoDipFound, NonConvergence, or InvariantViolation.
ResonanceFitReport fit_resonance_report(const ComplexTrace& trace, const FitConfig& config = {});
ResonanceFit fit_resonance(const ComplexTrace& trace, const FitConfig& config = {});

/// Mean photon number for the notch convention:
///   n = 2 Q^2 P / (hbar w0^2 |Qc|).
double photon_number(const ResonanceFit& fit, Watt applied_power);

/// Watts from dBm.
Watt dbm_to_watt(double dbm);

/// Cable delay from a linear fit of unwrapped phase over the outer 20% of
/// the span (shared slope, separate intercepts for the two ends). Seconds.
double estimate_cable_delay(const ComplexTrace& trace);

/// Durbin-Watson statistic of a residual sequence.
double durbin_watson(std::span<const double> residuals);

}  // namespace scres
