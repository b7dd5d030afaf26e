#pragma once

// Temperature dependence of a resonator whose loss and frequency are
// perturbed by a thick superconducting film (local-limit surface impedance
// from Mattis-Bardeen conductivities) plus the resonant TLS frequency shift.

#include <span>
#include <vector>

#include "scres/types.hpp"

namespace scres {

/// Delta0 tanh(1.74 sqrt((Tc - T) / T)); exactly zero at T = Tc.
/// Throws GapClosed for T > Tc and InvalidArgument for T <= 0.
Joule gap(Kelvin t, Kelvin t_c, Joule delta0);

/// 1 / (1 + exp(E / kB T)), saturating to 0 or 1 beyond |E / kB T| = 700.
double fermi(Joule e, Kelvin t);

/// sigma1 / sigma_N and sigma2 / sigma_N.
struct ReducedConductivity {
  double s1 = 0.0;
  double s2 = 0.0;
};

struct ConductivityDiagnostics {
  double s1_error = 0.0;  // quadrature error estimates (absolute)
  double s2_error = 0.0;
  int evaluations = 0;
};

/// Mattis-Bardeen conductivity ratios for hbar w < 2 Delta_T. Both integrals
/// have inverse-square-root endpoint singularities and are evaluated with
/// tanh-sinh quadrature to <= 1e-8 relative error; the sigma1 integral is
/// truncated at Delta_T + 60 kB T. Throws PhotonAboveGap or QuadratureFailure.
ReducedConductivity sigma_ratios(RadPerSec omega, Kelvin t, Kelvin t_c, double gap_ratio,
                                 ConductivityDiagnostics* diagnostics = nullptr);

/// Rs sqrt(sigma_N) and Xs sqrt(sigma_N) in the local (thick-film) limit.
struct ReducedSurfaceImpedance {
  double rs = 0.0;
  double xs = 0.0;
};

/// Throws DegenerateConductivity when s1 = s2 = 0.
ReducedSurfaceImpedance surface_impedance(RadPerSec omega, ReducedConductivity cond);

/// Real TLS frequency shift,
///   f_ref (delta0 / pi) [Re Psi(1/2 + i hbar w / 2 pi kB T) - ln(hbar w / 2 pi kB T)].
Hertz tls_frequency_shift(double delta_tls0, RadPerSec omega, Kelvin t, Hertz f_ref);

/// Re Psi(1/2 + i x) minus ln x: the bracket of the TLS shift.
double tls_shift_bracket(double x);

/// f_r - i g (rs + i xs) + TLS shift, in Hz. Real part is f(T), imaginary
/// part is -f / 2 Qi.
Complex model_complex_frequency(const MbTempFit& fit, Kelvin t);

struct TempSweepPoint {
  Kelvin temperature{};
  double f_hz = 0.0;
  double neg_f_over_2qi_hz = 0.0;
};

inline constexpr double kInitialTcK = 1.2;
inline constexpr double kInitialGapRatio = 3.5;

/// Simultaneous least-squares fit of both channels for (f_r, g_reduced,
/// delta_tls0, Tc, gap ratio) at fixed omega. Needs >= 8 points with strictly
/// increasing temperatures. Points at or above the initial Tc estimate are
/// excluded with a warning; if too few remain, throws TemperatureAboveTc.
MbTempFit fit_temperature_sweep(std::span<const TempSweepPoint> points, RadPerSec omega);

/// Qi(T) = -Re f / (2 Im f).
double model_qi(const MbTempFit& fit, Kelvin t);

/// Temperature at which Qi falls to half its maximum, within 0.1 mK.
/// Throws NoCrossing if that never happens below 0.99 Tc.
Kelvin half_qi_temperature(const MbTempFit& fit);

}  // namespace scres
